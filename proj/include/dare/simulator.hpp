// SPDX-License-Identifier: Apache-2.0
#pragma once

// Latent-variable rollout simulator.
//
// A LatentWorld generates populations the way a stochastic decoder would:
// one latent mode Z is drawn per population, then answers are sampled i.i.d.
// from a blend of the mode's conditional distribution and the marginal,
// controlled by the correlation knob kappa:
//
//   kappa = 0  ->  plain i.i.d. sampling from the marginal
//   kappa = 1  ->  fully latent-conditional sampling (exchangeable, correlated)
//
// Entropy traces and token sequences are fabricated per answer from a small
// trace model, so generated populations carry everything the reward
// estimators and the token-overlap correlation proxy consume.
//
// Sampling takes an explicit Stream; nothing here owns global state.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dare/rng.hpp"
#include "dare/rollout.hpp"

namespace dare {

struct AnswerTraceModel {
  double mean_uncertainty = 0.5;    // mu_u, in [0, 1]
  double uncertainty_jitter = 0.0;  // sigma_u >= 0
  std::vector<std::int32_t> base_tokens;
};

struct LatentMode {
  double probability = 0.0;
  std::vector<double> conditional;  // aligned with LatentWorld::answers
};

struct LatentWorld {
  std::vector<std::string> answers;          // sorted canonical keys
  std::vector<int> truth;                    // ground-truth reward, 0 or 1, per answer
  std::vector<AnswerTraceModel> trace_model;  // per answer
  std::vector<LatentMode> modes;
  double kappa = 1.0;       // correlation knob, in [0, 1]
  std::int32_t vocab_size = 0;

  /// Index of an answer key; throws ValidationError when absent.
  std::size_t answer_index(std::string_view answer) const;
};

void validate_world(const LatentWorld& world);

/// Exact mixture sum_z P(z) p(y|z), aligned with world.answers. Independent
/// of kappa: the blend leaves the marginal unchanged.
std::vector<double> marginal_distribution(const LatentWorld& world);

/// mu = sum_y p(y) R(y), the target that consensus labeling fails to track
/// under correlated rollouts.
double marginal_expected_reward(const LatentWorld& world);

/// The answer distribution rollouts are drawn from once mode `mode_index`
/// has been realized: (1-kappa) * marginal + kappa * conditional.
std::vector<double> blended_conditional(const LatentWorld& world, std::size_t mode_index);

/// Answers-only sampling: draws Z once, then M answer indices. This is the
/// fast path for the Monte Carlo theory checks, which never look at traces.
std::vector<std::size_t> sample_answer_indices(const LatentWorld& world, std::size_t count,
                                               rng::Stream& stream);

/// Fabricates one rollout for a realized answer: a constant entropy trace at
/// the drawn per-rollout uncertainty level, and the answer's token template
/// with each position resampled uniformly with probability 1 - kappa.
Rollout make_rollout(const LatentWorld& world, std::size_t answer_index,
                     rng::Stream& stream);

Population sample_population(const LatentWorld& world, std::size_t count,
                             rng::Stream& stream, std::string query_id = "sim");

/// Deterministic-by-seed variant; all draws derive from `seed` alone.
Population sample_population(const LatentWorld& world, std::size_t count,
                             std::uint64_t seed, std::string query_id = "sim");

/// Mean multiset Jaccard similarity of token sequences over all unordered
/// rollout pairs; in [0, 1]. Requires at least two rollouts.
double rollout_correlation(const Population& population);

}  // namespace dare
