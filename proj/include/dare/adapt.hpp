// SPDX-License-Identifier: Apache-2.0
#pragma once

// Toy test-time reinforcement learning loop.
//
// The policy is a bare logit vector over the world's answer vocabulary.
// Each step samples a group of rollouts from the policy (optionally tilted
// by a latent logit offset so rollouts stay correlated the way the world's
// sampler is), scores them with MV or DARE rewards, standardizes the rewards
// into group-relative advantages, and takes one score-function gradient step.
//
// A single run is strictly sequential; sweeps launch independent seeded runs.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dare/rewards.hpp"
#include "dare/rng.hpp"
#include "dare/simulator.hpp"

namespace dare {

struct ToyPolicy {
  std::vector<double> logits;  // one per world answer, same order

  static ToyPolicy uniform(std::size_t num_answers);
  /// Initialized at the world's marginal answer distribution.
  static ToyPolicy from_world(const LatentWorld& world);

  std::vector<double> probabilities() const;  // softmax(logits)
  double entropy() const;                     // nats
};

struct AdaptConfig {
  LatentWorld world;
  RewardConfig reward;
  int steps = 300;
  int rollouts_per_step = 16;   // M
  double learning_rate = 0.05;  // eta
  int eval_samples = 0;         // 0 requests the closed-form pass@1
  std::uint64_t seed = 0;
  std::vector<double> initial_logits;  // empty = ln(marginal)

  void validate() const;
};

struct AdaptStepRecord {
  double pass_at_1 = 0.0;
  double policy_entropy = 0.0;
  double mean_reward = 0.0;
  int pseudo_label_correct = 0;
  double rollout_correlation = 0.0;
  double reward_variance = 0.0;
};

struct AdaptTrace {
  double initial_pass_at_1 = 0.0;
  std::vector<AdaptStepRecord> steps;

  double final_pass_at_1() const;
  /// First 1-based step whose pass@1 meets the threshold; nullopt = never.
  std::optional<int> steps_to_threshold(double threshold) const;
};

/// Samples `count` rollouts from the policy. When the world carries latent
/// correlation (kappa > 0), one mode is drawn per group and its log-ratio
/// offset, scaled by kappa, is added to the logits before sampling, so the
/// group is exchangeable-but-correlated exactly like the world's own sampler.
/// Traces and tokens come from the world's per-answer trace model.
Population policy_rollouts(const ToyPolicy& policy, const LatentWorld& world,
                           std::size_t count, rng::Stream& stream);

/// Group-standardized advantages: (r - mean) / (population std + 1e-8).
/// Requires at least two rewards.
std::vector<double> grpo_advantages(std::span<const double> rewards);

/// One score-function ascent step on sum_i A_i log pi(y_i):
/// logits += eta * sum_i A_i (onehot(y_i) - softmax(logits)).
ToyPolicy grpo_update(const ToyPolicy& policy, std::span<const std::size_t> answer_indices,
                      std::span<const double> advantages, double learning_rate);

/// Convenience overload mapping the population's answer keys through the world.
ToyPolicy grpo_update(const ToyPolicy& policy, const LatentWorld& world,
                      const Population& population, std::span<const double> advantages,
                      double learning_rate);

/// Probability that one sampled answer is correct. eval_samples = 0 returns
/// the closed form sum_y pi(y) R(y); otherwise a Monte Carlo estimate.
double pass_at_1(const ToyPolicy& policy, const LatentWorld& world, int eval_samples,
                 rng::Stream& stream);

AdaptTrace run_adaptation(const AdaptConfig& cfg);

struct SweepRow {
  double kappa = 0.0;
  double measured_correlation = 0.0;
  RewardMode mode = RewardMode::mv;
  double final_pass_at_1 = 0.0;
  int repeats = 0;
};

/// For each kappa and each reward mode, runs `repeats` seed-paired
/// adaptations on the world with its correlation knob overridden, averaging
/// the final pass@1 and the measured token-overlap correlation.
std::vector<SweepRow> correlation_sweep(const AdaptConfig& base,
                                        std::span<const double> kappa_grid, int repeats,
                                        std::span<const RewardMode> modes);

}  // namespace dare
