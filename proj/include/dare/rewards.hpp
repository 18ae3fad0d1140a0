// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reward estimation for unlabeled rollout populations.
//
// Two estimator families:
//
//  - Majority voting (MV): the most frequent answer becomes a pseudo label
//    and each rollout is rewarded 1/0 on agreement with it.
//
//  - DARE: rewards come from an uncertainty-aware empirical distribution over
//    answers instead of a single consensus label. The pipeline is
//      (a) per-answer counts and mean trace uncertainty,
//      (b) uncertainty-weighted distribution p_hat,
//      (c) exploration bonus for infrequent, low-uncertainty answers,
//      (d) support pruning below a threshold tau + renormalization to p_tilde,
//      (e) final reward p_tilde + alpha * bonus, with the bonus recomputed on
//          the surviving rollouts only.
//
// The partial modes (dist_only, dare_no_bonus, dare_no_prune) switch
// individual pipeline stages off for ablations.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dare/rollout.hpp"

namespace dare {

enum class RewardMode { mv, dare, dare_no_bonus, dare_no_prune, dist_only };

enum class ShapingVariant {
  linear_penalty,       // n / (u + eps)
  sqrt_penalty,         // n / sqrt(u + eps)
  exponential_penalty,  // n * exp(-lambda u)
  log_penalty,          // n / ln(1 + u + eps)
  frequency_only,       // n
};

enum class BonusVariant {
  paper_product,   // (1 - n/M) (1 - u)
  linear_inverse,  // 1/(n+1) * (1 - u)
  log_inverse,     // ln((M+1)/(n+1)) * (1 - u)
  none,
};

struct RewardConfig {
  RewardMode mode = RewardMode::dare;
  ShapingVariant shaping = ShapingVariant::linear_penalty;
  BonusVariant bonus = BonusVariant::paper_product;
  double alpha = 0.1;             // exploration strength, in [0, 1]
  double prune_threshold = 0.05;  // tau, in [0, 1)
  double epsilon = 1e-6;          // stabilizer in the shaping denominators
  double lambda = 1.0;            // rate of the exponential penalty
  bool exclude_pruned = false;    // drop pruned rollouts from the policy-update
                                  // group instead of rewarding them 0

  void validate() const;  // throws ValidationError
};

struct RewardVector {
  std::vector<double> rewards;              // index-aligned with the population
  std::optional<std::string> pseudo_label;  // set in MV mode only
  std::vector<std::string> pruned_answers;  // sorted
  std::map<std::string, double> p_hat;      // pre-prune distribution
  std::map<std::string, double> p_tilde;    // post-prune distribution
};

// Enum <-> string spellings shared by JSON files and CLI flags.
std::string_view to_string(RewardMode mode);
std::string_view to_string(ShapingVariant shaping);
std::string_view to_string(BonusVariant bonus);
RewardMode reward_mode_from_string(std::string_view s);
ShapingVariant shaping_from_string(std::string_view s);
BonusVariant bonus_from_string(std::string_view s);

/// Fills weight and probability in the stats table: weight applies the
/// configured shaping to (count, mean_uncertainty); probability normalizes
/// the weights to sum to 1.
AnswerStatsTable uncertainty_weighted_distribution(AnswerStatsTable stats,
                                                   const RewardConfig& cfg);

/// Most frequent answer, ties broken toward the smallest canonical key.
/// Uncertainty is ignored: this is the plain consensus baseline.
std::string mv_pseudo_label(const AnswerStatsTable& stats);

/// Reward 1 for rollouts matching the pseudo label, else 0. The label must
/// occur in the population.
RewardVector mv_rewards(const Population& population, const std::string& pseudo_label);

/// Bonus for one answer given the group size. Requires 1 <= count <= group_size.
double exploration_bonus(const AnswerStat& stat, std::int64_t group_size,
                         const RewardConfig& cfg);

/// Removes entries with probability < threshold and renormalizes survivors.
/// If everything falls below the threshold, the argmax-probability entry is
/// retained alone with probability 1 so the reward group never degenerates
/// to all zeros.
AnswerStatsTable prune_and_renormalize(const AnswerStatsTable& stats, double threshold);

/// Full distribution-aware pipeline for the non-MV modes. Pruned rollouts
/// receive reward 0 and are listed in pruned_answers.
RewardVector dare_rewards(const Population& population, const RewardConfig& cfg);

/// Dispatches on cfg.mode (MV vs the DARE family).
RewardVector estimate_rewards(const Population& population, const RewardConfig& cfg);

}  // namespace dare
