// SPDX-License-Identifier: Apache-2.0

#include "dare/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace dare {

void RewardConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) {
    throw ValidationError("reward config: alpha must lie in [0, 1]");
  }
  if (prune_threshold < 0.0 || prune_threshold >= 1.0) {
    throw ValidationError("reward config: prune_threshold must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw ValidationError("reward config: epsilon must be > 0");
  }
  if (!(lambda > 0.0)) {
    throw ValidationError("reward config: lambda must be > 0");
  }
}

std::string_view to_string(RewardMode mode) {
  switch (mode) {
    case RewardMode::mv: return "mv";
    case RewardMode::dare: return "dare";
    case RewardMode::dare_no_bonus: return "dare_no_bonus";
    case RewardMode::dare_no_prune: return "dare_no_prune";
    case RewardMode::dist_only: return "dist_only";
  }
  return "?";
}

std::string_view to_string(ShapingVariant shaping) {
  switch (shaping) {
    case ShapingVariant::linear_penalty: return "linear_penalty";
    case ShapingVariant::sqrt_penalty: return "sqrt_penalty";
    case ShapingVariant::exponential_penalty: return "exponential_penalty";
    case ShapingVariant::log_penalty: return "log_penalty";
    case ShapingVariant::frequency_only: return "frequency_only";
  }
  return "?";
}

std::string_view to_string(BonusVariant bonus) {
  switch (bonus) {
    case BonusVariant::paper_product: return "paper_product";
    case BonusVariant::linear_inverse: return "linear_inverse";
    case BonusVariant::log_inverse: return "log_inverse";
    case BonusVariant::none: return "none";
  }
  return "?";
}

RewardMode reward_mode_from_string(std::string_view s) {
  if (s == "mv") return RewardMode::mv;
  if (s == "dare") return RewardMode::dare;
  if (s == "dare_no_bonus") return RewardMode::dare_no_bonus;
  if (s == "dare_no_prune") return RewardMode::dare_no_prune;
  if (s == "dist_only") return RewardMode::dist_only;
  throw ValidationError("unknown reward mode: " + std::string(s));
}

ShapingVariant shaping_from_string(std::string_view s) {
  if (s == "linear_penalty") return ShapingVariant::linear_penalty;
  if (s == "sqrt_penalty") return ShapingVariant::sqrt_penalty;
  if (s == "exponential_penalty") return ShapingVariant::exponential_penalty;
  if (s == "log_penalty") return ShapingVariant::log_penalty;
  if (s == "frequency_only") return ShapingVariant::frequency_only;
  throw ValidationError("unknown shaping variant: " + std::string(s));
}

BonusVariant bonus_from_string(std::string_view s) {
  if (s == "paper_product") return BonusVariant::paper_product;
  if (s == "linear_inverse") return BonusVariant::linear_inverse;
  if (s == "log_inverse") return BonusVariant::log_inverse;
  if (s == "none") return BonusVariant::none;
  throw ValidationError("unknown bonus variant: " + std::string(s));
}

namespace {

double shaping_weight(std::int64_t count, double uncertainty, const RewardConfig& cfg) {
  const double n = static_cast<double>(count);
  const double u = uncertainty;
  switch (cfg.shaping) {
    case ShapingVariant::linear_penalty: return n / (u + cfg.epsilon);
    case ShapingVariant::sqrt_penalty: return n / std::sqrt(u + cfg.epsilon);
    case ShapingVariant::exponential_penalty: return n * std::exp(-cfg.lambda * u);
    case ShapingVariant::log_penalty: return n / std::log1p(u + cfg.epsilon);
    case ShapingVariant::frequency_only: return n;
  }
  return n;
}

bool prune_enabled(RewardMode mode) {
  return mode == RewardMode::dare || mode == RewardMode::dare_no_bonus;
}

bool bonus_enabled(RewardMode mode) {
  return mode == RewardMode::dare || mode == RewardMode::dare_no_prune;
}

}  // namespace

AnswerStatsTable uncertainty_weighted_distribution(AnswerStatsTable stats,
                                                   const RewardConfig& cfg) {
  cfg.validate();
  if (stats.empty()) {
    throw ValidationError("uncertainty_weighted_distribution: empty stats table");
  }
  double total = 0.0;
  for (AnswerStat& s : stats) {
    s.weight = shaping_weight(s.count, s.mean_uncertainty, cfg);
    total += s.weight;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::logic_error("uncertainty_weighted_distribution: weights sum to " +
                           std::to_string(total));
  }
  for (AnswerStat& s : stats) s.probability = s.weight / total;
  return stats;
}

std::string mv_pseudo_label(const AnswerStatsTable& stats) {
  if (stats.empty()) {
    throw ValidationError("mv_pseudo_label: empty stats table");
  }
  // table is sorted by key, so the first max wins ties toward the smallest key
  const AnswerStat* best = &stats.front();
  for (const AnswerStat& s : stats) {
    if (s.count > best->count) best = &s;
  }
  return best->answer;
}

RewardVector mv_rewards(const Population& population, const std::string& pseudo_label) {
  validate_population(population);
  RewardVector out;
  out.rewards.reserve(population.size());
  bool present = false;
  for (const Rollout& r : population.rollouts) {
    const bool match = r.answer == pseudo_label;
    present = present || match;
    out.rewards.push_back(match ? 1.0 : 0.0);
  }
  if (!present) {
    throw ValidationError("mv_rewards: pseudo label '" + pseudo_label +
                          "' does not occur in the population");
  }
  out.pseudo_label = pseudo_label;
  const double m = static_cast<double>(population.size());
  for (const AnswerStat& s : answer_stats(population)) {
    out.p_hat[s.answer] = static_cast<double>(s.count) / m;
  }
  return out;
}

double exploration_bonus(const AnswerStat& stat, std::int64_t group_size,
                         const RewardConfig& cfg) {
  if (stat.count < 1 || stat.count > group_size) {
    throw ValidationError("exploration_bonus: count " + std::to_string(stat.count) +
                          " outside [1, " + std::to_string(group_size) + "]");
  }
  if (stat.mean_uncertainty < 0.0 || stat.mean_uncertainty > 1.0) {
    throw ValidationError("exploration_bonus: mean_uncertainty outside [0, 1]");
  }
  const double n = static_cast<double>(stat.count);
  const double m = static_cast<double>(group_size);
  const double confidence = 1.0 - stat.mean_uncertainty;
  switch (cfg.bonus) {
    case BonusVariant::paper_product: return (1.0 - n / m) * confidence;
    case BonusVariant::linear_inverse: return confidence / (n + 1.0);
    case BonusVariant::log_inverse: return std::log((m + 1.0) / (n + 1.0)) * confidence;
    case BonusVariant::none: return 0.0;
  }
  return 0.0;
}

AnswerStatsTable prune_and_renormalize(const AnswerStatsTable& stats, double threshold) {
  if (stats.empty()) {
    throw ValidationError("prune_and_renormalize: empty stats table");
  }
  AnswerStatsTable retained;
  double total = 0.0;
  for (const AnswerStat& s : stats) {
    if (s.probability >= threshold) {
      retained.push_back(s);
      total += s.probability;
    }
  }
  if (retained.empty()) {
    // everything fell below the threshold: keep the argmax entry so the
    // reward group never degenerates to all zeros
    const AnswerStat* best = &stats.front();
    for (const AnswerStat& s : stats) {
      if (s.probability > best->probability) best = &s;
    }
    retained.push_back(*best);
    retained.front().probability = 1.0;
    return retained;
  }
  for (AnswerStat& s : retained) s.probability /= total;
  return retained;
}

RewardVector dare_rewards(const Population& population, const RewardConfig& cfg) {
  cfg.validate();
  if (cfg.mode == RewardMode::mv) {
    throw ValidationError("dare_rewards: mode 'mv' is served by mv_rewards");
  }
  const AnswerStatsTable base = uncertainty_weighted_distribution(
      answer_stats(population), cfg);

  const double tau = prune_enabled(cfg.mode) ? cfg.prune_threshold : 0.0;
  const AnswerStatsTable retained = prune_and_renormalize(base, tau);

  // all rollouts of a retained answer survive, so the recomputed counts and
  // uncertainties equal the originals; only the group size shrinks
  std::int64_t surviving = 0;
  for (const AnswerStat& s : retained) surviving += s.count;

  RewardConfig bonus_cfg = cfg;
  if (!bonus_enabled(cfg.mode)) bonus_cfg.bonus = BonusVariant::none;

  std::unordered_map<std::string_view, double> reward_by_answer;
  RewardVector out;
  for (const AnswerStat& s : retained) {
    const double bonus = exploration_bonus(s, surviving, bonus_cfg);
    reward_by_answer.emplace(s.answer, s.probability + cfg.alpha * bonus);
    out.p_tilde[s.answer] = s.probability;
  }
  for (const AnswerStat& s : base) {
    out.p_hat[s.answer] = s.probability;
    if (!out.p_tilde.contains(s.answer)) out.pruned_answers.push_back(s.answer);
  }

  out.rewards.reserve(population.size());
  for (const Rollout& r : population.rollouts) {
    const auto it = reward_by_answer.find(r.answer);
    out.rewards.push_back(it == reward_by_answer.end() ? 0.0 : it->second);
  }
  return out;
}

RewardVector estimate_rewards(const Population& population, const RewardConfig& cfg) {
  cfg.validate();
  if (cfg.mode == RewardMode::mv) {
    return mv_rewards(population, mv_pseudo_label(answer_stats(population)));
  }
  return dare_rewards(population, cfg);
}

}  // namespace dare
