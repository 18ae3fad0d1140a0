// SPDX-License-Identifier: Apache-2.0

#include "dare/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dare {

namespace {

constexpr double kAdvantageEpsilon = 1e-8;
constexpr double kLogFloor = 1e-12;  // probability floor before taking logs

std::vector<double> softmax(const std::vector<double>& logits) {
  const double shift = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - shift);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

}  // namespace

ToyPolicy ToyPolicy::uniform(std::size_t num_answers) {
  return ToyPolicy{std::vector<double>(num_answers, 0.0)};
}

ToyPolicy ToyPolicy::from_world(const LatentWorld& world) {
  const std::vector<double> marginal = marginal_distribution(world);
  ToyPolicy policy;
  policy.logits.reserve(marginal.size());
  for (const double p : marginal) policy.logits.push_back(std::log(std::max(p, kLogFloor)));
  return policy;
}

std::vector<double> ToyPolicy::probabilities() const { return softmax(logits); }

double ToyPolicy::entropy() const {
  double h = 0.0;
  for (const double p : softmax(logits)) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

void AdaptConfig::validate() const {
  validate_world(world);
  reward.validate();
  if (steps < 1) throw ValidationError("adapt config: steps must be >= 1");
  if (rollouts_per_step < 2) {
    throw ValidationError("adapt config: rollouts_per_step must be >= 2");
  }
  if (learning_rate < 0.0) {
    throw ValidationError("adapt config: learning_rate must be >= 0");
  }
  if (eval_samples < 0) throw ValidationError("adapt config: eval_samples must be >= 0");
  if (!initial_logits.empty() && initial_logits.size() != world.answers.size()) {
    throw ValidationError("adapt config: initial_logits must have one entry per answer");
  }
}

double AdaptTrace::final_pass_at_1() const {
  return steps.empty() ? initial_pass_at_1 : steps.back().pass_at_1;
}

std::optional<int> AdaptTrace::steps_to_threshold(double threshold) const {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].pass_at_1 >= threshold) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

Population policy_rollouts(const ToyPolicy& policy, const LatentWorld& world,
                           std::size_t count, rng::Stream& stream) {
  if (count < 1) throw ValidationError("policy_rollouts: count must be >= 1");
  if (policy.logits.size() != world.answers.size()) {
    throw ValidationError("policy_rollouts: policy and world answer counts differ");
  }

  std::vector<double> effective = policy.logits;
  if (world.kappa > 0.0 && world.modes.size() > 1) {
    // one latent tilt per group: the mode's log-likelihood ratio against the
    // marginal, scaled by kappa. A policy sitting at the marginal therefore
    // reproduces the world's own conditional sampling at kappa = 1.
    std::vector<double> mode_probs(world.modes.size());
    for (std::size_t z = 0; z < mode_probs.size(); ++z) {
      mode_probs[z] = world.modes[z].probability;
    }
    const std::size_t z = stream.categorical(mode_probs);
    const std::vector<double> marginal = marginal_distribution(world);
    for (std::size_t y = 0; y < effective.size(); ++y) {
      const double offset = std::log(std::max(world.modes[z].conditional[y], kLogFloor)) -
                            std::log(std::max(marginal[y], kLogFloor));
      effective[y] += world.kappa * offset;
    }
  }

  const std::vector<double> probs = softmax(effective);
  Population pop;
  pop.query_id = "policy";
  pop.vocab_size = world.vocab_size;
  pop.rollouts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    pop.rollouts.push_back(make_rollout(world, stream.categorical(probs), stream));
  }
  return pop;
}

std::vector<double> grpo_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw ValidationError("grpo_advantages: group must hold at least two rewards");
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double variance = 0.0;
  for (const double r : rewards) variance += (r - mean) * (r - mean);
  variance /= n;  // population variance
  const double denom = std::sqrt(variance) + kAdvantageEpsilon;
  std::vector<double> advantages(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    advantages[i] = (rewards[i] - mean) / denom;
  }
  return advantages;
}

ToyPolicy grpo_update(const ToyPolicy& policy, std::span<const std::size_t> answer_indices,
                      std::span<const double> advantages, double learning_rate) {
  if (answer_indices.size() != advantages.size()) {
    throw ValidationError("grpo_update: answers and advantages must align");
  }
  const bool all_zero =
      std::all_of(advantages.begin(), advantages.end(), [](double a) { return a == 0.0; });
  if (all_zero || learning_rate == 0.0) return policy;  // bit-identical logits

  const std::vector<double> probs = policy.probabilities();
  std::vector<double> gradient(policy.logits.size(), 0.0);
  for (std::size_t i = 0; i < answer_indices.size(); ++i) {
    const std::size_t y = answer_indices[i];
    if (y >= gradient.size()) {
      throw ValidationError("grpo_update: answer index out of range");
    }
    for (std::size_t j = 0; j < gradient.size(); ++j) {
      gradient[j] += advantages[i] * ((j == y ? 1.0 : 0.0) - probs[j]);
    }
  }
  ToyPolicy updated = policy;
  for (std::size_t j = 0; j < gradient.size(); ++j) {
    updated.logits[j] += learning_rate * gradient[j];
  }
  return updated;
}

ToyPolicy grpo_update(const ToyPolicy& policy, const LatentWorld& world,
                      const Population& population, std::span<const double> advantages,
                      double learning_rate) {
  std::vector<std::size_t> indices;
  indices.reserve(population.size());
  for (const Rollout& r : population.rollouts) {
    indices.push_back(world.answer_index(r.answer));
  }
  return grpo_update(policy, indices, advantages, learning_rate);
}

double pass_at_1(const ToyPolicy& policy, const LatentWorld& world, int eval_samples,
                 rng::Stream& stream) {
  const std::vector<double> probs = policy.probabilities();
  if (eval_samples == 0) {
    double p = 0.0;
    for (std::size_t y = 0; y < probs.size(); ++y) {
      p += probs[y] * static_cast<double>(world.truth[y]);
    }
    return p;
  }
  int correct = 0;
  for (int i = 0; i < eval_samples; ++i) {
    correct += world.truth[stream.categorical(probs)];
  }
  return static_cast<double>(correct) / static_cast<double>(eval_samples);
}

AdaptTrace run_adaptation(const AdaptConfig& cfg) {
  cfg.validate();
  rng::Stream rollout_stream = rng::substream(cfg.seed, "adapt/rollouts");
  rng::Stream eval_stream = rng::substream(cfg.seed, "adapt/eval");

  ToyPolicy policy = cfg.initial_logits.empty() ? ToyPolicy::from_world(cfg.world)
                                                : ToyPolicy{cfg.initial_logits};

  AdaptTrace trace;
  trace.initial_pass_at_1 = pass_at_1(policy, cfg.world, cfg.eval_samples, eval_stream);
  trace.steps.reserve(static_cast<std::size_t>(cfg.steps));

  for (int step = 0; step < cfg.steps; ++step) {
    const Population pop = policy_rollouts(
        policy, cfg.world, static_cast<std::size_t>(cfg.rollouts_per_step), rollout_stream);
    const RewardVector rv = estimate_rewards(pop, cfg.reward);

    std::vector<std::size_t> group_indices;   // rollouts entering the update
    std::vector<double> group_rewards;
    group_indices.reserve(pop.size());
    group_rewards.reserve(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (cfg.reward.exclude_pruned) {
        const std::string& answer = pop.rollouts[i].answer;
        if (std::find(rv.pruned_answers.begin(), rv.pruned_answers.end(), answer) !=
            rv.pruned_answers.end()) {
          continue;
        }
      }
      group_indices.push_back(cfg.world.answer_index(pop.rollouts[i].answer));
      group_rewards.push_back(rv.rewards[i]);
    }
    if (group_rewards.size() >= 2) {
      const std::vector<double> advantages = grpo_advantages(group_rewards);
      policy = grpo_update(policy, group_indices, advantages, cfg.learning_rate);
    }

    AdaptStepRecord record;
    record.pass_at_1 = pass_at_1(policy, cfg.world, cfg.eval_samples, eval_stream);
    record.policy_entropy = policy.entropy();
    const double m = static_cast<double>(rv.rewards.size());
    const double mean_reward =
        std::accumulate(rv.rewards.begin(), rv.rewards.end(), 0.0) / m;
    double variance = 0.0;
    for (const double r : rv.rewards) variance += (r - mean_reward) * (r - mean_reward);
    record.mean_reward = mean_reward;
    record.reward_variance = variance / m;
    const std::string label = mv_pseudo_label(answer_stats(pop));
    record.pseudo_label_correct = cfg.world.truth[cfg.world.answer_index(label)];
    record.rollout_correlation = rollout_correlation(pop);
    trace.steps.push_back(record);
  }
  return trace;
}

std::vector<SweepRow> correlation_sweep(const AdaptConfig& base,
                                        std::span<const double> kappa_grid, int repeats,
                                        std::span<const RewardMode> modes) {
  if (repeats < 1) throw ValidationError("correlation_sweep: repeats must be >= 1");
  if (kappa_grid.empty()) throw ValidationError("correlation_sweep: empty kappa grid");

  std::vector<SweepRow> rows;
  for (const double kappa : kappa_grid) {
    if (kappa < 0.0 || kappa > 1.0) {
      throw ValidationError("correlation_sweep: kappa must lie in [0, 1]");
    }
    for (const RewardMode mode : modes) {
      SweepRow row;
      row.kappa = kappa;
      row.mode = mode;
      row.repeats = repeats;
      double final_sum = 0.0;
      double correlation_sum = 0.0;
      std::uint64_t correlation_count = 0;
      for (int rep = 0; rep < repeats; ++rep) {
        AdaptConfig cfg = base;
        cfg.world.kappa = kappa;
        cfg.reward.mode = mode;
        // repeats are seed-paired across kappas and modes
        cfg.seed = rng::derive_seed(base.seed, "sweep", static_cast<std::uint64_t>(rep));
        const AdaptTrace trace = run_adaptation(cfg);
        final_sum += trace.final_pass_at_1();
        for (const AdaptStepRecord& record : trace.steps) {
          correlation_sum += record.rollout_correlation;
          correlation_count += 1;
        }
      }
      row.final_pass_at_1 = final_sum / static_cast<double>(repeats);
      row.measured_correlation =
          correlation_sum / static_cast<double>(correlation_count);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace dare
