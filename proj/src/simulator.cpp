// SPDX-License-Identifier: Apache-2.0

#include "dare/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace dare {

std::size_t LatentWorld::answer_index(std::string_view answer) const {
  const auto it = std::lower_bound(answers.begin(), answers.end(), answer);
  if (it == answers.end() || *it != answer) {
    throw ValidationError("world: unknown answer key '" + std::string(answer) + "'");
  }
  return static_cast<std::size_t>(it - answers.begin());
}

void validate_world(const LatentWorld& world) {
  const std::size_t k = world.answers.size();
  if (k == 0) throw ValidationError("world: needs at least one answer");
  if (!std::is_sorted(world.answers.begin(), world.answers.end())) {
    throw ValidationError("world: answers must be sorted by canonical key");
  }
  if (std::adjacent_find(world.answers.begin(), world.answers.end()) != world.answers.end()) {
    throw ValidationError("world: duplicate answer key");
  }
  if (world.truth.size() != k || world.trace_model.size() != k) {
    throw ValidationError("world: truth and trace_model must cover every answer");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (world.truth[i] != 0 && world.truth[i] != 1) {
      throw ValidationError("world: truth['" + world.answers[i] + "'] must be 0 or 1");
    }
  }
  if (world.kappa < 0.0 || world.kappa > 1.0) {
    throw ValidationError("world: kappa must lie in [0, 1]");
  }
  if (world.vocab_size < 1) {
    throw ValidationError("world: vocab_size must be >= 1");
  }
  if (world.modes.empty()) {
    throw ValidationError("world: needs at least one latent mode");
  }
  double mode_total = 0.0;
  for (std::size_t z = 0; z < world.modes.size(); ++z) {
    const LatentMode& mode = world.modes[z];
    const std::string where = "world: modes[" + std::to_string(z) + "]";
    if (mode.probability < 0.0) throw ValidationError(where + ": negative probability");
    mode_total += mode.probability;
    if (mode.conditional.size() != k) {
      throw ValidationError(where + ": conditional must have one entry per answer");
    }
    double cond_total = 0.0;
    for (const double p : mode.conditional) {
      if (p < 0.0) throw ValidationError(where + ": negative conditional probability");
      cond_total += p;
    }
    if (std::abs(cond_total - 1.0) > 1e-9) {
      throw ValidationError(where + ": conditional sums to " + std::to_string(cond_total) +
                            ", expected 1 within 1e-9");
    }
  }
  if (std::abs(mode_total - 1.0) > 1e-9) {
    throw ValidationError("world: mode probabilities sum to " + std::to_string(mode_total) +
                          ", expected 1 within 1e-9");
  }
  std::size_t trace_len = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const AnswerTraceModel& tm = world.trace_model[i];
    const std::string where = "world: trace_model['" + world.answers[i] + "']";
    if (tm.mean_uncertainty < 0.0 || tm.mean_uncertainty > 1.0) {
      throw ValidationError(where + ": mean_uncertainty must lie in [0, 1]");
    }
    if (tm.uncertainty_jitter < 0.0) {
      throw ValidationError(where + ": uncertainty_jitter must be >= 0");
    }
    if (tm.base_tokens.empty()) {
      throw ValidationError(where + ": base_tokens must be non-empty");
    }
    if (trace_len == 0) trace_len = tm.base_tokens.size();
    if (tm.base_tokens.size() != trace_len) {
      throw ValidationError(where + ": base_tokens length differs between answers");
    }
    for (const std::int32_t t : tm.base_tokens) {
      if (t < 0 || t >= world.vocab_size) {
        throw ValidationError(where + ": token outside vocabulary");
      }
    }
  }
}

std::vector<double> marginal_distribution(const LatentWorld& world) {
  std::vector<double> marginal(world.answers.size(), 0.0);
  for (const LatentMode& mode : world.modes) {
    for (std::size_t i = 0; i < marginal.size(); ++i) {
      marginal[i] += mode.probability * mode.conditional[i];
    }
  }
  return marginal;
}

double marginal_expected_reward(const LatentWorld& world) {
  const std::vector<double> marginal = marginal_distribution(world);
  double mu = 0.0;
  for (std::size_t i = 0; i < marginal.size(); ++i) {
    mu += marginal[i] * static_cast<double>(world.truth[i]);
  }
  return mu;
}

std::vector<double> blended_conditional(const LatentWorld& world, std::size_t mode_index) {
  const std::vector<double> marginal = marginal_distribution(world);
  const LatentMode& mode = world.modes.at(mode_index);
  std::vector<double> blended(marginal.size());
  for (std::size_t i = 0; i < blended.size(); ++i) {
    blended[i] = (1.0 - world.kappa) * marginal[i] + world.kappa * mode.conditional[i];
  }
  return blended;
}

namespace {

std::size_t draw_mode(const LatentWorld& world, rng::Stream& stream) {
  std::vector<double> probs(world.modes.size());
  for (std::size_t z = 0; z < probs.size(); ++z) probs[z] = world.modes[z].probability;
  return stream.categorical(probs);
}

}  // namespace

std::vector<std::size_t> sample_answer_indices(const LatentWorld& world, std::size_t count,
                                               rng::Stream& stream) {
  if (count < 1) throw ValidationError("sample_answer_indices: count must be >= 1");
  const std::size_t z = draw_mode(world, stream);
  const std::vector<double> blended = blended_conditional(world, z);
  std::vector<std::size_t> indices(count);
  for (std::size_t i = 0; i < count; ++i) indices[i] = stream.categorical(blended);
  return indices;
}

Rollout make_rollout(const LatentWorld& world, std::size_t answer_index,
                     rng::Stream& stream) {
  const AnswerTraceModel& tm = world.trace_model.at(answer_index);
  const double max_entropy = std::log(static_cast<double>(world.vocab_size));

  Rollout r;
  r.answer = world.answers[answer_index];

  // one uncertainty level per rollout, spread uniformly across the trace
  const double u = stream.truncated_normal(tm.mean_uncertainty, tm.uncertainty_jitter,
                                           0.0, 1.0);
  r.entropy_trace.assign(tm.base_tokens.size(), u * max_entropy);

  // copy the answer's template; resample each position with probability 1 - kappa
  r.tokens = tm.base_tokens;
  const double resample = 1.0 - world.kappa;
  for (std::int32_t& token : r.tokens) {
    if (stream.uniform() < resample) {
      token = static_cast<std::int32_t>(
          stream.uniform_int(static_cast<std::uint64_t>(world.vocab_size)));
    }
  }
  return r;
}

Population sample_population(const LatentWorld& world, std::size_t count,
                             rng::Stream& stream, std::string query_id) {
  if (count < 1) throw ValidationError("sample_population: count must be >= 1");
  const std::size_t z = draw_mode(world, stream);
  const std::vector<double> blended = blended_conditional(world, z);

  Population pop;
  pop.query_id = std::move(query_id);
  pop.vocab_size = world.vocab_size;
  pop.rollouts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t answer = stream.categorical(blended);
    pop.rollouts.push_back(make_rollout(world, answer, stream));
  }
  return pop;
}

Population sample_population(const LatentWorld& world, std::size_t count,
                             std::uint64_t seed, std::string query_id) {
  rng::Stream stream = rng::substream(seed, "population");
  return sample_population(world, count, stream, std::move(query_id));
}

double rollout_correlation(const Population& population) {
  if (population.size() < 2) {
    throw ValidationError("rollout_correlation: needs at least two rollouts");
  }
  const std::size_t v = static_cast<std::size_t>(population.vocab_size);
  std::vector<std::vector<std::int32_t>> counts(population.size(),
                                                std::vector<std::int32_t>(v, 0));
  for (std::size_t i = 0; i < population.size(); ++i) {
    for (const std::int32_t t : population.rollouts[i].tokens) {
      counts[i][static_cast<std::size_t>(t)] += 1;
    }
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < population.size(); ++a) {
    for (std::size_t b = a + 1; b < population.size(); ++b) {
      std::int64_t inter = 0;
      for (std::size_t t = 0; t < v; ++t) inter += std::min(counts[a][t], counts[b][t]);
      const std::int64_t len_a =
          static_cast<std::int64_t>(population.rollouts[a].tokens.size());
      const std::int64_t len_b =
          static_cast<std::int64_t>(population.rollouts[b].tokens.size());
      const std::int64_t uni = len_a + len_b - inter;
      total += uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
      pairs += 1;
    }
  }
  return total / static_cast<double>(pairs);
}

}  // namespace dare
