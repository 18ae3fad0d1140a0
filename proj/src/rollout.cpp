// SPDX-License-Identifier: Apache-2.0

#include "dare/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace dare {

namespace {

std::string describe(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

double token_entropy(std::span<const double> distribution) {
  if (distribution.empty()) {
    throw ValidationError("token_entropy: distribution must be non-empty");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < distribution.size(); ++i) {
    const double p = distribution[i];
    if (p < 0.0 || !std::isfinite(p)) {
      throw ValidationError("token_entropy: entry " + std::to_string(i) +
                            " is negative or non-finite (" + describe(p) + ")");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("token_entropy: distribution sums to " + describe(sum) +
                          ", expected 1 within 1e-9");
  }
  double entropy = 0.0;
  for (const double p : distribution) {
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::max(entropy, 0.0);
}

double normalized_trace_uncertainty(const Rollout& rollout, std::int32_t vocab_size) {
  if (rollout.entropy_trace.empty()) {
    throw ValidationError("normalized_trace_uncertainty: empty entropy trace");
  }
  if (vocab_size < 1) {
    throw ValidationError("normalized_trace_uncertainty: vocab_size must be >= 1");
  }
  const double max_entropy = std::log(static_cast<double>(vocab_size));
  if (max_entropy <= 0.0) return 0.0;  // vocabulary of one token: entropy is always 0
  double sum = 0.0;
  for (const double h : rollout.entropy_trace) sum += h;
  const double mean = sum / static_cast<double>(rollout.entropy_trace.size());
  return std::clamp(mean / max_entropy, 0.0, 1.0);
}

void validate_population(const Population& population) {
  if (population.vocab_size < 1) {
    throw ValidationError("population: vocab_size must be >= 1, got " +
                          std::to_string(population.vocab_size));
  }
  if (population.rollouts.empty()) {
    throw ValidationError("population: rollouts must be non-empty");
  }
  const double max_entropy = std::log(static_cast<double>(population.vocab_size));
  for (std::size_t i = 0; i < population.rollouts.size(); ++i) {
    const Rollout& r = population.rollouts[i];
    const std::string where = "rollouts[" + std::to_string(i) + "]";
    if (r.tokens.empty()) {
      throw ValidationError(where + ": tokens must be non-empty");
    }
    if (r.entropy_trace.size() != r.tokens.size()) {
      throw ValidationError(where + ": entropy_trace length " +
                            std::to_string(r.entropy_trace.size()) +
                            " does not match tokens length " +
                            std::to_string(r.tokens.size()));
    }
    for (std::size_t t = 0; t < r.tokens.size(); ++t) {
      if (r.tokens[t] < 0 || r.tokens[t] >= population.vocab_size) {
        throw ValidationError(where + ".tokens[" + std::to_string(t) + "]: token " +
                              std::to_string(r.tokens[t]) +
                              " outside vocabulary of size " +
                              std::to_string(population.vocab_size));
      }
    }
    for (std::size_t t = 0; t < r.entropy_trace.size(); ++t) {
      const double h = r.entropy_trace[t];
      if (!std::isfinite(h) || h < -1e-9 || h > max_entropy + 1e-9) {
        throw ValidationError(where + ".entropy_trace[" + std::to_string(t) +
                              "]: value " + describe(h) + " outside [0, ln(" +
                              std::to_string(population.vocab_size) + ")]");
      }
    }
  }
}

AnswerStatsTable answer_stats(const Population& population) {
  validate_population(population);
  std::map<std::string, std::pair<std::int64_t, double>> acc;  // answer -> (count, sum u)
  for (const Rollout& r : population.rollouts) {
    auto& entry = acc[r.answer];
    entry.first += 1;
    entry.second += normalized_trace_uncertainty(r, population.vocab_size);
  }
  AnswerStatsTable stats;
  stats.reserve(acc.size());
  for (const auto& [answer, entry] : acc) {
    AnswerStat s;
    s.answer = answer;
    s.count = entry.first;
    s.mean_uncertainty = entry.second / static_cast<double>(entry.first);
    stats.push_back(std::move(s));
  }
  return stats;  // map iteration order keeps the table sorted by key
}

const AnswerStat* find_stat(const AnswerStatsTable& stats, std::string_view answer) {
  for (const AnswerStat& s : stats) {
    if (s.answer == answer) return &s;
  }
  return nullptr;
}

}  // namespace dare
