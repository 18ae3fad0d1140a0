// SPDX-License-Identifier: Apache-2.0
#pragma once

// Rollout populations and per-answer statistics.
//
// A rollout is one sampled generation for a query, reduced to the canonical
// answer it produced, its token sequence, and a per-token entropy trace in
// nats. A population is the group of M rollouts drawn for one query; every
// reward estimator in this project operates on populations.
//
// All types are immutable after construction and all operations are pure, so
// everything here is safe to call concurrently.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dare/error.hpp"

namespace dare {

struct Rollout {
  std::string answer;                 // canonical key; equality is exact key equality
  std::vector<std::int32_t> tokens;   // token ids in [0, vocab_size)
  std::vector<double> entropy_trace;  // nats, one entry per token, each in [0, ln V]

  bool operator==(const Rollout&) const = default;
};

struct Population {
  std::string query_id;
  std::int32_t vocab_size = 0;
  std::vector<Rollout> rollouts;

  std::size_t size() const { return rollouts.size(); }
  bool operator==(const Population&) const = default;
};

/// Per-answer summary of one population. answer_stats() fills count and
/// mean_uncertainty; weight and probability are filled later by the reward
/// estimators (see rewards.hpp).
struct AnswerStat {
  std::string answer;
  std::int64_t count = 0;
  double mean_uncertainty = 0.0;  // in [0, 1]
  double weight = 0.0;
  double probability = 0.0;
};

/// Sorted by answer key, so a forward argmax scan breaks ties toward the
/// smallest key.
using AnswerStatsTable = std::vector<AnswerStat>;

/// Shannon entropy -sum p ln p of a probability vector, in nats, with
/// 0 ln 0 = 0. Entries must be >= 0 and sum to 1 within 1e-9. The result
/// lies in [0, ln V] for a vector of length V.
double token_entropy(std::span<const double> distribution);

/// Mean of the rollout's entropy trace divided by ln(vocab_size), clamped to
/// [0, 1]. A vocabulary of size 1 admits only zero entropy and maps to 0.
double normalized_trace_uncertainty(const Rollout& rollout, std::int32_t vocab_size);

/// Throws ValidationError naming the offending rollout index and field.
void validate_population(const Population& population);

/// One entry per distinct answer: how often it occurred and the mean
/// normalized trace uncertainty of its rollouts. Counts sum to M.
AnswerStatsTable answer_stats(const Population& population);

/// Table lookup by answer key; returns nullptr when absent.
const AnswerStat* find_stat(const AnswerStatsTable& stats, std::string_view answer);

}  // namespace dare
