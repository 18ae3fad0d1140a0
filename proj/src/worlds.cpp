// SPDX-License-Identifier: Apache-2.0

#include "dare/worlds.hpp"

#include <string>

namespace dare::worlds {

namespace {

constexpr std::int32_t kTraceLength = 12;

struct AnswerSpec {
  std::string name;
  int truth = 0;
  double mean_uncertainty = 0.5;
  double uncertainty_jitter = 0.0;
};

/// Answers must already be sorted by key. Each answer owns a disjoint block
/// of the vocabulary as its token template, so identical answers overlap
/// fully and distinct answers not at all when kappa = 1.
LatentWorld build(std::vector<AnswerSpec> answers,
                  std::vector<std::pair<double, std::vector<double>>> modes,
                  double kappa) {
  LatentWorld world;
  world.kappa = kappa;
  world.vocab_size = static_cast<std::int32_t>(answers.size()) * kTraceLength;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    world.answers.push_back(answers[i].name);
    world.truth.push_back(answers[i].truth);
    AnswerTraceModel tm;
    tm.mean_uncertainty = answers[i].mean_uncertainty;
    tm.uncertainty_jitter = answers[i].uncertainty_jitter;
    for (std::int32_t t = 0; t < kTraceLength; ++t) {
      tm.base_tokens.push_back(static_cast<std::int32_t>(i) * kTraceLength + t);
    }
    world.trace_model.push_back(std::move(tm));
  }
  for (auto& [probability, conditional] : modes) {
    world.modes.push_back({probability, std::move(conditional)});
  }
  validate_world(world);
  return world;
}

}  // namespace

LatentWorld two_mode_bias() {
  return build({{"c", 1, 0.5, 0.1}, {"wA", 0, 0.5, 0.1}, {"wB", 0, 0.5, 0.1}},
               {{0.5, {0.4, 0.6, 0.0}}, {0.5, {0.4, 0.0, 0.6}}},
               /*kappa=*/1.0);
}

LatentWorld three_outcome() {
  return build({{"c1", 1, 0.5, 0.1}, {"c2", 1, 0.5, 0.1}, {"w", 0, 0.5, 0.1}},
               {{1.0, {0.5, 0.2, 0.3}}},
               /*kappa=*/1.0);
}

LatentWorld confirmation_collapse() {
  return build({{"c", 1, 0.1, 0.05}, {"wA", 0, 0.8, 0.05}, {"wB", 0, 0.8, 0.05}},
               {{0.5, {0.4, 0.55, 0.05}}, {0.5, {0.4, 0.05, 0.55}}},
               /*kappa=*/0.9);
}

LatentWorld convergence() {
  return build({{"c", 1, 0.15, 0.05}, {"w1", 0, 0.85, 0.05}, {"w2", 0, 0.85, 0.05}},
               {{0.5, {0.46, 0.44, 0.10}}, {0.5, {0.44, 0.16, 0.40}}},
               /*kappa=*/0.9);
}

std::vector<std::string_view> builtin_names() {
  return {"two_mode", "three_outcome", "collapse", "convergence"};
}

LatentWorld builtin(std::string_view name) {
  if (name == "two_mode") return two_mode_bias();
  if (name == "three_outcome") return three_outcome();
  if (name == "collapse") return confirmation_collapse();
  if (name == "convergence") return convergence();
  throw ValidationError("unknown builtin world '" + std::string(name) +
                        "'; known: two_mode, three_outcome, collapse, convergence");
}

}  // namespace dare::worlds
