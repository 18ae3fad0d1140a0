// SPDX-License-Identifier: Apache-2.0
#pragma once

// Brute-force expectation oracle for consensus labeling on a latent world:
// enumerates every K^M answer tuple with its exact product probability under
// each latent mode's blended conditional. Deliberately independent of the
// library's sampling code so that Monte Carlo estimates can be checked
// against ground truth on small instances.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dare/simulator.hpp"

namespace dare::testing {

struct EnumerationResult {
  double expected_agreement = 0.0;    // E[ max count / M ]
  double expected_label_reward = 0.0; // E[ R(pseudo label) ]
};

inline EnumerationResult enumerate_mv_expectation(const LatentWorld& world, int group_size) {
  const std::size_t k = world.answers.size();
  double tuples = 1.0;
  for (int i = 0; i < group_size; ++i) {
    tuples *= static_cast<double>(k);
    if (tuples > 4e6) throw std::invalid_argument("enumeration oracle: K^M too large");
  }

  EnumerationResult result;
  std::vector<std::size_t> tuple(static_cast<std::size_t>(group_size), 0);
  std::vector<int> counts(k, 0);
  for (std::size_t z = 0; z < world.modes.size(); ++z) {
    const std::vector<double> blended = blended_conditional(world, z);
    const double mode_probability = world.modes[z].probability;

    std::fill(tuple.begin(), tuple.end(), 0);
    while (true) {
      double probability = mode_probability;
      std::fill(counts.begin(), counts.end(), 0);
      for (const std::size_t a : tuple) {
        probability *= blended[a];
        counts[a] += 1;
      }
      if (probability > 0.0) {
        std::size_t label = 0;
        for (std::size_t y = 1; y < k; ++y) {
          if (counts[y] > counts[label]) label = y;  // ties keep the smallest key
        }
        result.expected_agreement +=
            probability * static_cast<double>(counts[label]) / group_size;
        result.expected_label_reward +=
            probability * static_cast<double>(world.truth[label]);
      }

      // odometer increment over the K^M tuples
      std::size_t pos = 0;
      while (pos < tuple.size()) {
        if (++tuple[pos] < k) break;
        tuple[pos] = 0;
        ++pos;
      }
      if (pos == tuple.size()) break;
    }
  }
  return result;
}

}  // namespace dare::testing
