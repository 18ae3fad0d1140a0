// SPDX-License-Identifier: Apache-2.0
#pragma once

// Canonical benchmark worlds used by the tests, the docs, and the CLI's
// --builtin flag. Token templates occupy disjoint vocabulary blocks per
// answer so the overlap proxy cleanly separates answers.

#include <string_view>
#include <vector>

#include "dare/simulator.hpp"

namespace dare::worlds {

/// Two latent modes, each concentrating on a different wrong answer:
/// conditionals {c:0.4, wA:0.6} / {c:0.4, wB:0.6} at kappa = 1, truth c = 1.
/// Marginal is {0.4, 0.3, 0.3} with mu = 0.4, while the conditional mode is
/// always wrong, so consensus labeling sits near 0.6 agreement.
LatentWorld two_mode_bias();

/// Single mode {c1:0.5, c2:0.2, w:0.3} with truth {1, 1, 0}: two correct
/// answers of unequal frequency, the regime where collapsing to the mode
/// destroys reward information.
LatentWorld three_outcome();

/// Confirmation-collapse stress world: the correct answer holds minority
/// mass 0.4 with low-uncertainty traces (mu_u = 0.1) against two wrong
/// answers at 0.3 each with high-uncertainty traces (mu_u = 0.8), and
/// kappa = 0.9 latent offsets boost one wrong answer per rollout group.
LatentWorld confirmation_collapse();

/// Benign-but-noisy world where consensus labeling also converges: the
/// correct answer leads the marginal {0.45, 0.3, 0.25} and stays modal in
/// both latent modes, but the mode-A race is close enough that wrong labels
/// slow consensus down without derailing it.
LatentWorld convergence();

std::vector<std::string_view> builtin_names();
LatentWorld builtin(std::string_view name);  // throws ValidationError on unknown names

}  // namespace dare::worlds
