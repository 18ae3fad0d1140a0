// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "dare/rewards.hpp"
#include "dare/rng.hpp"
#include "test_support.hpp"

using namespace dare;
using dare::testing::make_population;

namespace {

// counts {A:7, B:4, C:3} with mean uncertainties {0.5, 0.2, 0.8}
Population canonical_population() {
  std::vector<std::pair<std::string, double>> entries;
  for (int i = 0; i < 7; ++i) entries.emplace_back("A", 0.5);
  for (int i = 0; i < 4; ++i) entries.emplace_back("B", 0.2);
  for (int i = 0; i < 3; ++i) entries.emplace_back("C", 0.8);
  return make_population(entries);
}

AnswerStatsTable table_from(std::vector<std::pair<std::string, double>> probs) {
  AnswerStatsTable stats;
  for (auto& [answer, p] : probs) {
    AnswerStat s;
    s.answer = std::move(answer);
    s.count = 1;
    s.probability = p;
    stats.push_back(std::move(s));
  }
  return stats;
}

RewardConfig default_config() { return RewardConfig{}; }

}  // namespace

TEST_SUITE_BEGIN("rewards");

TEST_CASE("uncertainty_weighted_distribution: single answer normalizes to 1") {
  const Population pop = make_population({{"A", 0.73}, {"A", 0.73}});
  const AnswerStatsTable stats =
      uncertainty_weighted_distribution(answer_stats(pop), default_config());
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].probability == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uncertainty_weighted_distribution: linear penalty on the canonical instance") {
  // weights 7/0.5 = 14, 4/0.2 = 20, 3/0.8 = 3.75 -> normalize by 37.75
  RewardConfig cfg;
  cfg.shaping = ShapingVariant::linear_penalty;
  cfg.epsilon = 1e-6;
  const AnswerStatsTable stats =
      uncertainty_weighted_distribution(answer_stats(canonical_population()), cfg);
  REQUIRE(stats.size() == 3);
  CHECK(stats[0].probability == doctest::Approx(0.3709).epsilon(1e-3));
  CHECK(stats[1].probability == doctest::Approx(0.5298).epsilon(1e-3));
  CHECK(stats[2].probability == doctest::Approx(0.0993).epsilon(1e-3));
}

TEST_CASE("uncertainty_weighted_distribution: frequency only reduces to counts") {
  RewardConfig cfg;
  cfg.shaping = ShapingVariant::frequency_only;
  const AnswerStatsTable stats =
      uncertainty_weighted_distribution(answer_stats(canonical_population()), cfg);
  CHECK(stats[0].probability == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(stats[1].probability == doctest::Approx(4.0 / 14.0).epsilon(1e-9));
  CHECK(stats[2].probability == doctest::Approx(3.0 / 14.0).epsilon(1e-9));
}

TEST_CASE("uncertainty_weighted_distribution: shaping variant weights") {
  AnswerStat s;
  s.answer = "A";
  s.count = 4;
  s.mean_uncertainty = 0.2;
  AnswerStatsTable stats = {s};

  RewardConfig cfg;
  cfg.epsilon = 1e-6;
  const auto weight_of = [&](ShapingVariant v) {
    cfg.shaping = v;
    return uncertainty_weighted_distribution(stats, cfg)[0].weight;
  };
  CHECK(weight_of(ShapingVariant::linear_penalty) == doctest::Approx(20.0).epsilon(1e-4));
  CHECK(weight_of(ShapingVariant::sqrt_penalty) == doctest::Approx(8.9443).epsilon(1e-3));
  cfg.lambda = 1.0;
  CHECK(weight_of(ShapingVariant::exponential_penalty) ==
        doctest::Approx(3.2749230).epsilon(1e-6));
  CHECK(weight_of(ShapingVariant::log_penalty) == doctest::Approx(21.939).epsilon(1e-3));
  CHECK(weight_of(ShapingVariant::frequency_only) == doctest::Approx(4.0));
}

TEST_CASE("uncertainty_weighted_distribution: probabilities always normalize") {
  rng::Stream stream(37);
  const std::vector<ShapingVariant> variants = {
      ShapingVariant::linear_penalty, ShapingVariant::sqrt_penalty,
      ShapingVariant::exponential_penalty, ShapingVariant::log_penalty,
      ShapingVariant::frequency_only};
  const std::vector<std::string> keys = {"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::pair<std::string, double>> entries;
    const std::size_t m = 1 + stream.uniform_int(10);
    for (std::size_t i = 0; i < m; ++i) {
      entries.emplace_back(keys[stream.uniform_int(keys.size())], stream.uniform());
    }
    const AnswerStatsTable base = answer_stats(make_population(entries));
    for (const ShapingVariant v : variants) {
      RewardConfig cfg;
      cfg.shaping = v;
      double total = 0.0;
      for (const AnswerStat& s : uncertainty_weighted_distribution(base, cfg)) {
        CHECK(s.probability > 0.0);
        total += s.probability;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("uncertainty_weighted_distribution: monotone in count and uncertainty") {
  // converting one B rollout into an A rollout raises p_hat(A)
  RewardConfig cfg;
  const auto p_of_a = [&](int a_count, int b_count, double ua, double ub) {
    std::vector<std::pair<std::string, double>> entries;
    for (int i = 0; i < a_count; ++i) entries.emplace_back("A", ua);
    for (int i = 0; i < b_count; ++i) entries.emplace_back("B", ub);
    return uncertainty_weighted_distribution(answer_stats(make_population(entries)), cfg)[0]
        .probability;
  };
  CHECK(p_of_a(5, 3, 0.4, 0.4) > p_of_a(4, 4, 0.4, 0.4));

  for (const ShapingVariant v :
       {ShapingVariant::linear_penalty, ShapingVariant::sqrt_penalty,
        ShapingVariant::exponential_penalty, ShapingVariant::log_penalty}) {
    cfg.shaping = v;
    CHECK(p_of_a(4, 4, 0.3, 0.5) > p_of_a(4, 4, 0.6, 0.5));
  }
}

TEST_CASE("mv_pseudo_label: majority wins, ties break to the smallest key") {
  std::vector<std::pair<std::string, double>> entries;
  for (int i = 0; i < 7; ++i) entries.emplace_back("A", 0.9);  // frequent but uncertain
  for (int i = 0; i < 4; ++i) entries.emplace_back("D", 0.1);
  CHECK(mv_pseudo_label(answer_stats(make_population(entries))) == "A");

  std::vector<std::pair<std::string, double>> tied;
  for (int i = 0; i < 5; ++i) tied.emplace_back("B", 0.5);
  for (int i = 0; i < 5; ++i) tied.emplace_back("A", 0.5);
  CHECK(mv_pseudo_label(answer_stats(make_population(tied))) == "A");

  CHECK(mv_pseudo_label(answer_stats(make_population({{"Z", 0.4}}))) == "Z");
}

TEST_CASE("mv_rewards: binary agreement with the pseudo label") {
  const Population unanimous = make_population({{"A", 0.3}, {"A", 0.6}});
  CHECK(mv_rewards(unanimous, "A").rewards == std::vector<double>{1.0, 1.0});

  const Population mixed = make_population({{"A", 0.1}, {"A", 0.1}, {"D", 0.1}});
  CHECK(mv_rewards(mixed, "A").rewards == std::vector<double>{1.0, 1.0, 0.0});

  const Population spread = make_population({{"A", 0.1}, {"B", 0.1}, {"C", 0.1}});
  CHECK(mv_rewards(spread, "B").rewards == std::vector<double>{0.0, 1.0, 0.0});

  CHECK_THROWS_AS(mv_rewards(spread, "Z"), ValidationError);
}

TEST_CASE("exploration_bonus: boundary and reference values") {
  RewardConfig cfg;
  AnswerStat s;
  s.count = 16;
  s.mean_uncertainty = 0.3;
  CHECK(exploration_bonus(s, 16, cfg) == doctest::Approx(0.0));  // unanimous

  s.count = 4;
  s.mean_uncertainty = 1.0;  // maximally uncertain
  for (const BonusVariant v : {BonusVariant::paper_product, BonusVariant::linear_inverse,
                               BonusVariant::log_inverse}) {
    cfg.bonus = v;
    CHECK(exploration_bonus(s, 16, cfg) == doctest::Approx(0.0));
  }

  s.mean_uncertainty = 0.2;
  cfg.bonus = BonusVariant::paper_product;
  CHECK(exploration_bonus(s, 16, cfg) == doctest::Approx(0.6).epsilon(1e-12));
  cfg.bonus = BonusVariant::linear_inverse;
  CHECK(exploration_bonus(s, 16, cfg) == doctest::Approx(0.16).epsilon(1e-12));
  cfg.bonus = BonusVariant::log_inverse;
  CHECK(exploration_bonus(s, 16, cfg) == doctest::Approx(0.9790203).epsilon(1e-6));
  cfg.bonus = BonusVariant::none;
  CHECK(exploration_bonus(s, 16, cfg) == doctest::Approx(0.0));

  s.count = 20;
  CHECK_THROWS_AS(exploration_bonus(s, 16, cfg), ValidationError);
}

TEST_CASE("prune_and_renormalize: threshold zero is the identity") {
  const AnswerStatsTable stats = table_from({{"a", 0.6}, {"b", 0.4}});
  const AnswerStatsTable pruned = prune_and_renormalize(stats, 0.0);
  REQUIRE(pruned.size() == 2);
  CHECK(pruned[0].probability == doctest::Approx(0.6));
  CHECK(pruned[1].probability == doctest::Approx(0.4));
}

TEST_CASE("prune_and_renormalize: drops the tail and renormalizes") {
  const AnswerStatsTable stats =
      table_from({{"a", 0.5}, {"b", 0.3}, {"c", 0.15}, {"d", 0.05}});
  const AnswerStatsTable pruned = prune_and_renormalize(stats, 0.1);
  REQUIRE(pruned.size() == 3);
  CHECK(pruned[0].probability == doctest::Approx(0.5263).epsilon(1e-4));
  CHECK(pruned[1].probability == doctest::Approx(0.3158).epsilon(1e-4));
  CHECK(pruned[2].probability == doctest::Approx(0.1579).epsilon(1e-4));
}

TEST_CASE("prune_and_renormalize: degenerate threshold keeps the argmax") {
  const AnswerStatsTable stats = table_from({{"a", 0.04}, {"b", 0.96}});
  const AnswerStatsTable pruned = prune_and_renormalize(stats, 0.99);
  REQUIRE(pruned.size() == 1);
  CHECK(pruned[0].answer == "b");
  CHECK(pruned[0].probability == doctest::Approx(1.0));
}

TEST_CASE("prune_and_renormalize: idempotent at the same threshold") {
  rng::Stream stream(91);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 2 + stream.uniform_int(5);
    std::vector<std::pair<std::string, double>> entries;
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      entries.emplace_back(std::string(1, static_cast<char>('a' + i)),
                           stream.uniform() + 0.01);
      total += entries.back().second;
    }
    for (auto& [name, p] : entries) p /= total;
    const double tau = stream.uniform() * 0.4;
    const AnswerStatsTable once = prune_and_renormalize(table_from(entries), tau);
    const AnswerStatsTable twice = prune_and_renormalize(once, tau);
    REQUIRE(twice.size() == once.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(twice[i].answer == once[i].answer);
      CHECK(twice[i].probability == doctest::Approx(once[i].probability).epsilon(1e-12));
    }
  }
}

TEST_CASE("dare_rewards: unanimous population earns exactly 1") {
  const Population pop = make_population({{"A", 0.0}, {"A", 0.0}, {"A", 0.0}});
  const RewardVector rv = dare_rewards(pop, default_config());
  for (const double r : rv.rewards) CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rv.pruned_answers.empty());
}

TEST_CASE("dare_rewards: full pipeline against a hand-computed instance") {
  // frequency shaping keeps the arithmetic exact:
  //   counts {A:7, B:2, C:1}, M = 10 -> p_hat {0.7, 0.2, 0.1}
  //   tau = 0.15 prunes C; survivors renormalize to {7/9, 2/9}, M~ = 9
  //   bonuses (paper product, u {0.5, 0.0}): A (1-7/9)*0.5 = 1/9, B (1-2/9)*1 = 7/9
  //   alpha = 0.5 -> rewards A 7.5/9, B 5.5/9, C 0
  std::vector<std::pair<std::string, double>> entries;
  for (int i = 0; i < 7; ++i) entries.emplace_back("A", 0.5);
  for (int i = 0; i < 2; ++i) entries.emplace_back("B", 0.0);
  entries.emplace_back("C", 1.0);
  const Population pop = make_population(entries);

  RewardConfig cfg;
  cfg.mode = RewardMode::dare;
  cfg.shaping = ShapingVariant::frequency_only;
  cfg.bonus = BonusVariant::paper_product;
  cfg.alpha = 0.5;
  cfg.prune_threshold = 0.15;

  const RewardVector rv = dare_rewards(pop, cfg);
  for (int i = 0; i < 7; ++i) CHECK(rv.rewards[i] == doctest::Approx(7.5 / 9).epsilon(1e-9));
  for (int i = 7; i < 9; ++i) CHECK(rv.rewards[i] == doctest::Approx(5.5 / 9).epsilon(1e-9));
  CHECK(rv.rewards[9] == doctest::Approx(0.0));
  CHECK(rv.pruned_answers == std::vector<std::string>{"C"});
  CHECK(rv.p_hat.at("C") == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(rv.p_tilde.at("A") == doctest::Approx(7.0 / 9).epsilon(1e-9));
  CHECK(rv.p_tilde.count("C") == 0);
  CHECK(!rv.pseudo_label.has_value());
}

TEST_CASE("dare_rewards: dist_only reduces to the shaped distribution") {
  RewardConfig cfg;
  cfg.mode = RewardMode::dist_only;
  cfg.epsilon = 1e-6;
  const RewardVector rv = dare_rewards(canonical_population(), cfg);
  for (int i = 0; i < 7; ++i) CHECK(rv.rewards[i] == doctest::Approx(0.3709).epsilon(1e-3));
  for (int i = 7; i < 11; ++i) CHECK(rv.rewards[i] == doctest::Approx(0.5298).epsilon(1e-3));
  for (int i = 11; i < 14; ++i) CHECK(rv.rewards[i] == doctest::Approx(0.0993).epsilon(1e-3));
}

TEST_CASE("dare_rewards: base plus scaled bonus composition") {
  // a non-majority answer holding p~ = 0.24 with bonus 0.6 at alpha = 0.5
  // lands at 0.24 + 0.5 * 0.6 = 0.54
  RewardConfig cfg;
  AnswerStat s;
  s.count = 4;
  s.mean_uncertainty = 0.2;
  const double bonus = exploration_bonus(s, 16, cfg);
  CHECK(bonus == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(0.24 + 0.5 * bonus == doctest::Approx(0.54).epsilon(1e-12));
}

TEST_CASE("estimate_rewards: mode invariants on random populations") {
  rng::Stream stream(53);
  const std::vector<std::string> keys = {"a", "b", "c", "d"};
  const std::vector<RewardMode> modes = {RewardMode::mv, RewardMode::dare,
                                         RewardMode::dare_no_bonus,
                                         RewardMode::dare_no_prune, RewardMode::dist_only};
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<std::pair<std::string, double>> entries;
    const std::size_t m = 2 + stream.uniform_int(14);
    for (std::size_t i = 0; i < m; ++i) {
      entries.emplace_back(keys[stream.uniform_int(keys.size())], stream.uniform());
    }
    const Population pop = make_population(entries);
    for (const RewardMode mode : modes) {
      RewardConfig cfg;
      cfg.mode = mode;
      const RewardVector rv = estimate_rewards(pop, cfg);
      REQUIRE(rv.rewards.size() == pop.size());

      // index alignment: equal answers receive equal rewards
      for (std::size_t i = 0; i < pop.size(); ++i) {
        for (std::size_t j = i + 1; j < pop.size(); ++j) {
          if (pop.rollouts[i].answer == pop.rollouts[j].answer) {
            CHECK(rv.rewards[i] == rv.rewards[j]);
          }
        }
      }

      double p_hat_total = 0.0;
      for (const auto& [answer, p] : rv.p_hat) p_hat_total += p;
      CHECK(p_hat_total == doctest::Approx(1.0).epsilon(1e-9));

      if (mode == RewardMode::mv) {
        CHECK(rv.pseudo_label.has_value());
        for (const double r : rv.rewards) CHECK((r == 0.0 || r == 1.0));
      } else {
        CHECK(!rv.pseudo_label.has_value());
        double p_tilde_total = 0.0;
        for (const auto& [answer, p] : rv.p_tilde) p_tilde_total += p;
        CHECK(p_tilde_total == doctest::Approx(1.0).epsilon(1e-9));
        for (const double r : rv.rewards) {
          CHECK(r >= 0.0);
          CHECK(r <= 1.0 + cfg.alpha + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("estimate_rewards: MV and DARE agree on unanimous populations") {
  const Population pop = make_population({{"A", 0.2}, {"A", 0.4}, {"A", 0.1}});
  RewardConfig mv_cfg;
  mv_cfg.mode = RewardMode::mv;
  RewardConfig dare_cfg;
  dare_cfg.mode = RewardMode::dare;
  const RewardVector mv = estimate_rewards(pop, mv_cfg);
  const RewardVector da = estimate_rewards(pop, dare_cfg);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    CHECK(mv.rewards[i] == doctest::Approx(1.0));
    CHECK(da.rewards[i] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("reward config validation") {
  RewardConfig cfg;
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = RewardConfig{};
  cfg.prune_threshold = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = RewardConfig{};
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = RewardConfig{};
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_SUITE_END();
