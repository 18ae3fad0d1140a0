// SPDX-License-Identifier: Apache-2.0

// Command-line runner for reward estimation, simulation, theory checks,
// adaptation runs, correlation sweeps, and ablation grids.
//
// Every command takes one --seed and derives all of its randomness from it,
// so reruns with identical flags produce byte-identical output files.
// Exit codes: 0 success, 1 assertion failure, 2 input validation failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dare/adapt.hpp"
#include "dare/io.hpp"
#include "dare/rewards.hpp"
#include "dare/theory.hpp"
#include "dare/worlds.hpp"

namespace fs = std::filesystem;
using dare::io::json;

namespace {

constexpr int kExitAssertionFailure = 1;
constexpr int kExitValidationFailure = 2;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string world_path;
  std::string world_builtin;

  json config = json::object();  // parsed --config file, if any

  void load_config(const std::string& expected_kind) {
    if (!config_path.empty()) config = dare::io::read_json_file(config_path);
    if (config.contains("kind") && config["kind"] != expected_kind) {
      throw dare::ValidationError("config kind '" + config["kind"].dump() +
                                  "' does not match subcommand '" + expected_kind + "'");
    }
  }
};

template <typename T>
T pick(const CLI::App* cmd, const std::string& flag, const json& config,
       const char* key, T flag_value) {
  if (cmd->count(flag) > 0) return flag_value;
  if (config.contains(key)) return config[key].get<T>();
  return flag_value;
}

dare::LatentWorld resolve_world(const CLI::App* cmd, const CommonArgs& args) {
  const bool flag_path = cmd->count("--world") > 0;
  const bool flag_builtin = cmd->count("--builtin") > 0;
  if (flag_path && flag_builtin) {
    throw dare::ValidationError("pass either --world or --builtin, not both");
  }
  if (flag_path) return dare::io::load_world(args.world_path);
  if (flag_builtin) return dare::worlds::builtin(args.world_builtin);
  if (args.config.contains("world")) return dare::io::world_from_json(args.config["world"]);
  if (args.config.contains("world_path")) {
    return dare::io::load_world(args.config["world_path"].get<std::string>());
  }
  if (args.config.contains("world_builtin")) {
    return dare::worlds::builtin(args.config["world_builtin"].get<std::string>());
  }
  throw dare::ValidationError(
      "no world given: pass --world <file>, --builtin <name>, or put "
      "world/world_path/world_builtin in the config file");
}

struct RewardArgs {
  std::string mode = "dare";
  std::string shaping = "linear_penalty";
  std::string bonus = "paper_product";
  double alpha = 0.1;
  double tau = 0.05;
  double epsilon = 1e-6;
  double lambda = 1.0;
  bool exclude_pruned = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mode", mode,
                    "reward mode: mv|dare|dare_no_bonus|dare_no_prune|dist_only");
    cmd->add_option("--shaping", shaping,
                    "shaping variant: linear_penalty|sqrt_penalty|exponential_penalty|"
                    "log_penalty|frequency_only");
    cmd->add_option("--bonus", bonus,
                    "bonus variant: paper_product|linear_inverse|log_inverse|none");
    cmd->add_option("--alpha", alpha, "exploration strength in [0,1]");
    cmd->add_option("--tau", tau, "prune threshold in [0,1)");
    cmd->add_option("--epsilon", epsilon, "shaping stabilizer, > 0");
    cmd->add_option("--lambda", lambda, "exponential penalty rate, > 0");
    cmd->add_flag("--exclude-pruned", exclude_pruned,
                  "drop pruned rollouts from the update group instead of rewarding 0");
  }

  dare::RewardConfig resolve(const CLI::App* cmd, const json& config) const {
    dare::RewardConfig cfg;
    if (config.contains("reward")) {
      cfg = dare::io::reward_config_from_json(config["reward"]);
    }
    if (cmd->count("--mode")) cfg.mode = dare::reward_mode_from_string(mode);
    if (cmd->count("--shaping")) cfg.shaping = dare::shaping_from_string(shaping);
    if (cmd->count("--bonus")) cfg.bonus = dare::bonus_from_string(bonus);
    if (cmd->count("--alpha")) cfg.alpha = alpha;
    if (cmd->count("--tau")) cfg.prune_threshold = tau;
    if (cmd->count("--epsilon")) cfg.epsilon = epsilon;
    if (cmd->count("--lambda")) cfg.lambda = lambda;
    if (cmd->count("--exclude-pruned")) cfg.exclude_pruned = exclude_pruned;
    cfg.validate();
    return cfg;
  }
};

struct AdaptArgs {
  int steps = 300;
  int rollouts = 16;
  double learning_rate = 0.05;
  int eval_samples = 0;
  double threshold = 0.6;

  void attach(CLI::App* cmd) {
    cmd->add_option("--steps", steps, "adaptation steps");
    cmd->add_option("--rollouts", rollouts, "rollouts per step (group size M)");
    cmd->add_option("--lr", learning_rate, "learning rate");
    cmd->add_option("--eval-samples", eval_samples, "pass@1 samples; 0 = closed form");
    cmd->add_option("--threshold", threshold, "pass@1 threshold for steps_to_threshold");
  }

  dare::AdaptConfig resolve(const CLI::App* cmd, const CommonArgs& args,
                            const dare::RewardConfig& reward,
                            dare::LatentWorld world) const {
    dare::AdaptConfig cfg;
    cfg.world = std::move(world);
    cfg.reward = reward;
    cfg.steps = pick(cmd, "--steps", args.config, "steps", steps);
    cfg.rollouts_per_step = pick(cmd, "--rollouts", args.config, "rollouts_per_step", rollouts);
    cfg.learning_rate = pick(cmd, "--lr", args.config, "learning_rate", learning_rate);
    cfg.eval_samples = pick(cmd, "--eval-samples", args.config, "eval_samples", eval_samples);
    cfg.seed = args.seed;
    cfg.validate();
    return cfg;
  }
};

fs::path ensure_out_dir(const std::string& out) {
  if (out.empty()) throw dare::ValidationError("missing --out directory");
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// estimate: reward vectors for a stored population
// ---------------------------------------------------------------------------

int cmd_estimate(const CLI::App* cmd, CommonArgs& args, const RewardArgs& reward_args,
                 const std::string& population_path) {
  args.load_config("estimate");
  std::string path = population_path;
  if (path.empty() && args.config.contains("population_path")) {
    path = args.config["population_path"].get<std::string>();
  }
  if (path.empty()) throw dare::ValidationError("missing --population file");

  const dare::Population population = dare::io::load_population(path);
  const dare::RewardConfig cfg = reward_args.resolve(cmd, args.config);
  const dare::RewardVector rewards = dare::estimate_rewards(population, cfg);

  const fs::path out = ensure_out_dir(pick(cmd, "--out", args.config, "out", args.out_dir));
  json report = dare::io::reward_vector_to_json(rewards);
  report["config"] = dare::io::reward_config_to_json(cfg);
  report["query_id"] = population.query_id;
  dare::io::write_json_file(out / "rewards.json", report);
  dare::io::write_text_file(out / "rewards.csv",
                            dare::io::reward_vector_csv(population, rewards));
  std::cout << "wrote " << (out / "rewards.json").string() << " and rewards.csv\n";
  return 0;
}

// ---------------------------------------------------------------------------
// simulate: sample populations from a world
// ---------------------------------------------------------------------------

int cmd_simulate(const CLI::App* cmd, CommonArgs& args, int group_size, int populations,
                 double kappa, bool kappa_set) {
  args.load_config("simulate");
  dare::LatentWorld world = resolve_world(cmd, args);
  if (kappa_set) {
    world.kappa = kappa;
    dare::validate_world(world);
  }
  group_size = pick(cmd, "--rollouts", args.config, "rollouts_per_step", group_size);
  populations = pick(cmd, "--populations", args.config, "populations", populations);
  if (populations < 1) throw dare::ValidationError("--populations must be >= 1");

  const fs::path out = ensure_out_dir(pick(cmd, "--out", args.config, "out", args.out_dir));
  dare::io::save_world(world, out / "world.json");

  json summary;
  summary["marginal"] = json::object();
  const std::vector<double> marginal = dare::marginal_distribution(world);
  for (std::size_t i = 0; i < world.answers.size(); ++i) {
    summary["marginal"][world.answers[i]] = marginal[i];
  }
  summary["marginal_expected_reward"] = dare::marginal_expected_reward(world);
  summary["populations"] = json::array();

  for (int i = 0; i < populations; ++i) {
    dare::rng::Stream stream =
        dare::rng::substream(args.seed, "population", static_cast<std::uint64_t>(i));
    const dare::Population pop = dare::sample_population(
        world, static_cast<std::size_t>(group_size), stream,
        "sim-" + std::to_string(i));
    char name[64];
    std::snprintf(name, sizeof(name), "population_%04d.json", i);
    dare::io::save_population(pop, out / name);
    json entry = {{"file", name}, {"query_id", pop.query_id}};
    if (pop.size() >= 2) entry["rollout_correlation"] = dare::rollout_correlation(pop);
    summary["populations"].push_back(std::move(entry));
  }
  dare::io::write_json_file(out / "summary.json", summary);
  std::cout << "wrote " << populations << " population(s) to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// theory: Monte Carlo checks against exact oracles
// ---------------------------------------------------------------------------

int cmd_theory(const CLI::App* cmd, CommonArgs& args, const std::string& checks_csv,
               int group_size, std::uint64_t samples, const std::string& shaping,
               bool assert_consistency, double consistency_tolerance,
               std::optional<double> min_bias) {
  args.load_config("theory");
  const dare::LatentWorld world = resolve_world(cmd, args);
  group_size = pick(cmd, "--rollouts", args.config, "rollouts_per_step", group_size);
  samples = pick(cmd, "--samples", args.config, "samples", samples);

  const dare::ShapingVariant shaping_variant = dare::shaping_from_string(shaping);
  const bool identity = shaping_variant == dare::ShapingVariant::frequency_only;
  if (assert_consistency && !identity) {
    throw dare::ValidationError(
        "--assert-consistency requires --shaping frequency_only: the consistency "
        "claim does not cover uncertainty-weighted variants");
  }

  std::vector<std::string> checks;
  for (std::size_t start = 0; start < checks_csv.size();) {
    const std::size_t comma = checks_csv.find(',', start);
    const std::size_t end = comma == std::string::npos ? checks_csv.size() : comma;
    if (end > start) checks.push_back(checks_csv.substr(start, end - start));
    start = end + 1;
  }

  const fs::path out = ensure_out_dir(pick(cmd, "--out", args.config, "out", args.out_dir));
  bool all_passed = true;
  for (const std::string& check : checks) {
    dare::theory::TheoryReport report;
    if (check == "collapse") {
      report = dare::theory::information_collapse_check(
          world, static_cast<std::size_t>(group_size), samples, args.seed);
    } else if (check == "bias") {
      dare::theory::BiasOptions opts;
      opts.min_bias = min_bias;
      report = dare::theory::mv_bias_check(world, static_cast<std::size_t>(group_size),
                                           samples, args.seed, opts);
    } else if (check == "consistency") {
      report = dare::theory::marginal_consistency_check(
          world, static_cast<std::size_t>(group_size), samples, args.seed,
          shaping_variant, consistency_tolerance);
    } else {
      throw dare::ValidationError("unknown theory check '" + check +
                                  "'; known: collapse, bias, consistency");
    }
    dare::io::write_json_file(out / ("theory_" + check + ".json"),
                              dare::io::theory_report_to_json(report));
    std::cout << dare::io::theory_report_table(report);
    all_passed = all_passed && report.passed;
  }
  return all_passed ? 0 : kExitAssertionFailure;
}

// ---------------------------------------------------------------------------
// adapt: one test-time adaptation run
// ---------------------------------------------------------------------------

int cmd_adapt(const CLI::App* cmd, CommonArgs& args, const RewardArgs& reward_args,
              const AdaptArgs& adapt_args) {
  args.load_config("adapt");
  const dare::RewardConfig reward = reward_args.resolve(cmd, args.config);
  const dare::AdaptConfig cfg =
      adapt_args.resolve(cmd, args, reward, resolve_world(cmd, args));
  const double threshold =
      pick(cmd, "--threshold", args.config, "threshold", adapt_args.threshold);

  const dare::AdaptTrace trace = dare::run_adaptation(cfg);

  const fs::path out = ensure_out_dir(pick(cmd, "--out", args.config, "out", args.out_dir));
  dare::io::write_text_file(out / "adapt_trace.csv", dare::io::adapt_trace_csv(trace));
  json summary = {{"mode", std::string(dare::to_string(cfg.reward.mode))},
                  {"steps", cfg.steps},
                  {"initial_pass_at_1", trace.initial_pass_at_1},
                  {"final_pass_at_1", trace.final_pass_at_1()},
                  {"threshold", threshold}};
  const std::optional<int> reached = trace.steps_to_threshold(threshold);
  summary["steps_to_threshold"] = reached ? json(*reached) : json(nullptr);
  dare::io::write_json_file(out / "adapt_summary.json", summary);
  std::cout << "final pass@1 " << dare::io::format_double(trace.final_pass_at_1())
            << " (initial " << dare::io::format_double(trace.initial_pass_at_1)
            << "), trace in " << (out / "adapt_trace.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep: correlation grid, MV vs DARE
// ---------------------------------------------------------------------------

int cmd_sweep(const CLI::App* cmd, CommonArgs& args, const RewardArgs& reward_args,
              const AdaptArgs& adapt_args, std::vector<double> kappa_grid, int repeats) {
  args.load_config("sweep");
  if (cmd->count("--kappa-grid") == 0 && args.config.contains("kappa_grid")) {
    kappa_grid = args.config["kappa_grid"].get<std::vector<double>>();
  }
  if (kappa_grid.empty()) throw dare::ValidationError("missing --kappa-grid");
  repeats = pick(cmd, "--repeats", args.config, "repeats", repeats);

  const dare::RewardConfig reward = reward_args.resolve(cmd, args.config);
  const dare::AdaptConfig base =
      adapt_args.resolve(cmd, args, reward, resolve_world(cmd, args));

  const std::vector<dare::RewardMode> modes = {dare::RewardMode::mv,
                                               dare::RewardMode::dare};
  const std::vector<dare::SweepRow> rows =
      dare::correlation_sweep(base, kappa_grid, repeats, modes);

  const fs::path out = ensure_out_dir(pick(cmd, "--out", args.config, "out", args.out_dir));
  dare::io::write_text_file(out / "sweep.csv", dare::io::sweep_csv(rows));
  std::cout << "wrote " << rows.size() << " sweep rows to "
            << (out / "sweep.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// ablate: component grid over seed-paired runs
// ---------------------------------------------------------------------------

int cmd_ablate(const CLI::App* cmd, CommonArgs& args, const RewardArgs& reward_args,
               const AdaptArgs& adapt_args, int repeats) {
  args.load_config("ablate");
  repeats = pick(cmd, "--repeats", args.config, "repeats", repeats);
  if (repeats < 1) throw dare::ValidationError("--repeats must be >= 1");

  const dare::RewardConfig reward = reward_args.resolve(cmd, args.config);
  const dare::AdaptConfig base =
      adapt_args.resolve(cmd, args, reward, resolve_world(cmd, args));
  const double threshold =
      pick(cmd, "--threshold", args.config, "threshold", adapt_args.threshold);

  const std::vector<dare::RewardMode> grid = {
      dare::RewardMode::dist_only, dare::RewardMode::dare_no_prune,
      dare::RewardMode::dare_no_bonus, dare::RewardMode::dare, dare::RewardMode::mv};

  std::ostringstream csv;
  csv << "variant,seed,final_pass_at_1,steps_to_threshold\n";
  for (const dare::RewardMode mode : grid) {
    for (int rep = 0; rep < repeats; ++rep) {
      dare::AdaptConfig cfg = base;
      cfg.reward.mode = mode;
      // identical derived seeds across variants: paired comparison
      cfg.seed =
          dare::rng::derive_seed(base.seed, "ablate", static_cast<std::uint64_t>(rep));
      const dare::AdaptTrace trace = dare::run_adaptation(cfg);
      const std::optional<int> reached = trace.steps_to_threshold(threshold);
      csv << dare::to_string(mode) << ',' << cfg.seed << ','
          << dare::io::format_double(trace.final_pass_at_1()) << ','
          << (reached ? std::to_string(*reached) : std::string("-1")) << '\n';
    }
  }
  const fs::path out = ensure_out_dir(pick(cmd, "--out", args.config, "out", args.out_dir));
  dare::io::write_text_file(out / "ablation.csv", csv.str());
  std::cout << "wrote " << (out / "ablation.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distribution-aware reward estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  RewardArgs reward_args;
  AdaptArgs adapt_args;
  std::string population_path;
  std::string checks = "collapse,bias,consistency";
  std::string consistency_shaping = "frequency_only";
  bool assert_consistency = false;
  double consistency_tolerance = 0.01;
  double min_bias = 0.0;
  int group_size = 16;
  int populations = 1;
  std::uint64_t samples = 10000;
  std::vector<double> kappa_grid;
  int repeats = 5;
  double kappa_override = 0.0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config_path, "experiment config JSON");
    cmd->add_option("--seed", args.seed, "root seed for all randomness");
    cmd->add_option("--out", args.out_dir, "output directory");
    return cmd;
  };
  const auto add_world = [&](CLI::App* cmd) {
    cmd->add_option("--world", args.world_path, "world JSON file");
    cmd->add_option("--builtin", args.world_builtin,
                    "builtin world: two_mode|three_outcome|collapse|convergence");
    return cmd;
  };

  CLI::App* estimate = add_common(app.add_subcommand(
      "estimate", "reward vector for a stored population"));
  estimate->add_option("--population", population_path, "population JSON file");
  reward_args.attach(estimate);

  CLI::App* simulate = add_world(add_common(app.add_subcommand(
      "simulate", "sample rollout populations from a world")));
  simulate->add_option("--rollouts", group_size, "rollouts per population");
  simulate->add_option("--populations", populations, "number of populations");
  simulate->add_option("--kappa", kappa_override, "override the world's correlation knob");

  CLI::App* theory = add_world(add_common(app.add_subcommand(
      "theory", "Monte Carlo checks of the estimator-level results")));
  theory->add_option("--checks", checks, "comma list: collapse,bias,consistency");
  theory->add_option("--rollouts", group_size, "rollouts per population (M)");
  theory->add_option("--samples", samples, "number of sampled populations");
  theory->add_option("--shaping", consistency_shaping,
                     "shaping variant for the consistency check");
  theory->add_flag("--assert-consistency", assert_consistency,
                   "insist on asserting the consistency tolerance");
  theory->add_option("--consistency-tolerance", consistency_tolerance,
                     "max-deviation tolerance for the consistency check");
  theory->add_option("--min-bias", min_bias, "assert bias >= this in the bias check");

  CLI::App* adapt = add_world(add_common(app.add_subcommand(
      "adapt", "run one test-time adaptation loop")));
  reward_args.attach(adapt);
  adapt_args.attach(adapt);

  CLI::App* sweep = add_world(add_common(app.add_subcommand(
      "sweep", "final pass@1 vs rollout correlation, MV and DARE")));
  reward_args.attach(sweep);
  adapt_args.attach(sweep);
  sweep->add_option("--kappa-grid", kappa_grid, "comma list of kappa values")
      ->delimiter(',');
  sweep->add_option("--repeats", repeats, "seed-paired repeats per grid point");

  CLI::App* ablate = add_world(add_common(app.add_subcommand(
      "ablate", "component grid: dist_only, +bonus, +prune, full, mv")));
  reward_args.attach(ablate);
  adapt_args.attach(ablate);
  ablate->add_option("--repeats", repeats, "seed-paired repeats per variant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitValidationFailure;
  }

  try {
    if (estimate->parsed()) {
      return cmd_estimate(estimate, args, reward_args, population_path);
    }
    if (simulate->parsed()) {
      return cmd_simulate(simulate, args, group_size, populations, kappa_override,
                          simulate->count("--kappa") > 0);
    }
    if (theory->parsed()) {
      std::optional<double> bias_floor;
      if (theory->count("--min-bias") > 0) bias_floor = min_bias;
      return cmd_theory(theory, args, checks, group_size, samples, consistency_shaping,
                        assert_consistency, consistency_tolerance, bias_floor);
    }
    if (adapt->parsed()) return cmd_adapt(adapt, args, reward_args, adapt_args);
    if (sweep->parsed()) {
      return cmd_sweep(sweep, args, reward_args, adapt_args, kappa_grid, repeats);
    }
    if (ablate->parsed()) return cmd_ablate(ablate, args, reward_args, adapt_args, repeats);
  } catch (const dare::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAssertionFailure;
  }
  return 0;
}
