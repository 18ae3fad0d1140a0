// SPDX-License-Identifier: Apache-2.0

#include "dare/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dare::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ValidationError(path.empty() ? message : path + ": " + message);
}

const json& require(const json& value, const char* key, const std::string& path) {
  if (!value.is_object()) fail(path, "expected an object");
  const auto it = value.find(key);
  if (it == value.end()) fail(path, std::string("missing field '") + key + "'");
  return *it;
}

double as_number(const json& value, const std::string& path) {
  if (!value.is_number()) fail(path, "expected a number");
  return value.get<double>();
}

std::int64_t as_integer(const json& value, const std::string& path) {
  if (!value.is_number_integer()) fail(path, "expected an integer");
  return value.get<std::int64_t>();
}

std::string as_string(const json& value, const std::string& path) {
  if (!value.is_string()) fail(path, "expected a string");
  return value.get<std::string>();
}

const json& as_array(const json& value, const std::string& path) {
  if (!value.is_array()) fail(path, "expected an array");
  return value;
}

const json& as_object(const json& value, const std::string& path) {
  if (!value.is_object()) fail(path, "expected an object");
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  json value;
  try {
    in >> value;
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  return value;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << text;
}

void write_json_file(const std::filesystem::path& path, const json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

json population_to_json(const Population& population) {
  json rollouts = json::array();
  for (const Rollout& r : population.rollouts) {
    rollouts.push_back({{"answer", r.answer},
                        {"tokens", r.tokens},
                        {"entropy_trace", r.entropy_trace}});
  }
  return {{"query_id", population.query_id},
          {"vocab_size", population.vocab_size},
          {"rollouts", std::move(rollouts)}};
}

Population population_from_json(const json& value) {
  Population pop;
  pop.query_id = as_string(require(value, "query_id", "population"), "query_id");
  pop.vocab_size = static_cast<std::int32_t>(
      as_integer(require(value, "vocab_size", "population"), "vocab_size"));
  const json& rollouts = as_array(require(value, "rollouts", "population"), "rollouts");
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const std::string where = "rollouts[" + std::to_string(i) + "]";
    const json& entry = as_object(rollouts[i], where);
    Rollout r;
    r.answer = as_string(require(entry, "answer", where), where + ".answer");
    for (const json& token : as_array(require(entry, "tokens", where), where + ".tokens")) {
      r.tokens.push_back(
          static_cast<std::int32_t>(as_integer(token, where + ".tokens")));
    }
    for (const json& h :
         as_array(require(entry, "entropy_trace", where), where + ".entropy_trace")) {
      r.entropy_trace.push_back(as_number(h, where + ".entropy_trace"));
    }
    pop.rollouts.push_back(std::move(r));
  }
  validate_population(pop);
  return pop;
}

Population load_population(const std::filesystem::path& path) {
  try {
    return population_from_json(read_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_population(const Population& population, const std::filesystem::path& path) {
  write_json_file(path, population_to_json(population));
}

json world_to_json(const LatentWorld& world) {
  json modes = json::array();
  for (const LatentMode& mode : world.modes) {
    json conditional = json::object();
    for (std::size_t i = 0; i < world.answers.size(); ++i) {
      conditional[world.answers[i]] = mode.conditional[i];
    }
    modes.push_back({{"probability", mode.probability},
                     {"conditional", std::move(conditional)}});
  }
  json truth = json::object();
  json trace_model = json::object();
  for (std::size_t i = 0; i < world.answers.size(); ++i) {
    truth[world.answers[i]] = world.truth[i];
    trace_model[world.answers[i]] = {
        {"mean_uncertainty", world.trace_model[i].mean_uncertainty},
        {"uncertainty_jitter", world.trace_model[i].uncertainty_jitter},
        {"base_tokens", world.trace_model[i].base_tokens}};
  }
  return {{"kappa", world.kappa},
          {"vocab_size", world.vocab_size},
          {"modes", std::move(modes)},
          {"truth", std::move(truth)},
          {"trace_model", std::move(trace_model)}};
}

LatentWorld world_from_json(const json& value) {
  LatentWorld world;
  world.kappa = as_number(require(value, "kappa", "world"), "kappa");
  world.vocab_size = static_cast<std::int32_t>(
      as_integer(require(value, "vocab_size", "world"), "vocab_size"));

  const json& truth = as_object(require(value, "truth", "world"), "truth");
  for (const auto& [answer, reward] : truth.items()) {
    world.answers.push_back(answer);  // nlohmann objects iterate in key order
    world.truth.push_back(static_cast<int>(as_integer(reward, "truth." + answer)));
  }

  const json& trace_model =
      as_object(require(value, "trace_model", "world"), "trace_model");
  for (const std::string& answer : world.answers) {
    const std::string where = "trace_model." + answer;
    const auto it = trace_model.find(answer);
    if (it == trace_model.end()) fail("world", "missing " + where);
    AnswerTraceModel tm;
    tm.mean_uncertainty =
        as_number(require(*it, "mean_uncertainty", where), where + ".mean_uncertainty");
    tm.uncertainty_jitter = as_number(require(*it, "uncertainty_jitter", where),
                                      where + ".uncertainty_jitter");
    for (const json& token :
         as_array(require(*it, "base_tokens", where), where + ".base_tokens")) {
      tm.base_tokens.push_back(
          static_cast<std::int32_t>(as_integer(token, where + ".base_tokens")));
    }
    world.trace_model.push_back(std::move(tm));
  }
  for (const auto& [answer, ignored] : trace_model.items()) {
    (void)ignored;
    if (std::find(world.answers.begin(), world.answers.end(), answer) ==
        world.answers.end()) {
      fail("world", "trace_model entry '" + answer + "' has no truth entry");
    }
  }

  const json& modes = as_array(require(value, "modes", "world"), "modes");
  for (std::size_t z = 0; z < modes.size(); ++z) {
    const std::string where = "modes[" + std::to_string(z) + "]";
    LatentMode mode;
    mode.probability =
        as_number(require(modes[z], "probability", where), where + ".probability");
    mode.conditional.assign(world.answers.size(), 0.0);
    const json& conditional =
        as_object(require(modes[z], "conditional", where), where + ".conditional");
    for (const auto& [answer, p] : conditional.items()) {
      const auto it = std::find(world.answers.begin(), world.answers.end(), answer);
      if (it == world.answers.end()) {
        fail("world", where + ".conditional: answer '" + answer +
                          "' missing from truth/trace_model");
      }
      mode.conditional[static_cast<std::size_t>(it - world.answers.begin())] =
          as_number(p, where + ".conditional." + answer);
    }
    world.modes.push_back(std::move(mode));
  }

  validate_world(world);
  return world;
}

LatentWorld load_world(const std::filesystem::path& path) {
  try {
    return world_from_json(read_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_world(const LatentWorld& world, const std::filesystem::path& path) {
  write_json_file(path, world_to_json(world));
}

json reward_config_to_json(const RewardConfig& cfg) {
  return {{"mode", std::string(to_string(cfg.mode))},
          {"shaping", std::string(to_string(cfg.shaping))},
          {"bonus", std::string(to_string(cfg.bonus))},
          {"alpha", cfg.alpha},
          {"prune_threshold", cfg.prune_threshold},
          {"epsilon", cfg.epsilon},
          {"lambda", cfg.lambda},
          {"exclude_pruned", cfg.exclude_pruned}};
}

RewardConfig reward_config_from_json(const json& value) {
  as_object(value, "reward");
  RewardConfig cfg;
  if (value.contains("mode")) {
    cfg.mode = reward_mode_from_string(as_string(value["mode"], "reward.mode"));
  }
  if (value.contains("shaping")) {
    cfg.shaping = shaping_from_string(as_string(value["shaping"], "reward.shaping"));
  }
  if (value.contains("bonus")) {
    cfg.bonus = bonus_from_string(as_string(value["bonus"], "reward.bonus"));
  }
  if (value.contains("alpha")) cfg.alpha = as_number(value["alpha"], "reward.alpha");
  if (value.contains("prune_threshold")) {
    cfg.prune_threshold = as_number(value["prune_threshold"], "reward.prune_threshold");
  }
  if (value.contains("epsilon")) {
    cfg.epsilon = as_number(value["epsilon"], "reward.epsilon");
  }
  if (value.contains("lambda")) cfg.lambda = as_number(value["lambda"], "reward.lambda");
  if (value.contains("exclude_pruned")) {
    if (!value["exclude_pruned"].is_boolean()) fail("reward.exclude_pruned", "expected a bool");
    cfg.exclude_pruned = value["exclude_pruned"].get<bool>();
  }
  cfg.validate();
  return cfg;
}

json reward_vector_to_json(const RewardVector& rewards) {
  json out = {{"rewards", rewards.rewards},
              {"pruned", rewards.pruned_answers},
              {"p_hat", rewards.p_hat},
              {"p_tilde", rewards.p_tilde}};
  if (rewards.pseudo_label) out["pseudo_label"] = *rewards.pseudo_label;
  return out;
}

std::string reward_vector_csv(const Population& population, const RewardVector& rewards) {
  std::ostringstream out;
  out << "index,answer,reward\n";
  for (std::size_t i = 0; i < population.size(); ++i) {
    out << i << ',' << population.rollouts[i].answer << ','
        << format_double(rewards.rewards[i]) << '\n';
  }
  return out.str();
}

json theory_report_to_json(const theory::TheoryReport& report) {
  json quantities = json::array();
  for (const theory::TheoryQuantity& q : report.quantities) {
    json entry = {{"name", q.name}, {"estimate", q.estimate}};
    if (q.oracle) entry["oracle"] = *q.oracle;
    if (q.std_error) entry["std_error"] = *q.std_error;
    if (q.tolerance) entry["tolerance"] = *q.tolerance;
    if (q.pass) entry["pass"] = *q.pass;
    if (!q.note.empty()) entry["note"] = q.note;
    quantities.push_back(std::move(entry));
  }
  return {{"check", report.check},
          {"samples", report.samples},
          {"passed", report.passed},
          {"quantities", std::move(quantities)}};
}

std::string theory_report_table(const theory::TheoryReport& report) {
  std::ostringstream out;
  out << "check: " << report.check << "  (samples: " << report.samples << ")\n";
  char line[160];
  std::snprintf(line, sizeof(line), "  %-28s %12s %12s %10s %6s\n", "quantity",
                "estimate", "oracle", "std_err", "pass");
  out << line;
  for (const theory::TheoryQuantity& q : report.quantities) {
    const std::string oracle = q.oracle ? format_double(*q.oracle) : "-";
    const std::string se = q.std_error ? format_double(*q.std_error) : "-";
    const std::string pass = q.pass ? (*q.pass ? "yes" : "NO") : "-";
    std::snprintf(line, sizeof(line), "  %-28s %12.6f %12s %10s %6s\n", q.name.c_str(),
                  q.estimate, oracle.c_str(), se.c_str(), pass.c_str());
    out << line;
    if (!q.note.empty()) out << "      " << q.note << "\n";
  }
  out << "  result: " << (report.passed ? "pass" : "FAIL") << "\n";
  return out.str();
}

std::string adapt_trace_csv(const AdaptTrace& trace) {
  std::ostringstream out;
  out << "step,pass_at_1,policy_entropy,mean_reward,pseudo_label_correct,"
         "rollout_correlation,reward_variance\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const AdaptStepRecord& r = trace.steps[i];
    out << (i + 1) << ',' << format_double(r.pass_at_1) << ','
        << format_double(r.policy_entropy) << ',' << format_double(r.mean_reward) << ','
        << r.pseudo_label_correct << ',' << format_double(r.rollout_correlation) << ','
        << format_double(r.reward_variance) << '\n';
  }
  return out.str();
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "kappa,measured_correlation,mode,final_pass_at_1,repeats\n";
  for (const SweepRow& row : rows) {
    out << format_double(row.kappa) << ',' << format_double(row.measured_correlation)
        << ',' << to_string(row.mode) << ',' << format_double(row.final_pass_at_1) << ','
        << row.repeats << '\n';
  }
  return out.str();
}

}  // namespace dare::io
