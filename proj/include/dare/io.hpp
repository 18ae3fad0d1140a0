// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON/CSV serialization and file helpers. Parsers throw ValidationError
// with the path of the offending field; writers are deterministic (sorted
// keys, shortest-round-trip floats, no timestamps) so reruns with the same
// seed produce byte-identical files.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dare/adapt.hpp"
#include "dare/rewards.hpp"
#include "dare/rollout.hpp"
#include "dare/simulator.hpp"
#include "dare/theory.hpp"

namespace dare::io {

using json = nlohmann::json;

std::string format_double(double value);  // shortest round-trip decimal

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
void write_json_file(const std::filesystem::path& path, const json& value);

// population files: {query_id, vocab_size, rollouts:[{answer, tokens, entropy_trace}]}
json population_to_json(const Population& population);
Population population_from_json(const json& value);
Population load_population(const std::filesystem::path& path);
void save_population(const Population& population, const std::filesystem::path& path);

// world files: {kappa, vocab_size, modes:[{probability, conditional}], truth, trace_model}
json world_to_json(const LatentWorld& world);
LatentWorld world_from_json(const json& value);
LatentWorld load_world(const std::filesystem::path& path);
void save_world(const LatentWorld& world, const std::filesystem::path& path);

json reward_config_to_json(const RewardConfig& cfg);
RewardConfig reward_config_from_json(const json& value);

// {rewards:[...], pseudo_label, pruned:[...], p_hat:{...}, p_tilde:{...}}
json reward_vector_to_json(const RewardVector& rewards);
std::string reward_vector_csv(const Population& population, const RewardVector& rewards);

json theory_report_to_json(const theory::TheoryReport& report);
std::string theory_report_table(const theory::TheoryReport& report);

std::string adapt_trace_csv(const AdaptTrace& trace);
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace dare::io
