// SPDX-License-Identifier: Apache-2.0

// End-to-end checks of the command-line runner: exit codes, output schemas,
// validation diagnostics, and byte-identical reruns. The binary path comes
// from the DARE_CLI environment variable (set by ctest).

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dare/io.hpp"
#include "dare/worlds.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  if (ok) {
    std::cout << "  ok: " << what << "\n";
  } else {
    std::cout << "  FAILED: " << what << "\n";
    ++failures;
  }
}

fs::path g_self_path;  // argv[0], for locating the sibling CLI binary

std::string cli_path() {
  if (const char* path = std::getenv("DARE_CLI"); path && *path) return path;
  const fs::path sibling = g_self_path.parent_path() / ".." / "tools" / "dare_cli";
  return fs::exists(sibling) ? sibling.string() : "";
}

int run(const std::string& args, const fs::path& stderr_file = {}) {
  std::string command = cli_path() + " " + args + " > /dev/null";
  command += stderr_file.empty() ? " 2> /dev/null" : " 2> " + stderr_file.string();
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

bool identical_dirs(const fs::path& a, const fs::path& b) {
  for (const auto& entry : fs::directory_iterator(a)) {
    const fs::path other = b / entry.path().filename();
    if (!fs::exists(other)) return false;
    if (slurp(entry.path()) != slurp(other)) return false;
  }
  return true;
}

}  // namespace

int main(int, char** argv) {
  g_self_path = fs::path(argv[0]);
  if (cli_path().empty()) {
    std::cout << "cannot locate dare_cli (set DARE_CLI)\n";
    return 1;
  }
  const fs::path scratch =
      fs::path(std::getenv("DARE_TEST_TMP") ? std::getenv("DARE_TEST_TMP") : "/tmp") /
      "cli_tests";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  // estimate on a unanimous population: every reward is 1
  {
    const dare::Population pop =
        dare::testing::make_population({{"A", 0.1}, {"A", 0.2}, {"A", 0.3}});
    dare::io::save_population(pop, scratch / "unanimous.json");
    const int status = run("estimate --population " + (scratch / "unanimous.json").string() +
                           " --mode mv --out " + (scratch / "est").string());
    expect(status == 0, "estimate exits 0 on a valid population");
    const json rewards = json::parse(slurp(scratch / "est/rewards.json"));
    bool all_one = true;
    for (const auto& r : rewards["rewards"]) all_one = all_one && r.get<double>() == 1.0;
    expect(all_one, "unanimous population earns all-1 rewards");
    expect(rewards["pseudo_label"] == "A", "MV output carries the pseudo label");
  }

  // malformed population: exit code 2 and a diagnostic naming the rollout
  {
    json bad = dare::io::population_to_json(
        dare::testing::make_population({{"A", 0.1}, {"B", 0.2}}));
    bad["rollouts"][1]["entropy_trace"] = {0.1, 0.2, 0.3};
    dare::io::write_json_file(scratch / "bad.json", bad);
    const fs::path err = scratch / "bad.err";
    const int status = run("estimate --population " + (scratch / "bad.json").string() +
                               " --out " + (scratch / "est_bad").string(),
                           err);
    expect(status == 2, "malformed population exits with code 2");
    expect(slurp(err).find("rollouts[1]") != std::string::npos,
           "diagnostic names the offending rollout index");
  }

  // pseudo_label appears in MV output only
  {
    const int mv_status =
        run("estimate --population " + (scratch / "unanimous.json").string() +
            " --mode mv --out " + (scratch / "mv").string());
    const int dare_status =
        run("estimate --population " + (scratch / "unanimous.json").string() +
            " --mode dare --out " + (scratch / "dare").string());
    expect(mv_status == 0 && dare_status == 0, "both reward modes run");
    const json mv = json::parse(slurp(scratch / "mv/rewards.json"));
    const json dare_out = json::parse(slurp(scratch / "dare/rewards.json"));
    expect(mv.contains("pseudo_label") && !dare_out.contains("pseudo_label"),
           "pseudo_label present only in MV output");
  }

  // consistency assertion refuses non-identity shaping
  {
    dare::io::save_world(dare::worlds::two_mode_bias(), scratch / "world.json");
    const fs::path err = scratch / "scope.err";
    const int status = run("theory --world " + (scratch / "world.json").string() +
                               " --checks consistency --shaping linear_penalty"
                               " --assert-consistency --samples 50 --rollouts 10"
                               " --out " + (scratch / "scope").string(),
                           err);
    expect(status == 2, "asserting consistency with shaped weights is refused");
    expect(slurp(err).find("frequency_only") != std::string::npos,
           "the refusal explains the scope of the claim");
  }

  // theory command writes reports and exits 0 when assertions pass
  {
    const int status = run("theory --world " + (scratch / "world.json").string() +
                           " --checks bias,consistency --samples 4000 --rollouts 50"
                           " --seed 5 --min-bias 0.1 --out " + (scratch / "theory").string());
    expect(status == 0, "theory checks pass on the two-mode world");
    const json report = json::parse(slurp(scratch / "theory/theory_bias.json"));
    expect(report["passed"].get<bool>(), "bias report records a pass");
  }

  // unknown world file: validation failure
  {
    const int status = run("adapt --world /nonexistent.json --out " +
                           (scratch / "nope").string());
    expect(status == 2, "missing world file exits with code 2");
  }

  // reruns with the same seed are byte-identical, across every command
  {
    const std::string world = " --builtin collapse ";
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", world + "--rollouts 12 --populations 2 --seed 9"},
        {"theory", " --builtin three_outcome --checks collapse,bias,consistency "
                   "--samples 10000 --rollouts 200 --seed 9"},
        {"adapt", world + "--mode dare --steps 12 --rollouts 12 --lr 0.01 --seed 9"},
        {"sweep", world + "--kappa-grid 0,1 --repeats 2 --steps 8 --rollouts 12 --seed 9"},
        {"ablate", world + "--repeats 2 --steps 8 --rollouts 12 --seed 9"},
        {"estimate", " --population " + (scratch / "unanimous.json").string() +
                         " --mode dare"},
    };
    for (const auto& [name, flags] : commands) {
      const fs::path out_a = scratch / (name + "_a");
      const fs::path out_b = scratch / (name + "_b");
      const int status_a = run(name + flags + " --out " + out_a.string());
      const int status_b = run(name + flags + " --out " + out_b.string());
      expect(status_a == 0 && status_b == 0, name + " reruns exit 0");
      expect(identical_dirs(out_a, out_b), name + " reruns are byte-identical");
    }

    // 5 variants x 2 seeds: header plus 10 rows
    const std::string ablation = slurp(scratch / "ablate_a/ablation.csv");
    const long rows = std::count(ablation.begin(), ablation.end(), '\n');
    expect(rows == 11, "ablation grid emits one row per (variant, seed)");
  }

  if (failures == 0) {
    std::cout << "cli tests: all passed\n";
    return 0;
  }
  std::cout << "cli tests: " << failures << " failure(s)\n";
  return 1;
}
