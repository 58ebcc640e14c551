#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "scenario.hpp"

using namespace fisherflow::cli;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = FISHERFLOW_SCENARIO_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fisherflow_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_scenario(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "scenario.json";
  std::ofstream(p) << text;
  return p.string();
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

int run_quiet(const std::string& cmd, const std::string& path, const fs::path& out) {
  RunOptions opt;
  opt.out_dir = out.string();
  std::ostringstream err;
  return run(cmd, path, opt, err);
}

}  // namespace

TEST_CASE("malformed and unknown-key scenarios exit with 1") {
  const fs::path dir = scratch("invalid");
  CHECK(run_quiet("scan", write_scenario(dir, "{ \"name\": "), dir) == kInvalidInput);
  CHECK(run_quiet("scan", write_scenario(dir, R"({"name": "x", "dynamics": {"kind": "case_study"}, "colour": 1})"),
                  dir) == kInvalidInput);
  CHECK(run_quiet("scan", write_scenario(dir, R"({"dynamics": {"kind": "constant", "rates": [[-1, 1], [1]]}})"),
                  dir) == kInvalidInput);
  CHECK(run_quiet("scan", (dir / "missing.json").string(), dir) == kInvalidInput);
  CHECK(run_quiet("bogus", kScenarios + "/case_study.json", dir) == kInvalidInput);
}

TEST_CASE("witness exit codes") {
  const fs::path dir = scratch("witness");
  CHECK(run_quiet("witness", kScenarios + "/markovian_three_level.json", dir) == kOk);
  const Json rep = read_json(dir / "witness.json");
  CHECK(rep.dump().find("\"found\":false") != std::string::npos);

  Json j = scenario_to_json(load_scenario(kScenarios + "/markovian_three_level.json"));
  j["witness"]["required"] = true;
  CHECK(run_quiet("witness", write_scenario(dir, j.dump()), dir) == kWitnessNotFound);

  CHECK(run_quiet("witness", kScenarios + "/two_level_counterexample.json", dir) == kOk);
  CHECK(read_json(dir / "witness.json").dump().find("\"found\":true") != std::string::npos);
}

TEST_CASE("scenario round trip") {
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    CAPTURE(entry.path().string());
    const Scenario s = load_scenario(entry.path().string());
    const Json once = scenario_to_json(s);
    CHECK(scenario_to_json(scenario_from_json(once)) == once);
  }
}

TEST_CASE("every shipped scenario runs its commands") {
  const fs::path dir = scratch("smoke");
  CHECK(run_quiet("scan", kScenarios + "/contraction_to_prior.json", dir) == kOk);
  CHECK(run_quiet("retro", kScenarios + "/contraction_to_prior.json", dir) == kOk);
  CHECK(fs::exists(dir / "scan.json"));
  CHECK(fs::exists(dir / "retro.json"));
  CHECK(run_quiet("nogo", kScenarios + "/two_level_counterexample.json", dir) == kOk);
  CHECK(run_quiet("filter", kScenarios + "/two_level_counterexample.json", dir) == kOk);
  CHECK(run_quiet("quantum", kScenarios + "/two_level_counterexample.json", dir) == kOk);
  const Json filter = read_json(dir / "filter.json");
  CHECK(filter.dump().find("ladder") != std::string::npos);
}
