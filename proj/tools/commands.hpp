#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fisherflow/propagation.hpp"
#include "scenario.hpp"

namespace fisherflow::cli {

enum ExitCode : int { kOk = 0, kInvalidInput = 1, kNumerical = 2, kWitnessNotFound = 3 };

struct RunOptions {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

struct CommandResult {
  Json report;
  int exit_code = kOk;
  std::vector<std::string> written;  // files produced
};

// One row per (theta, t), theta-major.
struct Figure1Data {
  std::vector<double> times;
  std::vector<double> thetas;
  std::vector<double> d_tr;
  std::vector<double> d_fish;
  std::vector<double> d_fish_rate;
  std::vector<double> min_rate;  // per time

  std::size_t index(std::size_t theta, std::size_t time) const { return theta * times.size() + time; }
};

Dynamics make_dynamics(const DynamicsSpec& spec, double horizon);
RateMatrix constant_rates(const Scenario& s);

// d_theta = cos(theta)/sqrt2 (0,1,-1) + sin(theta)/sqrt6 (2,-1,-1).
Vector figure1_direction(double theta);
Figure1Data compute_figure1(const Scenario& s, unsigned threads);
std::string figure1_csv(const Figure1Data& data);

CommandResult cmd_figure1(const Scenario& s, const RunOptions& opt);
CommandResult cmd_scan(const Scenario& s, const RunOptions& opt);
CommandResult cmd_witness(const Scenario& s, const RunOptions& opt);
CommandResult cmd_nogo(const Scenario& s, const RunOptions& opt);
CommandResult cmd_filter(const Scenario& s, const RunOptions& opt);
CommandResult cmd_retro(const Scenario& s, const RunOptions& opt);
CommandResult cmd_quantum(const Scenario& s, const RunOptions& opt);

// Dispatches by command name, writes <out>/<command>.json and maps errors to
// exit codes. Diagnostics go to `err`.
int run(const std::string& command, const std::string& scenario_path, const RunOptions& opt,
        std::ostream& err);

void write_atomic(const std::string& path, const std::string& content);
// Throws IntegrationAccuracy naming the first non-finite number.
void require_finite(const Json& j, const std::string& where = "report");

}  // namespace fisherflow::cli
