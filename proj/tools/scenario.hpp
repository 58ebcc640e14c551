#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fisherflow::cli {

using Json = nlohmann::ordered_json;
using Row = std::vector<double>;

struct DynamicsSpec {
  std::string kind = "case_study";  // case_study | constant | contraction_to_prior
  std::vector<Row> rates;           // constant: full rate matrix, column sums zero
  Row prior;                        // contraction_to_prior
  double epsilon = 0.0;             // contraction_to_prior
};

struct GridSpec {
  double t0 = 0.0;
  double t1 = 3.141592653589793;
  std::size_t points = 1024;
};

struct PerturbationSpec {
  std::string mode = "theta_sweep";  // theta_sweep | direction
  std::size_t theta_points = 256;
  Row direction;
  double displacement = 1e-3;
};

struct Tolerances {
  double rate = 1e-9;
  double richardson = 1e-6;
  double trace_scaling = 1e-6;
  double indeterminate_band = 1e-8;
  double filter_relative = 0.05;
  double adjoint = 1e-10;
};

struct WitnessSpec {
  bool required = false;
};

struct NoGoSpec {
  Row prior;
  std::vector<std::size_t> copies{1, 2};
  std::vector<std::size_t> ancilla{0, 2, 4};
};

struct FilterSpec {
  std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
  std::optional<double> expected;
};

struct RetroSpec {
  Row prior;
  std::size_t adjoint_trials = 20;
};

struct QuantumSpec {
  double dt = 1e-3;
  double mix = 1e-6;
  double eps = 1e-3;
  double filter_eps = 1e-2;
  double dephasing_eps = 1e-3;
  std::size_t samples = 50;
  Row prior;
};

struct OutputSpec {
  std::string directory = "out";
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  DynamicsSpec dynamics;
  GridSpec grid;
  std::vector<Row> initial_states;
  PerturbationSpec perturbation;
  std::vector<std::string> analyses;
  Tolerances tolerances;
  WitnessSpec witness;
  NoGoSpec nogo;
  FilterSpec filter;
  RetroSpec retrodiction;
  QuantumSpec quantum;
  OutputSpec output;

  bool has_analysis(const std::string& name) const;
};

// Strict: unknown keys and wrong types raise fisherflow::Error (InvalidInput).
Scenario scenario_from_json(const Json& j);
Json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);

}  // namespace fisherflow::cli
