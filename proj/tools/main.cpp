#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fisher-metric non-Markovianity analyses driven by scenario files"};
  std::string command;
  std::string scenario;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  app.add_option("command", command, "figure1 | scan | witness | nogo | filter | retro | quantum")
      ->required()
      ->check(CLI::IsMember({"figure1", "scan", "witness", "nogo", "filter", "retro", "quantum"}));
  app.add_option("--scenario", scenario, "scenario JSON file")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the scenario)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the scenario)");
  auto* threads_opt =
      app.add_option("--threads", threads, "worker threads (default: FISHERFLOW_THREADS or 1)")
          ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fisherflow::cli::kInvalidInput;
  }

  fisherflow::cli::RunOptions opt;
  if (*out_opt) opt.out_dir = out_dir;
  if (*seed_opt) opt.seed = seed;
  opt.threads = 1;
  if (*threads_opt) {
    opt.threads = threads;
  } else if (const char* env = std::getenv("FISHERFLOW_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) opt.threads = static_cast<unsigned>(v);
    } catch (const std::exception&) {
      std::cerr << "fisherflow: ignoring invalid FISHERFLOW_THREADS='" << env << "'\n";
    }
  }
  return fisherflow::cli::run(command, scenario, opt, std::cerr);
}
