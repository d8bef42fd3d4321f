#include "tvvi/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Time-varying variational inequality experiments"};
  std::string config_path, out_path, format;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool fail_on_divergence = false;
  app.add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "Output path, '-' for stdout");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", seed, "Seed for scenario generation and sampling");
  app.add_option("--threads", threads, "Worker threads for scans (env TVVI_THREADS)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--fail-on-divergence", fail_on_divergence, "Exit nonzero when a run diverges");
  CLI11_PARSE(app, argc, argv);

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "tvvi: cannot read " << config_path << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();

  std::map<std::string, std::string> overrides;
  if (!out_path.empty()) overrides["output"] = out_path;
  if (!format.empty()) overrides["format"] = format;
  if (seed) overrides["seed"] = std::to_string(*seed);
  if (threads) {
    overrides["threads"] = std::to_string(*threads);
  } else if (const char* env = std::getenv("TVVI_THREADS"); env && *env) {
    overrides["threads"] = env;
  }
  if (fail_on_divergence) overrides["fail_on_divergence"] = "true";

  auto parsed = tvvi::parse_config(buf.str(), overrides);
  if (!parsed.ok()) {
    std::cerr << "tvvi: invalid config " << config_path << "\n" << parsed.describe_errors();
    return 2;
  }
  try {
    auto outcome = tvvi::run_and_emit(*parsed.config);
    if (outcome.exit_code == tvvi::kExitDiverged) std::cerr << "tvvi: run diverged\n";
    if (outcome.exit_code == tvvi::kExitCheckFailed) std::cerr << "tvvi: verification check failed\n";
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "tvvi: " << e.what() << "\n";
    return 1;
  }
}
