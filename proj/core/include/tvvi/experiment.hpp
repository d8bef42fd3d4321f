#pragma once

// Config-driven experiment runner behind the tvvi command-line tool.
//
// Config files are flat "key = value" lines; '#' starts a comment. Keys:
//   command, seed, horizon, format, output, threads, fail_on_divergence,
//   divergence_threshold
//   scenario.name, scenario.<param>            (see build_scenario)
//   algorithm.name = forward | resolvent | cyclic_fb | meta_fixed | meta_adaptive
//   algorithm.{eta, period, schedule, mu, K, D, G, L, literal_indexing, start}
//   bound.name = thm1 | cor1 | thm3 | cor2 | thm4 | lemma1_lb
//   bound.{target, C, P_star, init_dist, k, G, mu, D, K, T, D0, kappa}
//   dynamics.{eta, x0, phase, period, eta_lo, eta_hi, eta_n, eta_extra, steps,
//             burn_in, tol, max_period, threshold, cells_lo, cells_hi, n_cells,
//             etas, n_samples, box, tail_fraction, star_steps, star_threshold}
//   verify.{samples, fd_tol, rounds}

#include "tvvi/algorithms.hpp"
#include "tvvi/dynamics.hpp"
#include "tvvi/metrics.hpp"
#include "tvvi/rows.hpp"
#include "tvvi/scenarios.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tvvi {

enum class Command { Track, Bounds, Bifurcation, Orbit, Star, Verify };

std::string command_name(Command c);

struct BoundConfig {
  std::string name;
  BoundTarget target = BoundTarget::Tracking;
  std::map<std::string, double> overrides;  // bound.<field>
};

struct DynamicsConfig {
  double eta = 3.9;
  std::optional<double> x0;  // defaults to the scenario start
  int phase = 0;
  int period = 1;  // orbit command
  EtaGrid grid;
  ScanOptions scan;
  std::vector<double> star_etas{0.4, 0.5, 1.2};
  StarOptions star;
};

struct VerifyConfig {
  int samples = 10000;
  double fd_tol = 1e-6;
  int rounds = 4;  // time steps checked on non-periodic sequences
};

struct ExperimentConfig {
  Command command = Command::Track;
  ScenarioId scenario;
  std::string algorithm_name;
  std::optional<AlgorithmSpec> algorithm;
  std::optional<Point> start;
  long horizon = 1000;
  std::uint64_t seed = 1;
  std::string output = "-";
  Format format = Format::Csv;
  int threads = 1;
  bool fail_on_divergence = false;
  double divergence_threshold = 1e6;
  std::optional<BoundConfig> bound;
  DynamicsConfig dynamics;
  VerifyConfig verify;
};

struct FieldError {
  std::string field;
  std::string message;
};

struct ParsedConfig {
  std::optional<ExperimentConfig> config;
  std::vector<FieldError> errors;

  bool ok() const { return config.has_value() && errors.empty(); }
  /// One "field: message" line per error.
  std::string describe_errors() const;
};

/// Validates everything up front, including building the scenario once.
/// `overrides` replace (or add) keys of the text, as command-line flags do.
ParsedConfig parse_config(const std::string& text,
                          const std::map<std::string, std::string>& overrides = {});

/// Builds the scenario with the run-level seed and horizon filled in.
Scenario scenario_for(const ExperimentConfig& cfg);

inline constexpr int kExitOk = 0;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitCheckFailed = 4;

struct RunOutcome {
  Table table;
  bool diverged = false;
  bool checks_failed = false;
  int exit_code = kExitOk;
};

/// Computes the result table without writing it.
RunOutcome run_experiment(const ExperimentConfig& cfg);

/// run_experiment followed by emit_rows to cfg.output.
RunOutcome run_and_emit(const ExperimentConfig& cfg);

}  // namespace tvvi
