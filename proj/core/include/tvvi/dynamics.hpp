#pragma once

// Fixed-step gradient descent on k-periodic problems viewed as an
// autonomous map: one period of projected steps composed into Phi.

#include "tvvi/scenarios.hpp"
#include "tvvi/vi_core.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tvvi {

inline constexpr double kOrbitDivergence = 1000.0;
inline constexpr double kDerivativeStep = 1e-6;

/// Phi(x) = Phi_{p+k-1} o ... o Phi_{p+1} o Phi_p (x) with indices mod k and
/// Phi_j(x) = project(x - eta F_j(x)). Phase 0 follows time order, so
/// iterating Phi from x_1 visits x_1, x_{k+1}, x_{2k+1}, ... Phase s gives the
/// conjugate map sampled at times s+1, k+s+1, ...
struct GDMap {
  std::vector<Operator> ops;
  Domain domain = Domain::unbounded(1);
  double eta = 0.0;
  int phase = 0;

  int period() const { return static_cast<int>(ops.size()); }
  int dim() const { return domain.dim(); }

  /// Single projected step with operator j (zero-based).
  Point step(int j, const Point& x) const;
  Point operator()(const Point& x) const;
  Point iterate(const Point& x, long n) const;
  /// Applies the first `s` steps of a period; maps cycles of this map to
  /// cycles of the phase + s map.
  Point transport(const Point& x, int s) const;
  /// Central difference of the 1-D map, h = 1e-6.
  double derivative(double x, double h = kDerivativeStep) const;
  double derivative_of_power(double x, int p, double h = kDerivativeStep) const;
};

GDMap compose_map(const Scenario& scenario, double eta, int phase = 0);
GDMap compose_map(const ScenarioId& id, double eta, int phase = 0);

struct Orbit {
  enum class Status { Bounded, Diverged };
  std::vector<Point> points;  // points[0] = x0, points[s] = Phi^s(x0)
  Status status = Status::Bounded;
  std::optional<long> diverged_step;
  double threshold = kOrbitDivergence;

  bool diverged() const { return status == Status::Diverged; }
};

/// Stops at the first point that is non-finite or exceeds `threshold` in norm.
Orbit iterate_orbit(const GDMap& map, const Point& x0, long n_steps,
                    double threshold = kOrbitDivergence);

struct Classification {
  enum class Kind { Converged, Periodic, BoundedAperiodic, Diverged };
  Kind kind = Kind::BoundedAperiodic;
  int period = 0;  // Periodic only

  std::string label() const;
  bool operator==(const Classification&) const = default;
};

struct ClassifyOptions {
  long n_steps = 2000;
  long burn_in = 1000;
  double tol = 1e-8;
  int max_period = 64;
  double threshold = kOrbitDivergence;
};

/// Converged when every tail point lies within tol of the last one;
/// Periodic(p) for the smallest p with |x_{t+p} - x_t| < tol over the tail.
Classification classify_orbit(const Orbit& orbit, long burn_in, double tol, int max_period);
Classification classify_eta(const GDMap& map, const Point& x0, const ClassifyOptions& opts = {});

struct EtaGrid {
  double lo = 0.0, hi = 8.0;
  int n = 3000;  // eta_i = lo + (hi - lo) i / n, i = 1..n
  std::vector<double> extra;  // merged into the grid in eta order
  std::vector<double> values() const;
};

struct CellGrid {
  double lo = -10.0, hi = 10.0;
  int n_cells = 1000;
  std::optional<int> cell(double x) const;
};

struct ScanRow {
  double eta = 0.0;
  Classification classification;
  std::vector<int> cells;  // sorted, first coordinate after burn-in
};

struct ScanResult {
  std::vector<ScanRow> rows;
};

struct ScanOptions {
  ClassifyOptions classify;
  CellGrid cells;
  int threads = 1;
};

/// Rows come out in eta order whatever the thread count. Converged rows
/// report the single cell of the limit point.
ScanResult bifurcation_scan(const Scenario& scenario, const Point& x0, const EtaGrid& grid,
                            const ScanOptions& opts = {});

struct PeriodicOrbit {
  double fixed_point = 0.0;
  std::vector<double> orbit;  // x, Phi(x), ..., Phi^{p-1}(x)
  int iterations = 0;
};

/// Newton on psi(x) = Phi^p(x) - x with a central-difference derivative.
/// Absent on non-convergence or when |psi'| < 1e-12. 1-D maps only.
std::optional<PeriodicOrbit> newton_periodic_orbit(const GDMap& map, int p, double x0,
                                                   double tol = 1e-12, int max_iter = 100);

struct Stability {
  double product = 0.0;
  bool stable = false;
};

Stability orbit_stability(const GDMap& map, const std::vector<double>& orbit);

struct Period3Cycle {
  std::array<double, 3> orbit;
  /// by_phase[s] is the same cycle for the phase (map.phase + s) map.
  std::vector<std::array<double, 3>> by_phase;
};

struct Period3Result {
  std::vector<double> points;  // sorted period-3 points found
  std::vector<Period3Cycle> cycles;
};

/// Sign changes of x - Phi^3(x) on an n_grid grid, refined by bisection,
/// fixed points of Phi dropped. Throws ContractViolation when a sampled check
/// on 10^4 points finds Phi leaving the interval.
Period3Result period3_search(const GDMap& map, double lo, double hi, int n_grid, double tol = 1e-8);

struct StarOptions {
  int n_samples = 100;
  double box_lo = -500.0, box_hi = 500.0;
  long n_steps = 1000;  // per-step gradient iterations
  double tail_fraction = 0.5;
  std::uint64_t seed = 1;
  double threshold = 1e6;
  int threads = 1;
};

struct StarResult {
  std::vector<Point> tail_points;
  std::vector<double> avg_norm_series;  // infinity after any divergence
  double radial_score = 0.0;
  int n_diverged = 0;
  int n_samples = 0;

  bool diverged() const { return n_samples > 0 && n_diverged == n_samples; }
};

/// Fraction of points x for which at least 90% of 50 equispaced points of
/// the segment [0, x] have a point of the set within 0.05 |x|.
double radial_containment_score(const std::vector<Point>& points, int max_queries = 400);

StarResult star_scan(const Scenario& scenario, double eta, const StarOptions& opts = {});

/// Runs fn(i) for i in [0, n) on up to `threads` threads.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace tvvi
