#include "tvvi/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <thread>
#include <unordered_map>

namespace tvvi {

// ---- map ------------------------------------------------------------------

Point GDMap::step(int j, const Point& x) const {
  return domain.project(x - eta * ops[static_cast<std::size_t>(j)](x));
}

Point GDMap::operator()(const Point& x) const { return transport(x, period()); }

Point GDMap::transport(const Point& x, int s) const {
  Point y = x;
  const int k = period();
  for (int i = 0; i < s; ++i) y = step((phase + i) % k, y);
  return y;
}

Point GDMap::iterate(const Point& x, long n) const {
  Point y = x;
  for (long i = 0; i < n; ++i) y = (*this)(y);
  return y;
}

double GDMap::derivative(double x, double h) const { return derivative_of_power(x, 1, h); }

double GDMap::derivative_of_power(double x, int p, double h) const {
  if (dim() != 1) throw ContractViolation("GDMap::derivative: one-dimensional maps only");
  Point a = Point::Constant(1, x + h), b = Point::Constant(1, x - h);
  return (iterate(a, p)(0) - iterate(b, p)(0)) / (2.0 * h);
}

GDMap compose_map(const Scenario& scenario, double eta, int phase) {
  if (scenario.cycle.empty())
    throw ConfigError("scenario.name", "'" + scenario.name + "' is not a periodic operator sequence");
  if (!(eta > 0.0)) throw ConfigError("dynamics.eta", "must be > 0");
  const int k = static_cast<int>(scenario.cycle.size());
  if (phase < 0 || phase >= k) throw ConfigError("dynamics.phase", "must lie in [0, k)");
  return GDMap{scenario.cycle, scenario.domain, eta, phase};
}

GDMap compose_map(const ScenarioId& id, double eta, int phase) {
  return compose_map(build_scenario(id), eta, phase);
}

// ---- orbits ---------------------------------------------------------------

Orbit iterate_orbit(const GDMap& map, const Point& x0, long n_steps, double threshold) {
  if (n_steps < 1) throw ContractViolation("iterate_orbit: n_steps must be >= 1");
  Orbit o;
  o.threshold = threshold;
  o.points.reserve(static_cast<std::size_t>(n_steps) + 1);
  o.points.push_back(x0);
  Point x = x0;
  for (long s = 1; s <= n_steps; ++s) {
    try {
      x = map(x);
    } catch (const NumericalError&) {
      x = Point::Constant(x.size(), std::numeric_limits<double>::infinity());
    }
    o.points.push_back(x);
    if (!x.allFinite() || x.norm() > threshold) {
      o.status = Orbit::Status::Diverged;
      o.diverged_step = s;
      break;
    }
  }
  return o;
}

std::string Classification::label() const {
  switch (kind) {
    case Kind::Converged:
      return "converged";
    case Kind::Periodic:
      return "periodic(" + std::to_string(period) + ")";
    case Kind::BoundedAperiodic:
      return "aperiodic";
    case Kind::Diverged:
      return "diverged";
  }
  return "?";
}

Classification classify_orbit(const Orbit& orbit, long burn_in, double tol, int max_period) {
  using K = Classification::Kind;
  if (orbit.diverged()) return {K::Diverged, 0};
  const auto& pts = orbit.points;
  const auto n = static_cast<long>(pts.size());
  if (burn_in >= n - 1) throw ContractViolation("classify: burn_in must be < n_steps");
  const Point& last = pts.back();
  double osc = 0.0;
  for (long t = burn_in; t < n; ++t) osc = std::max(osc, (pts[static_cast<std::size_t>(t)] - last).norm());
  if (osc < tol) return {K::Converged, 0};
  for (int p = 1; p <= max_period && p < n - burn_in; ++p) {
    bool ok = true;
    for (long t = burn_in; t + p < n && ok; ++t)
      ok = (pts[static_cast<std::size_t>(t + p)] - pts[static_cast<std::size_t>(t)]).norm() < tol;
    if (ok) return {K::Periodic, p};
  }
  return {K::BoundedAperiodic, 0};
}

Classification classify_eta(const GDMap& map, const Point& x0, const ClassifyOptions& opts) {
  if (opts.burn_in >= opts.n_steps) throw ContractViolation("classify_eta: burn_in must be < n_steps");
  return classify_orbit(iterate_orbit(map, x0, opts.n_steps, opts.threshold), opts.burn_in, opts.tol,
                        opts.max_period);
}

// ---- scans ----------------------------------------------------------------

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::vector<double> EtaGrid::values() const {
  if (n < 1) throw ConfigError("dynamics.eta_n", "must be >= 1");
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(n) + extra.size());
  for (int i = 1; i <= n; ++i) v.push_back(lo + (hi - lo) * i / n);
  v.insert(v.end(), extra.begin(), extra.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::optional<int> CellGrid::cell(double x) const {
  if (!(x >= lo && x <= hi)) return std::nullopt;
  int c = static_cast<int>(std::floor((x - lo) / (hi - lo) * n_cells));
  return std::min(c, n_cells - 1);
}

ScanResult bifurcation_scan(const Scenario& scenario, const Point& x0, const EtaGrid& grid,
                            const ScanOptions& opts) {
  const auto etas = grid.values();
  ScanResult out;
  out.rows.resize(etas.size());
  parallel_for(static_cast<int>(etas.size()), opts.threads, [&](int i) {
    const double eta = etas[static_cast<std::size_t>(i)];
    GDMap map = compose_map(scenario, eta);
    Orbit orbit = iterate_orbit(map, x0, opts.classify.n_steps, opts.classify.threshold);
    ScanRow row;
    row.eta = eta;
    row.classification =
        classify_orbit(orbit, opts.classify.burn_in, opts.classify.tol, opts.classify.max_period);
    if (row.classification.kind == Classification::Kind::Converged) {
      if (auto c = opts.cells.cell(orbit.points.back()(0))) row.cells.push_back(*c);
    } else if (!orbit.diverged()) {
      std::set<int> cells;
      for (std::size_t t = static_cast<std::size_t>(opts.classify.burn_in); t < orbit.points.size(); ++t)
        if (auto c = opts.cells.cell(orbit.points[t](0))) cells.insert(*c);
      row.cells.assign(cells.begin(), cells.end());
    }
    out.rows[static_cast<std::size_t>(i)] = std::move(row);
  });
  return out;
}

// ---- periodic orbits ------------------------------------------------------

std::optional<PeriodicOrbit> newton_periodic_orbit(const GDMap& map, int p, double x0, double tol,
                                                   int max_iter) {
  if (p < 1) throw ContractViolation("newton_periodic_orbit: p must be >= 1");
  if (map.dim() != 1) throw ContractViolation("newton_periodic_orbit: one-dimensional maps only");
  auto psi = [&](double x) { return map.iterate(Point::Constant(1, x), p)(0) - x; };
  double x = x0;
  for (int it = 1; it <= max_iter; ++it) {
    const double d = map.derivative_of_power(x, p) - 1.0;
    if (!std::isfinite(d) || std::abs(d) < 1e-12) return std::nullopt;
    const double next = x - psi(x) / d;
    if (!std::isfinite(next)) return std::nullopt;
    const bool small_step = std::abs(next - x) <= 1e-14 * std::max(1.0, std::abs(x));
    x = next;
    const double r = psi(x);
    if (std::abs(r) <= tol || (small_step && std::abs(r) <= 1e3 * tol)) {
      if (std::abs(r) > tol) return std::nullopt;
      PeriodicOrbit out{x, {}, it};
      Point y = Point::Constant(1, x);
      for (int i = 0; i < p; ++i) {
        out.orbit.push_back(y(0));
        y = map(y);
      }
      return out;
    }
  }
  return std::nullopt;
}

Stability orbit_stability(const GDMap& map, const std::vector<double>& orbit) {
  Stability s{1.0, false};
  for (double x : orbit) s.product *= map.derivative(x);
  s.stable = std::abs(s.product) < 1.0;
  return s;
}

Period3Result period3_search(const GDMap& map, double lo, double hi, int n_grid, double tol) {
  if (map.dim() != 1) throw ContractViolation("period3_search: one-dimensional maps only");
  if (!(lo < hi)) throw ContractViolation("period3_search: empty interval");
  auto phi = [&](double x) { return map(Point::Constant(1, x))(0); };
  constexpr int kIntervalChecks = 10000;
  for (int i = 0; i < kIntervalChecks; ++i) {
    const double x = lo + (hi - lo) * i / (kIntervalChecks - 1);
    const double y = phi(x);
    if (!(y >= lo && y <= hi))
      throw ContractViolation("period3_search: map leaves [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "] at x = " + std::to_string(x));
  }
  Period3Result out;
  if (n_grid < 2) return out;
  auto g = [&](double x) { return x - map.iterate(Point::Constant(1, x), 3)(0); };
  std::vector<double> roots;
  double xa = lo, ga = g(lo);
  for (int i = 1; i < n_grid; ++i) {
    const double xb = lo + (hi - lo) * i / (n_grid - 1);
    const double gb = g(xb);
    if (ga == 0.0) {
      roots.push_back(xa);
    } else if ((ga < 0.0) != (gb < 0.0) && gb != 0.0) {
      double a = xa, b = xb, fa = ga;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double fm = g(m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    xa = xb;
    ga = gb;
  }
  if (ga == 0.0) roots.push_back(xa);

  for (double r : roots) {
    if (std::abs(r - phi(r)) < tol) continue;
    out.points.push_back(r);
  }
  // Group the points into cycles; each 3-cycle shows up as three roots.
  std::vector<bool> used(out.points.size(), false);
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    Period3Cycle c;
    c.orbit = {out.points[i], phi(out.points[i]), phi(phi(out.points[i]))};
    for (std::size_t j = i + 1; j < out.points.size(); ++j)
      for (int m = 1; m < 3; ++m)
        if (std::abs(out.points[j] - c.orbit[static_cast<std::size_t>(m)]) < 1e-6) used[j] = true;
    for (int s = 0; s < map.period(); ++s) {
      std::array<double, 3> shifted{};
      for (int m = 0; m < 3; ++m)
        shifted[static_cast<std::size_t>(m)] =
            map.transport(Point::Constant(1, c.orbit[static_cast<std::size_t>(m)]), s)(0);
      c.by_phase.push_back(shifted);
    }
    out.cycles.push_back(std::move(c));
  }
  return out;
}

// ---- star-shaped limit sets -----------------------------------------------

namespace {

struct VecHash {
  std::size_t operator()(const std::vector<long>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (long x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ull;
    return h;
  }
};

class PointGrid {
 public:
  PointGrid(const std::vector<Point>& pts, double cell) : pts_(pts), cell_(cell) {
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(pts[i])].push_back(i);
  }

  bool any_within(const Point& q, double eps) const {
    const long r = static_cast<long>(std::ceil(eps / cell_));
    auto base = key(q);
    std::vector<long> k(base.size());
    return visit(base, k, 0, r, q, eps);
  }

 private:
  std::vector<long> key(const Point& p) const {
    std::vector<long> k(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) k[static_cast<std::size_t>(i)] = static_cast<long>(std::floor(p(i) / cell_));
    return k;
  }

  bool visit(const std::vector<long>& base, std::vector<long>& k, std::size_t axis, long r,
             const Point& q, double eps) const {
    if (axis == base.size()) {
      auto it = cells_.find(k);
      if (it == cells_.end()) return false;
      for (std::size_t i : it->second)
        if ((pts_[i] - q).squaredNorm() <= eps * eps) return true;
      return false;
    }
    for (long d = -r; d <= r; ++d) {
      k[axis] = base[axis] + d;
      if (visit(base, k, axis + 1, r, q, eps)) return true;
    }
    return false;
  }

  const std::vector<Point>& pts_;
  double cell_;
  std::unordered_map<std::vector<long>, std::vector<std::size_t>, VecHash> cells_;
};

}  // namespace

double radial_containment_score(const std::vector<Point>& points, int max_queries) {
  std::vector<double> norms;
  for (const auto& p : points)
    if (p.norm() > 1e-12) norms.push_back(p.norm());
  if (norms.empty()) return 0.0;
  std::nth_element(norms.begin(), norms.begin() + static_cast<long>(norms.size() / 2), norms.end());
  const double median = norms[norms.size() / 2];
  PointGrid grid(points, 0.05 * median);

  constexpr int kSegment = 50;
  const std::size_t stride = std::max<std::size_t>(1, points.size() / static_cast<std::size_t>(max_queries));
  int eligible = 0, contained = 0;
  for (std::size_t i = 0; i < points.size(); i += stride) {
    const Point& x = points[i];
    const double nx = x.norm();
    if (nx <= 1e-12) continue;
    ++eligible;
    const double eps = 0.05 * nx;
    int hit = 0;
    for (int j = 0; j < kSegment; ++j) {
      Point s = x * (static_cast<double>(j) / (kSegment - 1));
      if (grid.any_within(s, eps)) ++hit;
    }
    if (hit >= 0.9 * kSegment) ++contained;
  }
  return eligible ? static_cast<double>(contained) / eligible : 0.0;
}

StarResult star_scan(const Scenario& scenario, double eta, const StarOptions& opts) {
  GDMap map = compose_map(scenario, eta);
  if (opts.n_samples < 1) throw ConfigError("dynamics.n_samples", "must be >= 1");
  if (!(opts.tail_fraction > 0.0 && opts.tail_fraction <= 1.0))
    throw ConfigError("dynamics.tail_fraction", "must lie in (0, 1]");
  const int d = map.dim();
  const int k = map.period();

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> u(opts.box_lo, opts.box_hi);
  std::vector<Point> starts;
  for (int i = 0; i < opts.n_samples; ++i) {
    Point p(d);
    for (int j = 0; j < d; ++j) p(j) = u(rng);
    starts.push_back(p);
  }

  const long tail_start =
      opts.n_steps - static_cast<long>(std::floor(opts.tail_fraction * static_cast<double>(opts.n_steps)));
  struct PerSample {
    std::vector<double> norms;
    std::vector<Point> tail;
    bool diverged = false;
  };
  std::vector<PerSample> res(starts.size());
  parallel_for(opts.n_samples, opts.threads, [&](int i) {
    PerSample& r = res[static_cast<std::size_t>(i)];
    Point x = starts[static_cast<std::size_t>(i)];
    r.norms.reserve(static_cast<std::size_t>(opts.n_steps) + 1);
    r.norms.push_back(x.norm());
    for (long t = 1; t <= opts.n_steps; ++t) {
      if (!r.diverged) {
        try {
          x = map.step(static_cast<int>((t - 1) % k), x);
        } catch (const NumericalError&) {
          r.diverged = true;
        }
        if (!x.allFinite() || x.norm() > opts.threshold) r.diverged = true;
      }
      r.norms.push_back(r.diverged ? std::numeric_limits<double>::infinity() : x.norm());
      if (!r.diverged && t >= tail_start) r.tail.push_back(x);
    }
    if (r.diverged) r.tail.clear();
  });

  StarResult out;
  out.n_samples = opts.n_samples;
  out.avg_norm_series.assign(static_cast<std::size_t>(opts.n_steps) + 1, 0.0);
  for (const auto& r : res) {
    if (r.diverged) ++out.n_diverged;
    for (std::size_t t = 0; t < r.norms.size(); ++t) out.avg_norm_series[t] += r.norms[t] / opts.n_samples;
    out.tail_points.insert(out.tail_points.end(), r.tail.begin(), r.tail.end());
  }
  out.radial_score = radial_containment_score(out.tail_points);
  return out;
}

}  // namespace tvvi
