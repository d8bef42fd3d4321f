#include "tvvi/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <sstream>

namespace tvvi {

std::string command_name(Command c) {
  switch (c) {
    case Command::Track:
      return "track";
    case Command::Bounds:
      return "bounds";
    case Command::Bifurcation:
      return "bifurcation";
    case Command::Orbit:
      return "orbit";
    case Command::Star:
      return "star";
    case Command::Verify:
      return "verify";
  }
  return "?";
}

std::string ParsedConfig::describe_errors() const {
  std::string out;
  for (const auto& e : errors) out += e.field + ": " + e.message + "\n";
  return out;
}

namespace {

const std::set<std::string> kSeededScenarios{"quadratic_drift", "streaming_regression", "glm"};
const std::set<std::string> kHorizonScenarios{"quadratic_drift", "streaming_regression", "glm"};

const std::set<std::string> kTopKeys{"command", "seed", "horizon", "format", "output", "threads",
                                     "fail_on_divergence", "divergence_threshold"};
const std::set<std::string> kAlgorithmKeys{"name", "eta",  "period", "schedule",         "mu",
                                           "K",    "D",    "G",      "L", "literal_indexing",
                                           "start"};
const std::set<std::string> kBoundKeys{"name", "target", "C", "P_star", "init_dist", "k", "G",
                                       "mu",   "D",      "K", "T",      "D0",        "kappa"};
const std::set<std::string> kDynamicsKeys{
    "eta",       "x0",        "phase",      "period",    "eta_lo",     "eta_hi",
    "eta_n",     "eta_extra", "steps",      "burn_in",   "tol",        "max_period",
    "threshold", "cells_lo",  "cells_hi",   "n_cells",   "etas",       "n_samples",
    "box",       "tail_fraction", "star_steps", "star_threshold"};
const std::set<std::string> kVerifyKeys{"samples", "fd_tol", "rounds"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Typed access to the key-value map; every failure lands in `errors`.
class Reader {
 public:
  Reader(const std::map<std::string, std::string>& kv, std::vector<FieldError>& errors)
      : kv_(kv), errors_(errors) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::optional<std::string> str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> real(const std::string& key) {
    auto s = str(key);
    if (!s) return std::nullopt;
    auto v = parse_real(*s);
    if (!v) fail(key, "expected a real number, got '" + *s + "'");
    return v;
  }

  double real(const std::string& key, double fallback) { return real(key).value_or(fallback); }

  double positive(const std::string& key, double fallback) {
    double v = real(key, fallback);
    if (!(v > 0.0)) fail(key, "must be > 0");
    return v;
  }

  std::optional<long> integer(const std::string& key) {
    auto s = str(key);
    if (!s) return std::nullopt;
    char* end = nullptr;
    long v = std::strtol(s->c_str(), &end, 10);
    if (s->empty() || *end != '\0') {
      fail(key, "expected an integer, got '" + *s + "'");
      return std::nullopt;
    }
    return v;
  }

  long integer(const std::string& key, long fallback, long min) {
    long v = integer(key).value_or(fallback);
    if (v < min) fail(key, "must be >= " + std::to_string(min));
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    auto s = str(key);
    if (!s) return fallback;
    if (*s == "true" || *s == "1" || *s == "yes") return true;
    if (*s == "false" || *s == "0" || *s == "no") return false;
    fail(key, "expected true or false, got '" + *s + "'");
    return fallback;
  }

  std::optional<std::vector<double>> list(const std::string& key) {
    auto s = str(key);
    if (!s) return std::nullopt;
    std::vector<double> out;
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto v = parse_real(trim(item));
      if (!v) {
        fail(key, "bad list entry '" + trim(item) + "'");
        return std::nullopt;
      }
      out.push_back(*v);
    }
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  void fail(const std::string& key, const std::string& msg) { errors_.push_back({key, msg}); }

  static std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) return std::nullopt;
    auto slash = s.find('/');
    if (slash != std::string::npos) {
      auto a = parse_real(trim(s.substr(0, slash)));
      auto b = parse_real(trim(s.substr(slash + 1)));
      if (!a || !b || *b == 0.0) return std::nullopt;
      return *a / *b;
    }
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (*end != '\0' || !std::isfinite(v)) return std::nullopt;
    return v;
  }

 private:
  const std::map<std::string, std::string>& kv_;
  std::vector<FieldError>& errors_;
};

std::optional<Command> parse_command(const std::string& s) {
  for (Command c : {Command::Track, Command::Bounds, Command::Bifurcation, Command::Orbit,
                    Command::Star, Command::Verify})
    if (command_name(c) == s) return c;
  return std::nullopt;
}

bool needs_algorithm(Command c) { return c == Command::Track || c == Command::Bounds; }

std::optional<AlgorithmSpec> build_algorithm(Reader& r, const std::string& name, const Scenario& sc,
                                             long horizon) {
  const auto& m = sc.meta;
  auto need = [&](const std::string& key, std::optional<double> fallback) -> std::optional<double> {
    auto v = r.real(key);
    if (!v) v = fallback;
    if (!v) {
      r.fail(key, "required for algorithm '" + name + "' and not provided by the scenario");
      return std::nullopt;
    }
    if (!(*v > 0.0)) {
      r.fail(key, "must be > 0");
      return std::nullopt;
    }
    return v;
  };
  if (name == "forward") {
    std::optional<double> fallback;
    if (m.mu && m.L) fallback = *m.mu / (*m.L * *m.L);
    auto eta = need("algorithm.eta", fallback);
    if (!eta) return std::nullopt;
    return ContractiveForward{*eta};
  }
  if (name == "resolvent") {
    if (sc.domain.bounded()) {
      r.fail("algorithm.name", "resolvent needs an unbounded domain");
      return std::nullopt;
    }
    return Resolvent{};
  }
  if (name == "cyclic_fb") {
    CyclicFB spec;
    spec.period = static_cast<int>(r.integer("algorithm.period", m.k.value_or(1), 1));
    if (spec.period > horizon) r.fail("algorithm.period", "must not exceed the horizon");
    const std::string sched = r.str("algorithm.schedule").value_or("inverse_mu_t");
    if (sched == "inverse_mu_t") {
      auto mu = need("algorithm.mu", m.mu);
      if (!mu) return std::nullopt;
      spec.schedule = StepSchedule::inverse_mu_t(*mu);
    } else if (sched == "constant") {
      std::optional<double> fallback;
      if (m.L) fallback = 1.0 / *m.L;
      auto eta = need("algorithm.eta", fallback);
      if (!eta) return std::nullopt;
      spec.schedule = StepSchedule::constant(*eta);
    } else {
      r.fail("algorithm.schedule", "expected inverse_mu_t or constant");
      return std::nullopt;
    }
    spec.literal_indexing = r.boolean("algorithm.literal_indexing", false);
    return spec;
  }
  if (name == "meta_fixed") {
    MetaFixed spec;
    spec.K = static_cast<int>(r.integer("algorithm.K", 4, 1));
    auto mu = need("algorithm.mu", m.mu);
    std::optional<double> d_fallback = sc.domain.diameter();
    if (!d_fallback) d_fallback = m.D;
    auto D = need("algorithm.D", d_fallback);
    auto G = need("algorithm.G", m.G);
    if (!mu || !D || !G) return std::nullopt;
    spec.mu = *mu;
    spec.D = *D;
    spec.G = *G;
    return spec;
  }
  if (name == "meta_adaptive") {
    MetaAdaptive spec;
    spec.K = static_cast<int>(r.integer("algorithm.K", 4, 1));
    auto mu = need("algorithm.mu", m.mu);
    auto L = need("algorithm.L", m.L);
    if (!mu || !L) return std::nullopt;
    spec.mu = *mu;
    spec.L = *L;
    return spec;
  }
  r.fail("algorithm.name", "unknown algorithm '" + name +
                               "' (forward, resolvent, cyclic_fb, meta_fixed, meta_adaptive)");
  return std::nullopt;
}

ScenarioId scenario_id_with_run_defaults(ScenarioId id, std::uint64_t seed, long horizon) {
  if (kSeededScenarios.count(id.name) && !id.has("seed")) id.params["seed"] = std::to_string(seed);
  if (kHorizonScenarios.count(id.name) && !id.has("horizon"))
    id.params["horizon"] = std::to_string(horizon);
  return id;
}

}  // namespace

Scenario scenario_for(const ExperimentConfig& cfg) {
  return build_scenario(scenario_id_with_run_defaults(cfg.scenario, cfg.seed, cfg.horizon));
}

ParsedConfig parse_config(const std::string& text,
                          const std::map<std::string, std::string>& overrides) {
  ParsedConfig out;
  auto& errors = out.errors;
  std::map<std::string, std::string> kv;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back({"line " + std::to_string(lineno), "expected key = value"});
      continue;
    }
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) {
      errors.push_back({"line " + std::to_string(lineno), "empty key"});
      continue;
    }
    if (!kv.emplace(key, value).second) errors.push_back({key, "duplicate key"});
  }
  for (const auto& [k, v] : overrides) kv[k] = v;

  // Unknown keys.
  ScenarioId sid;
  for (const auto& [key, value] : kv) {
    auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string rest = dot == std::string::npos ? key : key.substr(dot + 1);
    bool known = false;
    if (section.empty())
      known = kTopKeys.count(key) != 0;
    else if (section == "scenario") {
      known = true;
      if (rest == "name")
        sid.name = value;
      else
        sid.params[rest] = value;
    } else if (section == "algorithm")
      known = kAlgorithmKeys.count(rest) != 0;
    else if (section == "bound")
      known = kBoundKeys.count(rest) != 0;
    else if (section == "dynamics")
      known = kDynamicsKeys.count(rest) != 0;
    else if (section == "verify")
      known = kVerifyKeys.count(rest) != 0;
    if (!known) errors.push_back({key, "unknown key"});
  }

  Reader r(kv, errors);
  ExperimentConfig cfg;

  if (auto c = r.str("command")) {
    if (auto cmd = parse_command(*c))
      cfg.command = *cmd;
    else
      r.fail("command", "unknown command '" + *c + "' (track, bounds, bifurcation, orbit, star, verify)");
  } else {
    r.fail("command", "missing");
  }
  if (auto s = r.integer("seed")) {
    if (*s < 0) r.fail("seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(std::max(0L, *s));
  }
  cfg.horizon = r.integer("horizon", 1000, 1);
  if (auto f = r.str("format")) {
    if (*f == "csv")
      cfg.format = Format::Csv;
    else if (*f == "json")
      cfg.format = Format::Json;
    else
      r.fail("format", "expected csv or json");
  }
  cfg.output = r.str("output").value_or("-");
  if (cfg.output.empty()) r.fail("output", "empty path");
  cfg.threads = static_cast<int>(r.integer("threads", 1, 1));
  cfg.fail_on_divergence = r.boolean("fail_on_divergence", false);
  cfg.divergence_threshold = r.positive("divergence_threshold", 1e6);

  if (sid.name.empty()) {
    r.fail("scenario.name", "missing");
  }
  cfg.scenario = sid;

  std::optional<Scenario> sc;
  if (!sid.name.empty()) {
    try {
      sc = build_scenario(scenario_id_with_run_defaults(sid, cfg.seed, cfg.horizon));
    } catch (const ConfigError& e) {
      errors.push_back({e.field(), e.what()});
    } catch (const std::exception& e) {
      errors.push_back({"scenario.name", e.what()});
    }
  }

  // Algorithm.
  if (auto name = r.str("algorithm.name")) {
    cfg.algorithm_name = *name;
    if (sc) cfg.algorithm = build_algorithm(r, *name, *sc, cfg.horizon);
  } else if (needs_algorithm(cfg.command)) {
    r.fail("algorithm.name", "required for command '" + command_name(cfg.command) + "'");
  }
  if (auto eta = r.real("algorithm.eta"); eta && !(*eta > 0.0))
    if (std::none_of(errors.begin(), errors.end(),
                     [](const FieldError& e) { return e.field == "algorithm.eta"; }))
      r.fail("algorithm.eta", "must be > 0");
  if (auto s = r.list("algorithm.start")) {
    cfg.start = Eigen::Map<const Vector>(s->data(), static_cast<Eigen::Index>(s->size()));
    if (sc && cfg.start->size() != sc->domain.dim())
      r.fail("algorithm.start", "dimension " + std::to_string(cfg.start->size()) +
                                    " does not match the scenario dimension " +
                                    std::to_string(sc->domain.dim()));
  }

  // Bound.
  if (auto name = r.str("bound.name")) {
    static const std::set<std::string> names{"thm1", "cor1", "thm3", "cor2", "thm4", "lemma1_lb"};
    if (!names.count(*name)) r.fail("bound.name", "unknown bound '" + *name + "'");
    BoundConfig b;
    b.name = *name;
    b.target = (*name == "cor1" || *name == "thm3") ? BoundTarget::Regret : BoundTarget::Tracking;
    if (auto t = r.str("bound.target")) {
      if (*t == "tracking")
        b.target = BoundTarget::Tracking;
      else if (*t == "regret")
        b.target = BoundTarget::Regret;
      else
        r.fail("bound.target", "expected tracking or regret");
    }
    for (const auto& f : kBoundKeys) {
      if (f == "name" || f == "target") continue;
      if (auto v = r.real("bound." + f)) b.overrides[f] = *v;
    }
    cfg.bound = b;
  } else if (cfg.command == Command::Bounds) {
    r.fail("bound.name", "required for command 'bounds'");
  }

  // Dynamics.
  auto& d = cfg.dynamics;
  d.eta = r.positive("dynamics.eta", d.eta);
  if (auto x = r.real("dynamics.x0")) d.x0 = *x;
  d.phase = static_cast<int>(r.integer("dynamics.phase", 0, 0));
  if (sc && !sc->cycle.empty() && d.phase >= static_cast<int>(sc->cycle.size()))
    r.fail("dynamics.phase", "must be below the period");
  d.period = static_cast<int>(r.integer("dynamics.period", 1, 1));
  d.grid.lo = r.real("dynamics.eta_lo", 0.0);
  d.grid.hi = r.real("dynamics.eta_hi", 8.0);
  if (!(d.grid.hi > d.grid.lo)) r.fail("dynamics.eta_hi", "must exceed dynamics.eta_lo");
  d.grid.n = static_cast<int>(r.integer("dynamics.eta_n", 3000, 1));
  if (auto extra = r.list("dynamics.eta_extra")) d.grid.extra = *extra;
  auto& cl = d.scan.classify;
  cl.n_steps = r.integer("dynamics.steps", 2000, 2);
  cl.burn_in = r.integer("dynamics.burn_in", 1000, 0);
  if (cl.burn_in >= cl.n_steps) r.fail("dynamics.burn_in", "must be below dynamics.steps");
  cl.tol = r.positive("dynamics.tol", 1e-8);
  cl.max_period = static_cast<int>(r.integer("dynamics.max_period", 64, 1));
  cl.threshold = r.positive("dynamics.threshold", kOrbitDivergence);
  d.scan.cells.lo = r.real("dynamics.cells_lo", -10.0);
  d.scan.cells.hi = r.real("dynamics.cells_hi", 10.0);
  if (!(d.scan.cells.hi > d.scan.cells.lo)) r.fail("dynamics.cells_hi", "must exceed dynamics.cells_lo");
  d.scan.cells.n_cells = static_cast<int>(r.integer("dynamics.n_cells", 1000, 1));
  if (auto etas = r.list("dynamics.etas")) {
    d.star_etas = *etas;
    for (double e : *etas)
      if (!(e > 0.0)) r.fail("dynamics.etas", "entries must be > 0");
  }
  d.star.n_samples = static_cast<int>(r.integer("dynamics.n_samples", 100, 1));
  const double box = r.positive("dynamics.box", 500.0);
  d.star.box_lo = -box;
  d.star.box_hi = box;
  d.star.n_steps = r.integer("dynamics.star_steps", 1000, 1);
  d.star.tail_fraction = r.real("dynamics.tail_fraction", 0.5);
  if (!(d.star.tail_fraction > 0.0 && d.star.tail_fraction <= 1.0))
    r.fail("dynamics.tail_fraction", "must lie in (0, 1]");
  d.star.threshold = r.positive("dynamics.star_threshold", 1e6);
  d.star.seed = cfg.seed;
  d.star.threads = cfg.threads;
  d.scan.threads = cfg.threads;

  auto& v = cfg.verify;
  v.samples = static_cast<int>(r.integer("verify.samples", 10000, 1));
  v.fd_tol = r.positive("verify.fd_tol", 1e-6);
  v.rounds = static_cast<int>(r.integer("verify.rounds", 4, 1));

  if (sc) {
    const bool dyn = cfg.command == Command::Bifurcation || cfg.command == Command::Orbit ||
                     cfg.command == Command::Star;
    if (dyn && sc->cycle.empty())
      r.fail("scenario.name", "'" + sid.name + "' is not a periodic operator sequence");
    if ((cfg.command == Command::Bifurcation || cfg.command == Command::Orbit) && sc->domain.dim() != 1)
      r.fail("scenario.name", "command '" + command_name(cfg.command) + "' needs a 1-D scenario");
  }

  if (errors.empty()) out.config = std::move(cfg);
  return out;
}

// ---- run ------------------------------------------------------------------

namespace {

std::vector<double> coords(const Point& p) { return {p.data(), p.data() + p.size()}; }

Point start_point(const ExperimentConfig& cfg, const Scenario& sc) {
  if (cfg.start) return *cfg.start;
  if (sc.default_start.size() == sc.domain.dim()) return sc.default_start;
  return sc.domain.project(Point::Zero(sc.domain.dim()));
}

Trajectory track(const ExperimentConfig& cfg, Scenario& sc) {
  TrackerOptions opts;
  opts.divergence_threshold = cfg.divergence_threshold;
  return run_tracker(*sc.sequence, *cfg.algorithm, sc.domain, start_point(cfg, sc), cfg.horizon,
                     opts);
}

Table track_table(const ExperimentConfig& cfg, const Scenario& sc, const Trajectory& traj) {
  const bool meta = !traj.weights.empty();
  const bool sols = traj.solutions.has_value();
  Table t;
  t.header = {"t", "z"};
  if (sols) {
    for (const char* h : {"z_star", "sq_dist", "cum_track", "cum_regret"}) t.header.push_back(h);
  }
  if (meta) t.header.push_back("weights");

  std::vector<double> track_series, regret_series;
  if (sols) {
    track_series = tracking_error_series(traj);
    regret_series = dynamic_regret_series(traj, *traj.solutions, sc.meta.mu.value_or(0.0));
  }
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::vector<Cell> row{static_cast<std::int64_t>(i + 1), join_reals(coords(traj.plays[i]))};
    if (sols) {
      row.emplace_back(join_reals(coords((*traj.solutions)[i])));
      row.emplace_back((traj.plays[i] - (*traj.solutions)[i]).squaredNorm());
      row.emplace_back(track_series[i]);
      row.emplace_back(regret_series[i]);
    }
    if (meta) row.emplace_back(join_reals(coords(traj.weights[i])));
    t.add(std::move(row));
  }
  if (traj.diverged()) {
    for (long s = *traj.diverged_at; s <= cfg.horizon; ++s) {
      std::vector<Cell> row{static_cast<std::int64_t>(s)};
      while (row.size() < t.header.size()) row.emplace_back(Diverged{});
      t.add(std::move(row));
    }
  }
  return t;
}

double override_or(const BoundConfig& b, const std::string& key, std::optional<double> fallback) {
  auto it = b.overrides.find(key);
  if (it != b.overrides.end()) return it->second;
  if (!fallback) throw ConfigError("bound." + key, "required for bound '" + b.name + "'");
  return *fallback;
}

std::optional<double> contraction_factor(const ExperimentConfig& cfg, const Scenario& sc) {
  if (!cfg.algorithm || !sc.meta.mu || !sc.meta.L) return std::nullopt;
  const auto* f = std::get_if<ContractiveForward>(&*cfg.algorithm);
  if (!f) return std::nullopt;
  const double mu = *sc.meta.mu, L = *sc.meta.L, eta = f->eta;
  const double c2 = 1.0 - 2.0 * eta * mu + eta * eta * L * L;
  if (!(c2 >= 0.0)) return 0.0;
  return std::sqrt(c2);
}

std::optional<double> algorithm_K(const ExperimentConfig& cfg) {
  if (!cfg.algorithm) return std::nullopt;
  if (const auto* a = std::get_if<MetaFixed>(&*cfg.algorithm)) return a->K;
  if (const auto* a = std::get_if<MetaAdaptive>(&*cfg.algorithm)) return a->K;
  if (const auto* a = std::get_if<CyclicFB>(&*cfg.algorithm)) return a->period;
  return std::nullopt;
}

BoundSpec make_bound(const ExperimentConfig& cfg, const Scenario& sc, const Trajectory& traj,
                     const Point& z1) {
  const BoundConfig& b = *cfg.bound;
  const auto& m = sc.meta;
  std::optional<double> k = m.k ? std::optional<double>(*m.k) : algorithm_K(cfg);
  const double T = override_or(b, "T", static_cast<double>(traj.size()));
  std::optional<double> D = sc.domain.diameter();
  if (!D) D = m.D;
  if (b.name == "thm1") {
    std::optional<double> path, init;
    if (traj.solutions && !traj.solutions->empty()) {
      path = quadratic_path_length(*traj.solutions);
      init = (z1 - traj.solutions->front()).norm();
    }
    return Thm1Bound{override_or(b, "C", contraction_factor(cfg, sc)), override_or(b, "P_star", path),
                     override_or(b, "init_dist", init)};
  }
  if (b.name == "cor1")
    return Cor1Bound{override_or(b, "k", k), override_or(b, "G", m.G), override_or(b, "mu", m.mu), T};
  if (b.name == "thm3" || b.name == "cor2") {
    const double G = override_or(b, "G", m.G), mu = override_or(b, "mu", m.mu);
    const double Dv = override_or(b, "D", D), kv = override_or(b, "k", k);
    const double K = override_or(b, "K", algorithm_K(cfg));
    if (b.name == "thm3") return Thm3Bound{G, mu, Dv, kv, K, T};
    return Cor2Bound{G, mu, Dv, kv, K, T};
  }
  if (b.name == "thm4") {
    std::optional<double> d0;
    if (traj.solutions && k) {
      double best = 0.0;
      const auto n = std::min<std::size_t>(static_cast<std::size_t>(*k), traj.solutions->size());
      for (std::size_t i = 0; i < n; ++i) best = std::max(best, (z1 - (*traj.solutions)[i]).norm());
      d0 = best;
    }
    std::optional<double> kappa;
    if (m.mu && m.L) kappa = *m.L / *m.mu;
    return Thm4Bound{override_or(b, "D0", d0), override_or(b, "kappa", kappa), override_or(b, "k", k),
                     override_or(b, "K", algorithm_K(cfg))};
  }
  return Lemma1LowerBound{override_or(b, "D", D), T};
}

Table bounds_table(const ExperimentConfig& cfg, Scenario& sc, bool& diverged) {
  const Point z1 = start_point(cfg, sc);
  Trajectory traj = track(cfg, sc);
  diverged = traj.diverged();
  Table t;
  t.header = {"bound", "target", "measured", "bound_value", "holds"};
  const std::string target = cfg.bound->target == BoundTarget::Tracking ? "tracking" : "regret";
  if (diverged) {
    t.add({cfg.bound->name, target, Diverged{}, Diverged{}, std::string("false")});
    return t;
  }
  BoundSpec spec = make_bound(cfg, sc, traj, z1);
  BoundCheck chk = bound_check(traj, spec, cfg.bound->target, sc.meta.mu.value_or(0.0));
  t.add({cfg.bound->name, target, chk.measured, chk.bound, std::string(chk.holds ? "true" : "false")});
  return t;
}

std::string join_cells(const std::vector<int>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? ";" : "") + std::to_string(cells[i]);
  return out;
}

Table bifurcation_table(const ExperimentConfig& cfg, const Scenario& sc) {
  const auto& d = cfg.dynamics;
  const Point x0 = d.x0 ? Point::Constant(1, *d.x0) : start_point(cfg, sc);
  ScanResult res = bifurcation_scan(sc, x0, d.grid, d.scan);
  Table t;
  t.header = {"eta", "classification", "cells"};
  for (const auto& row : res.rows) t.add({row.eta, row.classification.label(), join_cells(row.cells)});
  return t;
}

Table orbit_table(const ExperimentConfig& cfg, const Scenario& sc) {
  const auto& d = cfg.dynamics;
  GDMap map = compose_map(sc, d.eta, d.phase);
  const double x0 = d.x0.value_or(start_point(cfg, sc)(0));
  auto orbit = newton_periodic_orbit(map, d.period, x0);
  if (!orbit)
    throw NumericalError("Newton iteration for a period-" + std::to_string(d.period) +
                         " point did not converge from x0 = " + std::to_string(x0));
  Stability st = orbit_stability(map, orbit->orbit);
  Table t;
  t.header = {"eta", "period", "index", "x", "derivative", "product", "stable"};
  for (std::size_t i = 0; i < orbit->orbit.size(); ++i)
    t.add({d.eta, static_cast<std::int64_t>(d.period), static_cast<std::int64_t>(i), orbit->orbit[i],
           map.derivative(orbit->orbit[i]), st.product, std::string(st.stable ? "true" : "false")});
  return t;
}

Table star_table(const ExperimentConfig& cfg, const Scenario& sc, bool& diverged) {
  Table t;
  t.header = {"eta", "n_samples", "n_diverged", "final_avg_norm", "radial_score"};
  for (double eta : cfg.dynamics.star_etas) {
    StarResult r = star_scan(sc, eta, cfg.dynamics.star);
    const double fin = r.avg_norm_series.back();
    if (r.n_diverged > 0) diverged = true;
    Cell norm = std::isfinite(fin) ? Cell(fin) : Cell(Diverged{});
    t.add({eta, static_cast<std::int64_t>(r.n_samples), static_cast<std::int64_t>(r.n_diverged), norm,
           r.radial_score});
  }
  return t;
}

Table verify_table(const ExperimentConfig& cfg, Scenario& sc, bool& failed) {
  const auto& v = cfg.verify;
  std::vector<std::pair<long, Operator>> ops;
  if (!sc.cycle.empty()) {
    for (std::size_t i = 0; i < sc.cycle.size(); ++i) ops.emplace_back(static_cast<long>(i + 1), sc.cycle[i]);
  } else if (sc.sequence->adaptive()) {
    // Plays that make the adversary pick each of its solutions.
    const std::vector<double> plays{0.0, 0.9, -0.9, 0.1};
    for (int t = 1; t <= v.rounds; ++t) {
      Point p = Point::Constant(1, plays[static_cast<std::size_t>(t - 1) % plays.size()]);
      ops.emplace_back(t, sc.sequence->observe(t, p).op);
    }
  } else {
    for (int t = 1; t <= v.rounds; ++t) ops.emplace_back(t, sc.sequence->at(t));
  }

  Table t;
  t.header = {"t", "operator", "check", "value", "passed"};
  auto add = [&](long time, const Operator& op, const std::string& check, double value, bool ok) {
    if (!ok) failed = true;
    t.add({static_cast<std::int64_t>(time), op.name(), check, value, std::string(ok ? "true" : "false")});
  };
  for (const auto& [time, op] : ops) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(time);
    if (auto mu = op.mu() ? op.mu() : sc.meta.mu)
      add(time, op, "strong_monotone", *mu, check_strong_monotone(op, *mu, sc.domain, v.samples, seed));
    if (sc.meta.mu_rsi) {
      Point center = op.solution().value_or(Point::Zero(op.dim()));
      add(time, op, "restricted_secant", *sc.meta.mu_rsi,
          check_restricted_secant(op, *sc.meta.mu_rsi, center, sc.domain, v.samples, seed));
    }
    if (auto L = op.lipschitz() ? op.lipschitz() : sc.meta.L)
      add(time, op, "lipschitz", *L, check_lipschitz(op, *L, sc.domain, v.samples, seed + 1));
    if (op.has_coordinate_losses()) {
      const double err = finite_difference_error(op, sc.domain, v.samples, seed + 2);
      add(time, op, "finite_difference", err, err <= v.fd_tol);
    }
  }
  return t;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  Scenario sc = scenario_for(cfg);
  RunOutcome out;
  switch (cfg.command) {
    case Command::Track: {
      Trajectory traj = track(cfg, sc);
      out.diverged = traj.diverged();
      out.table = track_table(cfg, sc, traj);
      break;
    }
    case Command::Bounds:
      out.table = bounds_table(cfg, sc, out.diverged);
      break;
    case Command::Bifurcation:
      out.table = bifurcation_table(cfg, sc);
      break;
    case Command::Orbit:
      out.table = orbit_table(cfg, sc);
      break;
    case Command::Star:
      out.table = star_table(cfg, sc, out.diverged);
      break;
    case Command::Verify:
      out.table = verify_table(cfg, sc, out.checks_failed);
      break;
  }
  if (out.checks_failed)
    out.exit_code = kExitCheckFailed;
  else if (out.diverged && cfg.fail_on_divergence)
    out.exit_code = kExitDiverged;
  return out;
}

RunOutcome run_and_emit(const ExperimentConfig& cfg) {
  RunOutcome out = run_experiment(cfg);
  emit_rows(out.table, cfg.format, cfg.output);
  return out;
}

}  // namespace tvvi
