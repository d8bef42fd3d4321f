#include "tvvi/scenarios.hpp"

#include "tvvi/algorithms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace tvvi {

// ---- parameter access -----------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::optional<double> parse_number(const std::string& text) {
  std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    auto num = parse_number(s.substr(0, slash));
    auto den = parse_number(s.substr(slash + 1));
    if (!num || !den || *den == 0.0) return std::nullopt;
    return *num / *den;
  }
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string field(const std::string& key) { return "scenario." + key; }

void warn(const std::string& msg) { std::cerr << "tvvi: warning: " << msg << '\n'; }

}  // namespace

double ScenarioId::get_double(const std::string& key, double fallback) const {
  auto v = get_optional_double(key);
  return v ? *v : fallback;
}

std::optional<double> ScenarioId::get_optional_double(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  auto v = parse_number(it->second);
  if (!v || !std::isfinite(*v)) throw ConfigError(field(key), "expected a number, got '" + it->second + "'");
  return v;
}

long ScenarioId::get_int(const std::string& key, long fallback) const {
  auto v = get_optional_double(key);
  if (!v) return fallback;
  if (*v != std::floor(*v)) throw ConfigError(field(key), "expected an integer");
  return static_cast<long>(*v);
}

std::uint64_t ScenarioId::get_seed(const std::string& key, std::uint64_t fallback) const {
  long v = get_int(key, static_cast<long>(fallback));
  if (v < 0) throw ConfigError(field(key), "must be >= 0");
  return static_cast<std::uint64_t>(v);
}

std::string ScenarioId::get_string(const std::string& key, const std::string& fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : trim(it->second);
}

std::vector<double> ScenarioId::get_list(const std::string& key, std::vector<double> fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::vector<double> out;
  for (const auto& tok : split(it->second, ',')) {
    auto v = parse_number(tok);
    if (!v || !std::isfinite(*v)) throw ConfigError(field(key), "bad list entry '" + tok + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw ConfigError(field(key), "empty list");
  return out;
}

std::vector<Matrix> ScenarioId::get_matrices(const std::string& key, int dim,
                                             std::vector<Matrix> fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::vector<Matrix> out;
  for (const auto& block : split(it->second, ';')) {
    ScenarioId tmp{name, {{key, block}}};
    auto entries = tmp.get_list(key, {});
    if (entries.size() != static_cast<std::size_t>(dim * dim))
      throw ConfigError(field(key), "each matrix needs dim*dim entries");
    Matrix M(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) M(r, c) = entries[static_cast<std::size_t>(r * dim + c)];
    out.push_back(M);
  }
  return out;
}

void ScenarioId::check_known(const std::vector<std::string>& allowed) const {
  for (const auto& [k, v] : params)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError(field(k), "unknown parameter for scenario '" + name + "'");
}

// ---- operator families ----------------------------------------------------

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  double e = std::exp(u);
  return e / (1.0 + e);
}

double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

namespace {

Eigen::VectorXd sym_eigenvalues(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((A + A.transpose()) / 2.0, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

Operator exp_quadratic_operator(const Matrix& A) {
  if (A.rows() != A.cols() || A.rows() < 1) throw ContractViolation("exp_quadratic: A must be square");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ContractViolation("exp_quadratic: A must be symmetric");
  auto ev = sym_eigenvalues(A);
  if (ev.minCoeff() <= 0.0) throw ContractViolation("exp_quadratic: A must be positive definite");
  const int d = static_cast<int>(A.rows());
  Operator op(d, [A](const Vector& x) -> Vector {
    Vector Ax = A * x;
    return sigmoid(0.5 * x.dot(Ax)) * Ax;
  });
  op.with_potential([A](const Vector& x) { return softplus(0.5 * x.dot(A * x)); })
      .with_mu(ev.minCoeff() / 2.0)
      .with_lipschitz(kExpQuadraticSmoothness * ev.maxCoeff())
      .with_solution(Point::Zero(d))
      .with_name("exp_quadratic");
  return op;
}

Operator quadratic_operator(const Matrix& A, const Vector& c) {
  Operator op = Operator::affine(A, -(A * c));
  op.with_potential([A, c](const Vector& x) {
    Vector d = x - c;
    return 0.5 * d.dot(A * d);
  });
  auto ev = sym_eigenvalues(A);
  if (ev.minCoeff() > 0.0) op.with_mu(ev.minCoeff()).with_solution(c);
  op.with_lipschitz(A.operatorNorm()).with_name("quadratic");
  return op;
}

Operator glm_operator(const Matrix& features, const Vector& targets, GlmLink link, double scale,
                      double lambda_reg) {
  if (features.rows() != targets.size() || features.rows() < 1)
    throw ContractViolation("glm_operator: need one target per sample");
  const double n = static_cast<double>(features.rows());
  const int d = static_cast<int>(features.cols());
  if (link == GlmLink::Identity) {
    Matrix A = features.transpose() * features / n + lambda_reg * Matrix::Identity(d, d);
    Vector b = -(features.transpose() * targets) / n;
    Operator op = Operator::affine(A, b);
    op.with_potential([features, targets, n, lambda_reg](const Vector& z) {
      Vector u = features * z;
      return (0.5 * u.squaredNorm() - targets.dot(u)) / n + 0.5 * lambda_reg * z.squaredNorm();
    });
    op.with_name("glm");
    return op;
  }
  Operator op(d, [features, targets, n, scale, lambda_reg](const Vector& z) -> Vector {
    Vector u = features * z;
    Vector r(u.size());
    for (Eigen::Index s = 0; s < u.size(); ++s) r(s) = scale * sigmoid(u(s)) - targets(s);
    return features.transpose() * r / n + lambda_reg * z;
  });
  op.with_potential([features, targets, n, scale, lambda_reg](const Vector& z) {
    Vector u = features * z;
    double acc = 0.0;
    for (Eigen::Index s = 0; s < u.size(); ++s) acc += scale * softplus(u(s)) - targets(s) * u(s);
    return acc / n + 0.5 * lambda_reg * z.squaredNorm();
  });
  op.with_name("glm");
  return op;
}

Operator kelly_operator(const Vector& values, double reserve, double lambda_reg) {
  if (!(reserve > 0.0)) throw ContractViolation("kelly_operator: reserve must be > 0");
  Operator op(static_cast<int>(values.size()), [values, reserve, lambda_reg](const Vector& x) -> Vector {
    const double tot = reserve + x.sum();
    Vector f(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      f(i) = -values(i) * (tot - x(i)) / (tot * tot) + 1.0 + lambda_reg * x(i);
    return f;
  });
  op.with_coordinate_losses([values, reserve, lambda_reg](const Vector& x, int i) {
    const double xi = x(i);
    return -values(i) * xi / (reserve + x.sum()) + xi + 0.5 * lambda_reg * xi * xi;
  });
  op.with_name("kelly");
  return op;
}

Operator rsi_game_operator(double a) {
  Operator op(2, [a](const Vector& z) -> Vector {
    const double x = z(0), y = z(1);
    const double sx = std::sin(x), sy = std::sin(y);
    Vector f(2);
    f(0) = 2.0 * x + std::sin(2.0 * x) * (3.0 + a * sy * sy);
    f(1) = 2.0 * y + std::sin(2.0 * y) * (3.0 - a * sx * sx);
    return f;
  });
  op.with_coordinate_losses([a](const Vector& z, int i) {
    const double x = z(0), y = z(1);
    const double sx = std::sin(x), sy = std::sin(y);
    const double l = x * x + 3.0 * sx * sx + a * sx * sx * sy * sy - y * y - 3.0 * sy * sy;
    return i == 0 ? l : -l;
  });
  op.with_solution(Point::Zero(2)).with_name("rsi_game");
  return op;
}

double rsi_game_lipschitz(const std::vector<double>& a_values, int grid) {
  double best = 0.0;
  const double h = std::numbers::pi / grid;
  for (double a : a_values) {
    for (int i = 0; i < grid; ++i) {
      const double x = i * h;
      for (int j = 0; j < grid; ++j) {
        const double y = j * h;
        const double sx = std::sin(x), sy = std::sin(y);
        Eigen::Matrix2d J;
        J(0, 0) = 2.0 + 2.0 * std::cos(2.0 * x) * (3.0 + a * sy * sy);
        J(0, 1) = a * std::sin(2.0 * x) * std::sin(2.0 * y);
        J(1, 0) = -J(0, 1);
        J(1, 1) = 2.0 + 2.0 * std::cos(2.0 * y) * (3.0 - a * sx * sx);
        best = std::max(best, J.operatorNorm());
      }
    }
  }
  return best;
}

// ---- adversary ------------------------------------------------------------

AdversaryMove adversary_step(AdversaryState& state, const Point& play) {
  if (play.size() != 1) throw ContractViolation("adversary_step: one-dimensional play expected");
  double z = play(0);
  if (!(z >= -1.0 && z <= 1.0)) {
    warn("adversary: play " + std::to_string(z) + " outside [-1, 1], clamped");
    z = std::clamp(std::isnan(z) ? 0.0 : z, -1.0, 1.0);
  }
  const double prev = state.prev_solution;
  double next;
  if (z >= 0.0) {
    if (prev != -1.0)
      next = -1.0;
    else
      next = z >= 0.5 ? 0.0 : 1.0;
  } else {
    if (prev != 1.0)
      next = 1.0;
    else
      next = z <= -0.5 ? 0.0 : -1.0;
  }
  state.prev_solution = next;
  Point sol = Point::Constant(1, next);
  Operator op = quadratic_operator(Matrix::Identity(1, 1), sol);
  op.with_gbound(2.0).with_name("adversary");
  return {sol, op};
}

Operator AdversarySequence::at(long) const {
  throw ContractViolation("adversary sequence: operators depend on the play; use observe()");
}

Round AdversarySequence::observe(long t, const Point& play) {
  if (t != last_t_ + 1) throw ContractViolation("adversary sequence: rounds must be consecutive");
  last_t_ = t;
  auto move = adversary_step(state_, play);
  history_.push_back(move.solution);
  return {move.op, move.solution};
}

// ---- builders -------------------------------------------------------------

namespace {

Matrix random_rotation(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = n(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  return qr.householderQ();
}

// Symmetric matrix with spectrum in [mu, kappa mu], both ends attained for d >= 2.
Matrix random_spd(int d, double mu, double kappa, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(mu, kappa * mu);
  Vector ev(d);
  for (int i = 0; i < d; ++i) ev(i) = u(rng);
  ev(0) = mu;
  if (d > 1) ev(d - 1) = kappa * mu;
  Matrix Q = random_rotation(d, rng);
  Matrix A = Q * ev.asDiagonal() * Q.transpose();
  return (A + A.transpose()) / 2.0;
}

double max_norm_in(const Domain& dom) {
  if (dom.kind() == Domain::Kind::Ball) return dom.center().norm() + dom.radius();
  return dom.lower().cwiseAbs().cwiseMax(dom.upper().cwiseAbs()).norm();
}

Domain parse_domain(const ScenarioId& id, int dim, double fallback_radius) {
  const std::string kind = id.get_string("domain", "unbounded");
  if (kind == "unbounded") return Domain::unbounded(dim);
  const double r = id.get_double("domain_radius", fallback_radius);
  if (!(r > 0.0)) throw ConfigError(field("domain_radius"), "must be > 0");
  if (kind == "ball") return Domain::ball(Vector::Zero(dim), r);
  if (kind == "box") return Domain::box(Vector::Constant(dim, -r), Vector::Constant(dim, r));
  throw ConfigError(field("domain"), "expected unbounded, ball or box");
}

long positive_int(const ScenarioId& id, const std::string& key, long fallback) {
  long v = id.get_int(key, fallback);
  if (v < 1) throw ConfigError(field(key), "must be >= 1");
  return v;
}

double positive(const ScenarioId& id, const std::string& key, double fallback) {
  double v = id.get_double(key, fallback);
  if (!(v > 0.0)) throw ConfigError(field(key), "must be > 0");
  return v;
}

std::shared_ptr<ProblemSequence> horizon_sequence(int dim, std::vector<Operator> ops,
                                                  std::optional<int> period) {
  auto shared = std::make_shared<std::vector<Operator>>(std::move(ops));
  auto pick = [shared, period](long t) -> const Operator& {
    std::size_t idx = period ? static_cast<std::size_t>((t - 1) % *period) : static_cast<std::size_t>(t - 1);
    if (idx >= shared->size())
      throw ContractViolation("scenario: t = " + std::to_string(t) +
                              " beyond the precomputed horizon; raise scenario.horizon");
    return (*shared)[idx];
  };
  return std::make_shared<FunctionSequence>(
      dim, [pick](long t) { return pick(t); }, [pick](long t) { return pick(t).solution(); }, period);
}

Scenario build_quadratic_drift(const ScenarioId& id) {
  id.check_known({"dim", "mu", "kappa", "seed", "drift", "b", "c1", "k", "radius", "centers",
                  "domain", "domain_radius", "horizon", "start", "G"});
  const int d = static_cast<int>(positive_int(id, "dim", 1));
  const double mu = positive(id, "mu", 1.0);
  const double kappa = id.get_double("kappa", 1.0);
  if (!(kappa >= 1.0)) throw ConfigError(field("kappa"), "must be >= 1");
  std::mt19937_64 rng(id.get_seed("seed", 1));
  const std::string drift = id.get_string("drift", "arithmetic");
  const double b = id.get_double("b", 0.1);
  const long horizon = positive_int(id, "horizon", 10000);

  Scenario sc;
  sc.domain = parse_domain(id, d, 5.0);
  sc.meta.mu = mu;
  sc.meta.L = kappa * mu;
  sc.meta.D = sc.domain.diameter();
  sc.meta.known_solutions = true;

  std::vector<Point> centers;
  std::vector<Matrix> mats;
  std::optional<int> period;
  if (drift == "periodic") {
    const int k = static_cast<int>(positive_int(id, "k", 2));
    period = k;
    const double radius = id.get_double("radius", 1.0);
    if (id.has("centers")) {
      auto flat = id.get_list("centers", {});
      if (flat.size() != static_cast<std::size_t>(k * d))
        throw ConfigError(field("centers"), "need k*dim entries");
      for (int j = 0; j < k; ++j)
        centers.push_back(Eigen::Map<const Vector>(flat.data() + j * d, d));
    } else {
      std::normal_distribution<double> n(0.0, 1.0);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int j = 0; j < k; ++j) {
        Vector v(d);
        for (int i = 0; i < d; ++i) v(i) = n(rng);
        v *= radius * std::pow(u(rng), 1.0 / d) / v.norm();
        centers.push_back(v);
      }
    }
    for (int j = 0; j < k; ++j) {
      if (d == 1)
        mats.push_back(Matrix::Constant(1, 1, k == 1 ? mu : mu * std::pow(kappa, double(j) / (k - 1))));
      else
        mats.push_back(random_spd(d, mu, kappa, rng));
    }
    for (const auto& c : centers)
      if (!sc.domain.contains(c, 1e-12))
        throw ConfigError(field("centers"), "periodic centers must lie inside the domain");
    sc.meta.k = k;
  } else if (drift == "arithmetic" || drift == "sqrt") {
    if (sc.domain.bounded())
      throw ConfigError(field("domain"), "drifting solutions need an unbounded domain");
    mats.push_back(d == 1 ? Matrix::Constant(1, 1, mu) : random_spd(d, mu, kappa, rng));
    Vector c = Vector::Zero(d);
    c(0) = id.get_double("c1", 0.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (long t = 1; t <= horizon; ++t) {
      centers.push_back(c);
      if (drift == "arithmetic") {
        c(0) -= b;
      } else {
        Vector u(d);
        for (int i = 0; i < d; ++i) u(i) = n(rng);
        c += (b / std::sqrt(static_cast<double>(t))) * u / u.norm();
      }
    }
  } else {
    throw ConfigError(field("drift"), "expected arithmetic, sqrt or periodic");
  }

  std::vector<Operator> ops;
  for (std::size_t t = 0; t < centers.size(); ++t) {
    const Matrix& A = mats[period ? t % mats.size() : 0];
    ops.push_back(quadratic_operator(A, centers[t]));
  }
  if (auto g = id.get_optional_double("G")) {
    sc.meta.G = *g;
  } else if (sc.domain.bounded()) {
    double cmax = 0.0;
    for (const auto& c : centers) cmax = std::max(cmax, c.norm());
    sc.meta.G = *sc.meta.L * (max_norm_in(sc.domain) + cmax);
  }
  for (auto& op : ops) {
    op.with_mu(mu).with_lipschitz(*sc.meta.L);
    if (sc.meta.G) op.with_gbound(*sc.meta.G);
  }
  if (period) sc.cycle = ops;
  sc.sequence = horizon_sequence(d, ops, period);
  auto start = id.get_list("start", std::vector<double>(static_cast<std::size_t>(d), 0.0));
  if (start.size() != static_cast<std::size_t>(d)) throw ConfigError(field("start"), "need dim entries");
  sc.default_start = Eigen::Map<const Vector>(start.data(), d);
  return sc;
}

Scenario periodic_scenario(std::vector<Operator> cycle, Domain domain, Point start) {
  Scenario sc;
  sc.domain = std::move(domain);
  double mu = std::numeric_limits<double>::infinity(), L = 0.0;
  for (const auto& op : cycle) {
    mu = std::min(mu, op.mu().value_or(0.0));
    L = std::max(L, op.lipschitz().value_or(std::numeric_limits<double>::infinity()));
  }
  sc.meta.mu = mu;
  sc.meta.L = L;
  sc.meta.k = static_cast<int>(cycle.size());
  sc.meta.D = sc.domain.diameter();
  sc.meta.known_solutions = true;
  sc.cycle = cycle;
  sc.sequence = make_periodic_sequence(std::move(cycle));
  sc.default_start = std::move(start);
  return sc;
}

Scenario build_periodic_1d(const ScenarioId& id) {
  id.check_known({});
  auto lin = [](double a) {
    Operator op = quadratic_operator(Matrix::Constant(1, 1, a), Vector::Zero(1));
    return op.with_name("linear");
  };
  return periodic_scenario({lin(8.0), lin(1.0)}, Domain::unbounded(1), Point::Constant(1, 1.0));
}

Scenario build_exp_quadratic(const ScenarioId& id, std::vector<Matrix> fallback, Point start) {
  const int d = static_cast<int>(positive_int(id, "dim", fallback.front().rows()));
  std::vector<Matrix> mats;
  if (d == 1 && id.has("a_values")) {
    for (double a : id.get_list("a_values", {})) mats.push_back(Matrix::Constant(1, 1, a));
  } else {
    mats = id.get_matrices("matrices", d, fallback);
  }
  std::vector<Operator> cycle;
  for (const auto& A : mats) {
    if (A.rows() != d) throw ConfigError(field("matrices"), "dimension mismatch");
    try {
      cycle.push_back(exp_quadratic_operator(A));
    } catch (const ContractViolation& e) {
      throw ConfigError(field("matrices"), e.what());
    }
  }
  if (start.size() != d) start = Point::Constant(d, -0.1);
  return periodic_scenario(std::move(cycle), Domain::unbounded(d), start);
}

Scenario build_rsi_game(const ScenarioId& id) {
  id.check_known({"a_values"});
  auto a_values = id.get_list("a_values", {0.0, 0.5, 1.0});
  for (double a : a_values)
    if (a < 0.0 || a > 1.0) throw ConfigError(field("a_values"), "entries must lie in [0, 1]");
  // Grid maximum plus 1% for the discretization gap.
  const double L = 1.01 * rsi_game_lipschitz(a_values);
  std::vector<Operator> cycle;
  for (double a : a_values) cycle.push_back(rsi_game_operator(a).with_lipschitz(L));
  Scenario sc = periodic_scenario(std::move(cycle), Domain::unbounded(2), Point::Constant(2, 1.0));
  sc.meta.mu.reset();
  sc.meta.L = L;
  sc.meta.mu_rsi = 0.25;
  return sc;
}

Scenario build_kelly(const ScenarioId& id) {
  id.check_known({"n", "values", "budgets", "reserve", "amplitude", "season", "lambda_reg", "G"});
  auto values = id.get_list("values", {2.0, 3.0, 4.0});
  const long n = positive_int(id, "n", static_cast<long>(values.size()));
  auto budgets = id.get_list("budgets", {1.0, 1.5, 2.0});
  if (values.size() != static_cast<std::size_t>(n)) throw ConfigError(field("values"), "need n entries");
  if (budgets.size() != static_cast<std::size_t>(n)) throw ConfigError(field("budgets"), "need n entries");
  for (double v : values)
    if (v < 0.0) throw ConfigError(field("values"), "must be >= 0");
  for (double b : budgets)
    if (!(b > 0.0)) throw ConfigError(field("budgets"), "must be > 0");
  const double R = positive(id, "reserve", 0.5);
  const double amp = id.get_double("amplitude", 0.2);
  if (amp < 0.0 || amp >= 1.0) throw ConfigError(field("amplitude"), "must lie in [0, 1)");
  const int season = static_cast<int>(positive_int(id, "season", 12));
  const double lam = positive(id, "lambda_reg", 0.1);

  const int dim = static_cast<int>(n);
  Vector v = Eigen::Map<const Vector>(values.data(), dim);
  Vector bud = Eigen::Map<const Vector>(budgets.data(), dim);
  Domain dom = Domain::box(Vector::Zero(dim), bud);

  const double vmax_norm = v.norm() * (1.0 + amp), vmax = v.maxCoeff() * (1.0 + amp);
  const double Rmin = R * (1.0 - amp);
  // |dF_i/dx_j| <= v_i/R^2 off the diagonal and 2 v_i/R^2 + lambda on it.
  const double L = lam + (std::sqrt(double(dim)) * vmax_norm + 2.0 * vmax) / (Rmin * Rmin);
  const double G_bound = (v * (1.0 + amp) / Rmin + Vector::Ones(dim) + lam * bud).norm();
  const double G = id.get_double("G", G_bound);

  std::vector<Operator> cycle;
  for (int t = 1; t <= season; ++t) {
    const double phase = 2.0 * std::numbers::pi * t / season;
    Vector vt(dim);
    for (int i = 0; i < dim; ++i)
      vt(i) = v(i) * (1.0 + amp * std::sin(phase + 2.0 * std::numbers::pi * i / dim));
    const double Rt = R * (1.0 + amp * std::sin(phase));
    Operator op = kelly_operator(vt, Rt, lam);
    op.with_mu(lam).with_lipschitz(L).with_gbound(G);
    auto sol = solve_numerically(op, dom, bud / 2.0, 0.5 / L, 1e-13, 2000000);
    if (!sol) throw NumericalError("kelly_auction: equilibrium solver did not converge");
    op.with_solution(*sol);
    cycle.push_back(op);
  }
  Scenario sc = periodic_scenario(std::move(cycle), dom, bud / 2.0);
  sc.meta.mu = lam;
  sc.meta.G = G;
  return sc;
}

struct Stream {
  Matrix features;  // N x d
  Vector targets;
  long n0, rate;
  long count(long t) const { return n0 + rate * (t - 1); }
};

Stream make_stream(const ScenarioId& id, bool glm, GlmLink link, double scale) {
  const int d = static_cast<int>(positive_int(id, "dim", 3));
  const long n0 = positive_int(id, "n0", 10);
  const long rate = id.get_int("rate", 1);
  if (rate < 0) throw ConfigError(field("rate"), "must be >= 0");
  const long horizon = positive_int(id, "horizon", 1000);
  const double noise = id.get_double("noise", 0.5);
  if (noise < 0.0) throw ConfigError(field("noise"), "must be >= 0");
  std::mt19937_64 rng(id.get_seed("seed", 1));
  std::normal_distribution<double> g(0.0, 1.0);
  Vector w(d);
  for (int i = 0; i < d; ++i) w(i) = g(rng);
  const long N = n0 + rate * (horizon - 1);
  Stream s{Matrix(N, d), Vector(N), n0, rate};
  for (long r = 0; r < N; ++r) {
    for (int i = 0; i < d; ++i) s.features(r, i) = g(rng);
    double u = s.features.row(r).dot(w);
    double mean = glm && link == GlmLink::ScaledLogistic ? scale * sigmoid(u) : u;
    s.targets(r) = mean + noise * g(rng);
  }
  return s;
}

// Per-round normalized Gram matrices; returns (min eig, max eig) over t.
std::pair<double, double> gram_range(const Stream& s, long horizon,
                                     std::vector<Matrix>& grams, std::vector<Vector>& moments) {
  const auto d = s.features.cols();
  Matrix G = Matrix::Zero(d, d);
  Vector r = Vector::Zero(d);
  long used = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (long t = 1; t <= horizon; ++t) {
    long n = s.count(t);
    for (; used < n; ++used) {
      G += s.features.row(used).transpose() * s.features.row(used);
      r += s.features.row(used).transpose() * s.targets(used);
    }
    grams.push_back(G / double(n));
    moments.push_back(r / double(n));
    auto ev = sym_eigenvalues(grams.back());
    lo = std::min(lo, ev.minCoeff());
    hi = std::max(hi, ev.maxCoeff());
  }
  return {lo, hi};
}

Scenario build_streaming_regression(const ScenarioId& id) {
  id.check_known({"dim", "n0", "rate", "horizon", "noise", "lambda_reg", "seed", "G"});
  const double lam = positive(id, "lambda_reg", 0.1);
  Stream s = make_stream(id, false, GlmLink::Identity, 1.0);
  const long horizon = positive_int(id, "horizon", 1000);
  const int d = static_cast<int>(s.features.cols());
  std::vector<Matrix> grams;
  std::vector<Vector> moments;
  auto [lo, hi] = gram_range(s, horizon, grams, moments);

  Scenario sc;
  sc.domain = Domain::unbounded(d);
  sc.meta.mu = 2.0 * (lo + lam);
  sc.meta.L = 2.0 * (hi + lam);
  sc.meta.G = id.get_optional_double("G");
  sc.meta.known_solutions = true;
  std::vector<Operator> ops;
  for (long t = 1; t <= horizon; ++t) {
    const Matrix& G = grams[static_cast<std::size_t>(t - 1)];
    const Vector& r = moments[static_cast<std::size_t>(t - 1)];
    const long n = s.count(t);
    Matrix A = 2.0 * (G + lam * Matrix::Identity(d, d));
    Operator op = Operator::affine(A, -2.0 * r);
    Matrix X = s.features.topRows(n);
    Vector y = s.targets.head(n);
    op.with_potential([X, y, lam, n](const Vector& x) {
      return (X * x - y).squaredNorm() / double(n) + lam * x.squaredNorm();
    });
    op.with_mu(*sc.meta.mu).with_lipschitz(*sc.meta.L).with_name("streaming_regression");
    op.with_solution(A.ldlt().solve(2.0 * r));
    if (sc.meta.G) op.with_gbound(*sc.meta.G);
    ops.push_back(op);
  }
  sc.sequence = horizon_sequence(d, std::move(ops), std::nullopt);
  sc.default_start = Point::Zero(d);
  return sc;
}

class GlmSequence final : public ProblemSequence {
 public:
  GlmSequence(Stream s, GlmLink link, double scale, double lam, long horizon, double mu, double L,
              std::optional<double> G)
      : s_(std::move(s)), link_(link), scale_(scale), lam_(lam), horizon_(horizon), mu_(mu), L_(L),
        G_(G), solutions_(static_cast<std::size_t>(horizon)) {}

  int dim() const override { return static_cast<int>(s_.features.cols()); }

  Operator at(long t) const override {
    if (t < 1 || t > horizon_)
      throw ContractViolation("glm: t beyond the precomputed horizon; raise scenario.horizon");
    const long n = s_.count(t);
    Operator op = glm_operator(s_.features.topRows(n), s_.targets.head(n), link_, scale_, lam_);
    op.with_mu(mu_).with_lipschitz(L_);
    if (G_) op.with_gbound(*G_);
    return op;
  }

  std::optional<Point> solution(long t) const override {
    std::lock_guard<std::mutex> lock(mu_lock_);
    // Warm-start from the nearest earlier solution: consecutive problems
    // differ by a single sample.
    auto& slot = solutions_[static_cast<std::size_t>(t - 1)];
    if (slot) return slot;
    Point z0 = Point::Zero(dim());
    for (long s = t - 1; s >= 1; --s)
      if (solutions_[static_cast<std::size_t>(s - 1)]) {
        z0 = *solutions_[static_cast<std::size_t>(s - 1)];
        break;
      }
    Operator op = at(t);
    if (auto exact = analytic_solution(op, Domain::unbounded(dim())))
      slot = exact;
    else
      slot = solve_numerically(op, Domain::unbounded(dim()), z0, 0.5 / L_, 1e-13, 1000000);
    return slot;
  }

 private:
  Stream s_;
  GlmLink link_;
  double scale_, lam_;
  long horizon_;
  double mu_, L_;
  std::optional<double> G_;
  mutable std::mutex mu_lock_;
  mutable std::vector<std::optional<Point>> solutions_;
};

Scenario build_glm(const ScenarioId& id) {
  id.check_known({"dim", "n0", "rate", "horizon", "noise", "lambda_reg", "seed", "link", "scale", "G"});
  const std::string link_name = id.get_string("link", "identity");
  GlmLink link;
  if (link_name == "identity")
    link = GlmLink::Identity;
  else if (link_name == "logistic")
    link = GlmLink::ScaledLogistic;
  else
    throw ConfigError(field("link"), "expected identity or logistic");
  const double scale = positive(id, "scale", 1.0);
  const double lam = positive(id, "lambda_reg", 0.1);
  const long horizon = positive_int(id, "horizon", 1000);
  Stream s = make_stream(id, true, link, scale);
  std::vector<Matrix> grams;
  std::vector<Vector> moments;
  auto [lo, hi] = gram_range(s, horizon, grams, moments);
  const double mu = link == GlmLink::Identity ? lo + lam : lam;
  const double L = (link == GlmLink::Identity ? hi : scale * hi / 4.0) + lam;

  Scenario sc;
  const int d = static_cast<int>(s.features.cols());
  sc.domain = Domain::unbounded(d);
  sc.meta.mu = mu;
  sc.meta.L = L;
  sc.meta.G = id.get_optional_double("G");
  sc.meta.known_solutions = true;
  sc.sequence = std::make_shared<GlmSequence>(std::move(s), link, scale, lam, horizon, mu, L, sc.meta.G);
  sc.default_start = Point::Zero(d);
  return sc;
}

Scenario build_adversary(const ScenarioId& id) {
  id.check_known({});
  Scenario sc;
  sc.domain = Domain::interval(-1.0, 1.0);
  sc.meta.mu = 1.0;
  sc.meta.L = 1.0;
  sc.meta.G = 2.0;
  sc.meta.D = 2.0;
  sc.meta.known_solutions = true;
  sc.sequence = std::make_shared<AdversarySequence>();
  sc.default_start = Point::Zero(1);
  return sc;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"quadratic_drift", "periodic_1d", "exp_quadratic", "chaos_1d",   "star_2d",
          "kelly_auction",   "streaming_regression", "glm",  "rsi_game", "lower_bound_adversary"};
}

Scenario build_scenario(const ScenarioId& id) {
  Scenario sc;
  if (id.name == "quadratic_drift") {
    sc = build_quadratic_drift(id);
  } else if (id.name == "periodic_1d") {
    sc = build_periodic_1d(id);
  } else if (id.name == "exp_quadratic") {
    id.check_known({"dim", "a_values", "matrices"});
    sc = build_exp_quadratic(id, {Matrix::Constant(1, 1, 0.25), Matrix::Constant(1, 1, 4.0)},
                             Point::Constant(1, -0.1));
  } else if (id.name == "chaos_1d") {
    id.check_known({});
    sc = build_exp_quadratic(id, {Matrix::Constant(1, 1, 0.25), Matrix::Constant(1, 1, 4.0)},
                             Point::Constant(1, -0.1));
  } else if (id.name == "star_2d") {
    id.check_known({});
    Matrix A1(2, 2), A2(2, 2);
    A1 << 0.75, 0.0, 0.0, 5.0;
    A2 << 5.0, 1.0, 1.0, 0.75;
    ScenarioId two{id.name, {{"dim", "2"}}};
    sc = build_exp_quadratic(two, {A1, A2}, Point::Constant(2, 1.0));
  } else if (id.name == "kelly_auction") {
    sc = build_kelly(id);
  } else if (id.name == "streaming_regression") {
    sc = build_streaming_regression(id);
  } else if (id.name == "glm") {
    sc = build_glm(id);
  } else if (id.name == "rsi_game") {
    sc = build_rsi_game(id);
  } else if (id.name == "lower_bound_adversary") {
    sc = build_adversary(id);
  } else {
    throw ConfigError("scenario.name", "unknown scenario '" + id.name + "'");
  }
  sc.name = id.name;
  return sc;
}

}  // namespace tvvi
