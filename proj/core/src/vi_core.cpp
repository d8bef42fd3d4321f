#include "tvvi/vi_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tvvi {

namespace {

void require_dim(int expected, Eigen::Index got, const char* what) {
  if (got != expected) {
    std::ostringstream os;
    os << what << ": dimension mismatch (expected " << expected << ", got " << got << ")";
    throw ContractViolation(os.str());
  }
}

}  // namespace

// ---- Domain ---------------------------------------------------------------

Domain Domain::unbounded(int dim) {
  if (dim < 1) throw ContractViolation("Domain::unbounded: dim must be >= 1");
  return Domain(Kind::Unbounded, dim);
}

Domain Domain::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() < 1)
    throw ContractViolation("Domain::box: bounds must have equal positive size");
  if ((lower.array() > upper.array()).any())
    throw ContractViolation("Domain::box: lower > upper");
  Domain d(Kind::Box, static_cast<int>(lower.size()));
  d.lower_ = std::move(lower);
  d.upper_ = std::move(upper);
  return d;
}

Domain Domain::ball(Vector center, double radius) {
  if (center.size() < 1) throw ContractViolation("Domain::ball: empty center");
  if (!(radius > 0.0)) throw ContractViolation("Domain::ball: radius must be > 0");
  Domain d(Kind::Ball, static_cast<int>(center.size()));
  d.lower_ = center.array() - radius;
  d.upper_ = center.array() + radius;
  d.center_ = std::move(center);
  d.radius_ = radius;
  return d;
}

Domain Domain::interval(double lo, double hi) {
  if (lo > hi) throw ContractViolation("Domain::interval: lo > hi");
  Domain d(Kind::Interval, 1);
  d.lower_ = Vector::Constant(1, lo);
  d.upper_ = Vector::Constant(1, hi);
  return d;
}

std::optional<double> Domain::diameter() const {
  switch (kind_) {
    case Kind::Unbounded:
      return std::nullopt;
    case Kind::Box:
    case Kind::Interval:
      return (upper_ - lower_).norm();
    case Kind::Ball:
      return 2.0 * radius_;
  }
  return std::nullopt;
}

Point Domain::project(const Point& p) const {
  require_dim(dim_, p.size(), "project");
  switch (kind_) {
    case Kind::Unbounded:
      return p;
    case Kind::Box:
    case Kind::Interval:
      return p.cwiseMax(lower_).cwiseMin(upper_);
    case Kind::Ball: {
      Vector diff = p - center_;
      double n = diff.norm();
      if (n <= radius_) return p;
      return center_ + diff * (radius_ / n);
    }
  }
  return p;
}

bool Domain::contains(const Point& p, double tol) const {
  require_dim(dim_, p.size(), "contains");
  switch (kind_) {
    case Kind::Unbounded:
      return p.allFinite();
    case Kind::Box:
    case Kind::Interval:
      return ((p.array() >= lower_.array() - tol) && (p.array() <= upper_.array() + tol)).all();
    case Kind::Ball:
      return (p - center_).norm() <= radius_ + tol;
  }
  return false;
}

std::pair<Vector, Vector> Domain::sampling_box(double half_width) const {
  Vector lo = Vector::Constant(dim_, -half_width);
  Vector hi = Vector::Constant(dim_, half_width);
  if (kind_ == Kind::Unbounded) return {lo, hi};
  Vector l = lo.cwiseMax(lower_), h = hi.cwiseMin(upper_);
  // Domain entirely outside the default box: fall back to its own bounds.
  if ((l.array() > h.array()).any()) return {lower_, upper_};
  return {l, h};
}

std::string Domain::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Unbounded:
      os << "unbounded(" << dim_ << ")";
      break;
    case Kind::Box:
      os << "box(" << dim_ << ")";
      break;
    case Kind::Ball:
      os << "ball(r=" << radius_ << ")";
      break;
    case Kind::Interval:
      os << "interval[" << lower_(0) << "," << upper_(0) << "]";
      break;
  }
  return os.str();
}

Point project(const Domain& domain, const Point& p) { return domain.project(p); }

// ---- Operator -------------------------------------------------------------

Operator::Operator(int dim, Map map)
    : dim_(dim), map_(std::move(map)),
      counter_(std::make_shared<std::atomic<std::int64_t>>(0)) {
  if (dim < 1) throw ContractViolation("Operator: dim must be >= 1");
  if (!map_) throw ContractViolation("Operator: empty map");
}

Operator Operator::affine(Matrix A, Vector b) {
  if (A.rows() != A.cols() || A.rows() != b.size() || b.size() < 1)
    throw ContractViolation("Operator::affine: shape mismatch");
  Operator op(static_cast<int>(b.size()), [A, b](const Vector& z) -> Vector { return A * z + b; });
  op.affine_ = AffineForm{std::move(A), std::move(b)};
  return op;
}

Operator& Operator::with_mu(double mu) {
  if (!(mu >= 0.0)) throw ContractViolation("Operator: mu must be >= 0");
  mu_ = mu;
  return *this;
}

Operator& Operator::with_lipschitz(double lip) {
  if (!(lip >= 0.0)) throw ContractViolation("Operator: lipschitz must be >= 0");
  lip_ = lip;
  return *this;
}

Operator& Operator::with_gbound(double g) {
  if (!(g >= 0.0)) throw ContractViolation("Operator: gbound must be >= 0");
  gbound_ = g;
  return *this;
}

Operator& Operator::with_solution(Point z) {
  require_dim(dim_, z.size(), "Operator::with_solution");
  solution_ = std::move(z);
  return *this;
}

Operator& Operator::with_potential(ScalarFn f) {
  losses_ = [f = std::move(f)](const Vector& z, int) { return f(z); };
  return *this;
}

Operator& Operator::with_coordinate_losses(CoordinateLoss losses) {
  losses_ = std::move(losses);
  return *this;
}

Operator& Operator::with_name(std::string name) {
  name_ = std::move(name);
  return *this;
}

Vector Operator::operator()(const Vector& p) const {
  require_dim(dim_, p.size(), "evaluate");
  counter_->fetch_add(1, std::memory_order_relaxed);
  Vector v = map_(p);
  require_dim(dim_, v.size(), "evaluate (result)");
  if (v.hasNaN()) throw NumericalError("evaluate: operator returned NaN");
  return v;
}

Vector evaluate(const Operator& op, const Point& p) { return op(p); }

std::optional<Point> analytic_solution(const Operator& op, const Domain& domain) {
  if (op.solution()) return op.solution();
  const auto& aff = op.affine_form();
  if (!aff) return std::nullopt;
  // A positive definite symmetric part is enough for a unique root.
  Eigen::SelfAdjointEigenSolver<Matrix> es((aff->A + aff->A.transpose()) / 2.0);
  if (es.eigenvalues().minCoeff() <= 0.0) return std::nullopt;
  Eigen::FullPivLU<Matrix> lu(aff->A);
  if (!lu.isInvertible()) return std::nullopt;
  Point root = lu.solve(-aff->b);
  if (!domain.contains(root, 1e-12)) return std::nullopt;
  return root;
}

// ---- sampled checks -------------------------------------------------------

DomainSampler::DomainSampler(const Domain& domain, std::uint64_t seed, SamplingOptions opts)
    : domain_(domain), rng_(seed) {
  auto [lo, hi] = domain.sampling_box(opts.half_width);
  lo_ = std::move(lo);
  hi_ = std::move(hi);
}

Point DomainSampler::next() {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Point p(lo_.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = lo_(i) + (hi_(i) - lo_(i)) * u(rng_);
    if (domain_.contains(p)) return p;
  }
  // Pathological rejection rate; the projection is still inside the domain.
  Point p(lo_.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = lo_(i) + (hi_(i) - lo_(i)) * u(rng_);
  return domain_.project(p);
}

bool check_strong_monotone(const Operator& op, double mu, const Domain& domain, int n_samples,
                           std::uint64_t seed, SamplingOptions opts) {
  if (mu < 0.0 || n_samples < 1) throw ContractViolation("check_strong_monotone: bad arguments");
  DomainSampler s(domain, seed, opts);
  for (int i = 0; i < n_samples; ++i) {
    Point z = s.next(), w = s.next();
    Vector d = z - w;
    if ((op(z) - op(w)).dot(d) < mu * d.squaredNorm() - kVerificationSlack) return false;
  }
  return true;
}

bool check_lipschitz(const Operator& op, double lip, const Domain& domain, int n_samples,
                     std::uint64_t seed, SamplingOptions opts) {
  if (lip < 0.0 || n_samples < 1) throw ContractViolation("check_lipschitz: bad arguments");
  DomainSampler s(domain, seed, opts);
  for (int i = 0; i < n_samples; ++i) {
    Point z = s.next(), w = s.next();
    if ((op(z) - op(w)).norm() > lip * (z - w).norm() + kVerificationSlack) return false;
  }
  return true;
}

bool check_restricted_secant(const Operator& op, double mu, const Point& center,
                             const Domain& domain, int n_samples, std::uint64_t seed,
                             SamplingOptions opts) {
  if (mu < 0.0 || n_samples < 1) throw ContractViolation("check_restricted_secant: bad arguments");
  DomainSampler s(domain, seed, opts);
  for (int i = 0; i < n_samples; ++i) {
    Point z = s.next();
    Vector d = z - center;
    if (op(z).dot(d) < mu * d.squaredNorm() - kVerificationSlack) return false;
  }
  return true;
}

double finite_difference_error(const Operator& op, const Domain& domain, int n_samples,
                               std::uint64_t seed, SamplingOptions opts) {
  if (!op.has_coordinate_losses())
    throw ContractViolation("finite_difference_error: operator has no potential");
  const auto& loss = op.coordinate_losses();
  const double h = 1e-5;
  DomainSampler s(domain, seed, opts);
  double worst = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    Point z = s.next();
    Vector f = op(z);
    for (int i = 0; i < op.dim(); ++i) {
      Point zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      double fd = (loss(zp, i) - loss(zm, i)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - f(i)));
    }
  }
  return worst;
}

double estimate_lipschitz(const Operator& op, const Domain& domain, int n_samples,
                          std::uint64_t seed, double rel_tol, SamplingOptions opts) {
  double hi = 1.0;
  while (!check_lipschitz(op, hi, domain, n_samples, seed, opts)) {
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError("estimate_lipschitz: no finite constant found");
  }
  double lo = 0.0;
  while (hi - lo > rel_tol * hi) {
    double mid = 0.5 * (lo + hi);
    if (check_lipschitz(op, mid, domain, n_samples, seed, opts))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

// ---- sequences ------------------------------------------------------------

FunctionSequence::FunctionSequence(int dim, OperatorAt at, SolutionAt solution,
                                   std::optional<int> period)
    : dim_(dim), at_(std::move(at)), solution_(std::move(solution)), period_(period) {
  if (period_ && *period_ < 1) throw ContractViolation("FunctionSequence: period must be >= 1");
}

Operator FunctionSequence::at(long t) const {
  if (t < 1) throw ContractViolation("ProblemSequence::at: t must be >= 1");
  return at_(t);
}

std::optional<Point> FunctionSequence::solution(long t) const {
  if (solution_) return solution_(t);
  return at(t).solution();
}

std::shared_ptr<FunctionSequence> make_periodic_sequence(std::vector<Operator> cycle) {
  if (cycle.empty()) throw ContractViolation("make_periodic_sequence: empty cycle");
  int dim = cycle.front().dim();
  for (const auto& op : cycle) require_dim(dim, op.dim(), "make_periodic_sequence");
  int k = static_cast<int>(cycle.size());
  auto ops = std::make_shared<std::vector<Operator>>(std::move(cycle));
  return std::make_shared<FunctionSequence>(
      dim, [ops, k](long t) { return (*ops)[static_cast<std::size_t>((t - 1) % k)]; },
      [ops, k](long t) -> std::optional<Point> {
        const Operator& op = (*ops)[static_cast<std::size_t>((t - 1) % k)];
        if (op.solution()) return op.solution();
        return analytic_solution(op, Domain::unbounded(op.dim()));
      },
      k);
}

}  // namespace tvvi
