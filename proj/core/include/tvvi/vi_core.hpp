#pragma once

// Domain geometry, operator evaluation and sampled verification for
// variational inequality problems VIP(F, Z): find Z* in Z with
// <F(Z*), Z - Z*> >= 0 for every Z in Z.
//
// All norms are Euclidean.

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tvvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Point = Eigen::VectorXd;

/// Invalid or missing configuration; `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Precondition broken by the caller (dimension mismatch and the like).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An operator produced a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --------------------------------------------------------------------------
// Domain
// --------------------------------------------------------------------------

class Domain {
 public:
  enum class Kind { Unbounded, Box, Ball, Interval };

  static Domain unbounded(int dim);
  static Domain box(Vector lower, Vector upper);
  static Domain ball(Vector center, double radius);
  static Domain interval(double lo, double hi);

  Kind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  bool bounded() const noexcept { return kind_ != Kind::Unbounded; }

  /// Exact set diameter; absent for unbounded domains.
  std::optional<double> diameter() const;

  /// Euclidean projection. Throws ContractViolation on dimension mismatch.
  Point project(const Point& p) const;

  bool contains(const Point& p, double tol = 0.0) const;

  /// Axis-aligned box used for sampled checks: [-half_width, half_width]^d
  /// intersected with the domain's bounding box.
  std::pair<Vector, Vector> sampling_box(double half_width) const;

  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  const Vector& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }

  std::string describe() const;

 private:
  Domain(Kind kind, int dim) : kind_(kind), dim_(dim) {}

  Kind kind_;
  int dim_;
  Vector lower_, upper_;  // Box / Interval
  Vector center_;         // Ball
  double radius_ = 0.0;   // Ball
};

Point project(const Domain& domain, const Point& p);

// --------------------------------------------------------------------------
// Operator
// --------------------------------------------------------------------------

/// F(z) = A z + b.
struct AffineForm {
  Matrix A;
  Vector b;
};

/// A continuous map F: Z -> R^d plus optional metadata.
///
/// Copies share one evaluation counter, so counting survives being passed
/// around by value. Metadata is set once at construction time through the
/// `with_*` calls; afterwards the operator is treated as immutable and may
/// be evaluated concurrently.
class Operator {
 public:
  using Map = std::function<Vector(const Vector&)>;
  using ScalarFn = std::function<double(const Vector&)>;
  /// Loss of the player owning coordinate i; F_i = d/dz_i loss(z, i).
  using CoordinateLoss = std::function<double(const Vector&, int)>;

  Operator(int dim, Map map);

  static Operator affine(Matrix A, Vector b);

  Operator& with_mu(double mu);
  Operator& with_lipschitz(double lip);
  Operator& with_gbound(double g);
  Operator& with_solution(Point z);
  /// F is the gradient of `f`.
  Operator& with_potential(ScalarFn f);
  /// F is the pseudo-gradient of a game with one scalar player per coordinate.
  Operator& with_coordinate_losses(CoordinateLoss losses);
  Operator& with_name(std::string name);

  int dim() const noexcept { return dim_; }
  std::optional<double> mu() const noexcept { return mu_; }
  std::optional<double> lipschitz() const noexcept { return lip_; }
  std::optional<double> gbound() const noexcept { return gbound_; }
  const std::optional<Point>& solution() const noexcept { return solution_; }
  const std::optional<AffineForm>& affine_form() const noexcept { return affine_; }
  bool has_coordinate_losses() const noexcept { return static_cast<bool>(losses_); }
  const CoordinateLoss& coordinate_losses() const noexcept { return losses_; }
  const std::string& name() const noexcept { return name_; }

  /// F(p). Counts the evaluation; throws NumericalError when the result
  /// contains NaN and ContractViolation on dimension mismatch.
  Vector operator()(const Vector& p) const;

  std::int64_t evaluations() const noexcept { return counter_->load(std::memory_order_relaxed); }
  void reset_evaluations() const noexcept { counter_->store(0, std::memory_order_relaxed); }

 private:
  int dim_;
  Map map_;
  std::optional<double> mu_, lip_, gbound_;
  std::optional<Point> solution_;
  std::optional<AffineForm> affine_;
  CoordinateLoss losses_;
  std::string name_;
  std::shared_ptr<std::atomic<std::int64_t>> counter_;
};

/// F(p), same as `op(p)`.
Vector evaluate(const Operator& op, const Point& p);

/// Stored solution if present; for affine F(x) = Ax + b with positive
/// definite A the root -A^{-1} b when it lies in the domain (always, for an
/// unbounded domain). Absent otherwise, including singular A.
std::optional<Point> analytic_solution(const Operator& op, const Domain& domain);

// --------------------------------------------------------------------------
// Sampled verification
// --------------------------------------------------------------------------

/// Half-width of the sampling box used on unbounded directions.
inline constexpr double kDefaultSamplingHalfWidth = 10.0;
inline constexpr double kVerificationSlack = 1e-9;

struct SamplingOptions {
  double half_width = kDefaultSamplingHalfWidth;
};

/// Uniform sample from sampling_box(half_width) restricted to the domain
/// (rejection for balls).
class DomainSampler {
 public:
  DomainSampler(const Domain& domain, std::uint64_t seed, SamplingOptions opts = {});
  Point next();

 private:
  Domain domain_;
  Vector lo_, hi_;
  std::mt19937_64 rng_;
};

/// <F(Z)-F(Z'), Z-Z'> >= mu |Z-Z'|^2 - 1e-9 on n_samples random pairs.
bool check_strong_monotone(const Operator& op, double mu, const Domain& domain, int n_samples,
                           std::uint64_t seed, SamplingOptions opts = {});

/// |F(Z)-F(Z')| <= lip |Z-Z'| + 1e-9 on n_samples random pairs.
bool check_lipschitz(const Operator& op, double lip, const Domain& domain, int n_samples,
                     std::uint64_t seed, SamplingOptions opts = {});

/// Restricted secant inequality around `center`:
/// <F(Z), Z - center> >= mu |Z - center|^2 - 1e-9 on n_samples points.
bool check_restricted_secant(const Operator& op, double mu, const Point& center,
                             const Domain& domain, int n_samples, std::uint64_t seed,
                             SamplingOptions opts = {});

/// Largest absolute deviation between F and central finite differences of
/// the operator's coordinate losses over n_samples points. Throws
/// ContractViolation when the operator carries no potential.
double finite_difference_error(const Operator& op, const Domain& domain, int n_samples,
                               std::uint64_t seed, SamplingOptions opts = {});

/// Smallest L (to relative precision `rel_tol`) accepted by check_lipschitz,
/// found by doubling then bisection.
double estimate_lipschitz(const Operator& op, const Domain& domain, int n_samples,
                          std::uint64_t seed, double rel_tol = 1e-3, SamplingOptions opts = {});

// --------------------------------------------------------------------------
// Problem sequences
// --------------------------------------------------------------------------

/// F_t together with its solution when known.
struct Round {
  Operator op;
  std::optional<Point> solution;
};

/// A time-indexed family of operators (F_t), t >= 1.
///
/// Pure sequences ignore the learner's play; adaptive ones (the lower-bound
/// adversary) choose F_t after seeing Z_t and are single-threaded.
class ProblemSequence {
 public:
  virtual ~ProblemSequence() = default;

  virtual int dim() const = 0;
  virtual std::optional<int> period() const { return std::nullopt; }
  virtual bool adaptive() const { return false; }

  /// Operator at time t. Adaptive sequences throw ContractViolation.
  virtual Operator at(long t) const = 0;
  virtual std::optional<Point> solution(long /*t*/) const { return std::nullopt; }

  /// Online protocol hook: the learner has committed to `play` at time t.
  virtual Round observe(long t, const Point& /*play*/) { return {at(t), solution(t)}; }
};

/// Pure sequence backed by callables.
class FunctionSequence final : public ProblemSequence {
 public:
  using OperatorAt = std::function<Operator(long)>;
  using SolutionAt = std::function<std::optional<Point>(long)>;

  FunctionSequence(int dim, OperatorAt at, SolutionAt solution = {},
                   std::optional<int> period = std::nullopt);

  int dim() const override { return dim_; }
  std::optional<int> period() const override { return period_; }
  Operator at(long t) const override;
  std::optional<Point> solution(long t) const override;

 private:
  int dim_;
  OperatorAt at_;
  SolutionAt solution_;
  std::optional<int> period_;
};

/// Sequence that repeats a fixed cycle of operators: F_t = cycle[(t-1) mod k].
std::shared_ptr<FunctionSequence> make_periodic_sequence(std::vector<Operator> cycle);

}  // namespace tvvi
