#include "tvvi/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <type_traits>

namespace tvvi {

StepSchedule StepSchedule::constant(double eta) {
  if (!(eta > 0.0)) throw ConfigError("eta", "step size must be > 0");
  return {Kind::Constant, eta};
}

StepSchedule StepSchedule::inverse_mu_t(double mu) {
  if (!(mu > 0.0)) throw ConfigError("mu", "must be > 0");
  return {Kind::InverseMuT, mu};
}

double StepSchedule::at(long s) const {
  if (kind == Kind::Constant) return value;
  return 1.0 / (value * static_cast<double>(s));
}

Point forward_step(const Operator& op, const Domain& domain, const Point& z, double eta) {
  if (!(eta > 0.0)) throw ContractViolation("forward_step: eta must be > 0");
  return domain.project(z - eta * op(z));
}

Point resolvent_step(const Operator& op, const Point& z) {
  const auto& aff = op.affine_form();
  if (!aff) throw ContractViolation("resolvent_step: operator is not affine");
  if (z.size() != aff->b.size()) throw ContractViolation("resolvent_step: dimension mismatch");
  Matrix M = Matrix::Identity(aff->A.rows(), aff->A.cols()) + aff->A;
  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible()) throw ContractViolation("resolvent_step: I + A is singular");
  Point out = lu.solve(z - aff->b);
  // One refinement step keeps the residual near machine precision for
  // badly scaled systems.
  out += lu.solve(z - aff->b - M * out);
  return out;
}

Operator make_surrogate(const Vector& g, const Point& z_t, double mu) {
  if (!(mu > 0.0)) throw ContractViolation("make_surrogate: mu must be > 0");
  if (g.size() != z_t.size()) throw ContractViolation("make_surrogate: dimension mismatch");
  const auto d = g.size();
  Operator op = Operator::affine(mu * Matrix::Identity(d, d), g - mu * z_t);
  op.with_mu(mu).with_lipschitz(mu).with_solution(z_t - g / mu).with_name("surrogate");
  return op;
}

// ---- cyclic forward-backward ----------------------------------------------

CyclicFBState::CyclicFBState(int period_, const Point& z1, StepSchedule schedule_, bool literal)
    : period(period_), schedule(schedule_), literal_indexing(literal) {
  if (period < 1) throw ConfigError("algorithm.period", "must be >= 1");
  slots.assign(static_cast<std::size_t>(period), z1);
  slot_steps.assign(static_cast<std::size_t>(period), 0);
}

int CyclicFBState::slot_for(long t) const {
  if (t < 1) throw ContractViolation("cyclic_fb: t must be >= 1");
  return static_cast<int>((literal_indexing ? t : t - 1) % period);
}

Point cyclic_fb_step(CyclicFBState& state, const Domain& domain, long t, const Operator& op_input) {
  const auto n = static_cast<std::size_t>(state.slot_for(t));
  Point play = state.slots[n];
  long s = state.slot_steps[n] + 1;
  state.slots[n] = domain.project(play - state.schedule.at(s) * op_input(play));
  state.slot_steps[n] = s;
  return play;
}

// ---- exponential weights --------------------------------------------------

Vector argmin_uniform(const Vector& cum_loss, double tol) {
  const double m = cum_loss.minCoeff();
  Vector p = (cum_loss.array() <= m + tol).cast<double>();
  return p / p.sum();
}

Vector exp_weights(const Vector& cum_loss, double lambda) {
  if (std::isinf(lambda)) return argmin_uniform(cum_loss);
  if (lambda < 0.0) throw ContractViolation("exp_weights: lambda must be >= 0");
  Eigen::ArrayXd a = -lambda * cum_loss.array();
  a -= a.maxCoeff();
  Eigen::ArrayXd e = a.exp();
  return (e / e.sum()).matrix();
}

double mix_loss(const Vector& p, const Vector& losses, double lambda) {
  if (p.size() != losses.size()) throw ContractViolation("mix_loss: size mismatch");
  if (lambda == 0.0) return p.dot(losses);
  if (std::isinf(lambda)) {
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p.size(); ++i)
      if (p(i) > 0.0) m = std::min(m, losses(i));
    return m;
  }
  // log sum p_i e^{-lambda l_i} with the largest exponent factored out.
  double shift = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) shift = std::max(shift, -lambda * losses(i));
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) s += p(i) * std::exp(-lambda * losses(i) - shift);
  return -(shift + std::log(s)) / lambda;
}

// ---- aggregation ----------------------------------------------------------

namespace {

MetaState make_meta(int K, const Point& z1, double mu, StepSchedule schedule, RateMode mode) {
  if (K < 1) throw ConfigError("algorithm.K", "must be >= 1");
  if (!(mu > 0.0)) throw ConfigError("algorithm.mu", "must be > 0");
  MetaState s;
  s.K = K;
  s.mu = mu;
  s.mode = mode;
  for (int i = 1; i <= K; ++i) s.bases.emplace_back(i, z1, schedule);
  s.weights = Vector::Constant(K, 1.0 / K);
  s.cum_loss = Vector::Zero(K);
  return s;
}

// Play, base plays and losses shared by both rate modes.
MetaRound open_round(const MetaState& state, long t, const Operator& op) {
  MetaRound r;
  r.base_plays = state.base_plays(t);
  r.weights = state.weights;
  r.play = Point::Zero(r.base_plays.front().size());
  for (int i = 0; i < state.K; ++i) r.play += state.weights(i) * r.base_plays[static_cast<std::size_t>(i)];
  r.op_value = op(r.play);
  const Vector& g = r.op_value;
  r.losses.resize(state.K);
  for (int i = 0; i < state.K; ++i) {
    const Point& zi = r.base_plays[static_cast<std::size_t>(i)];
    r.losses(i) = g.dot(zi) + 0.5 * state.mu * (zi - r.play).squaredNorm();
  }
  r.avg_loss = g.dot(r.play);
  return r;
}

}  // namespace

MetaState MetaState::fixed(int K, const Point& z1, double mu, double D, double G) {
  if (!(D > 0.0)) throw ConfigError("algorithm.D", "must be > 0");
  if (!(G >= 0.0)) throw ConfigError("algorithm.G", "must be >= 0");
  MetaState s = make_meta(K, z1, mu, StepSchedule::inverse_mu_t(mu), RateMode::Fixed);
  const double r = D + G / mu;
  s.lambda = 1.0 / (4.0 * mu * r * r);
  return s;
}

MetaState MetaState::adaptive(int K, const Point& z1, double mu, double L) {
  if (!(L > 0.0)) throw ConfigError("algorithm.L", "must be > 0");
  return make_meta(K, z1, mu, StepSchedule::constant(1.0 / L), RateMode::Adaptive);
}

std::vector<Point> MetaState::base_plays(long t) const {
  std::vector<Point> out;
  out.reserve(bases.size());
  for (const auto& b : bases) out.push_back(b.play(t));
  return out;
}

Point MetaState::play(long t) const {
  Point z = Point::Zero(bases.front().slots.front().size());
  for (int i = 0; i < K; ++i) z += weights(i) * bases[static_cast<std::size_t>(i)].play(t);
  return z;
}

MetaRound meta_step_fixed(MetaState& state, const Domain& domain, long t, const Operator& op) {
  if (state.mode != RateMode::Fixed) throw ContractViolation("meta_step_fixed: state is adaptive");
  MetaRound r = open_round(state, t, op);
  r.lambda = state.lambda;
  r.mix_loss = mix_loss(r.weights, r.losses, state.lambda);

  const Operator surrogate = make_surrogate(r.op_value, r.play, state.mu);
  for (auto& b : state.bases) cyclic_fb_step(b, domain, t, surrogate);

  state.cum_loss += r.losses;
  state.weights = exp_weights(state.cum_loss, state.lambda);
  return r;
}

MetaRound meta_step_adaptive(MetaState& state, const Domain& domain, long t, const Operator& op) {
  if (state.mode != RateMode::Adaptive) throw ContractViolation("meta_step_adaptive: state is fixed");
  MetaRound r = open_round(state, t, op);
  r.lambda = state.lambda;
  r.mix_loss = mix_loss(r.weights, r.losses, state.lambda);

  for (auto& b : state.bases) cyclic_fb_step(b, domain, t, op);
  state.cum_loss += r.losses;

  const double gap = r.avg_loss - r.mix_loss;
  if (!state.t0_passed && r.mix_loss < r.avg_loss - 1e-12) {
    state.t0_passed = true;
    state.T0 = t;
  }
  if (!state.t0_passed) {
    state.weights = argmin_uniform(state.cum_loss);
    return r;
  }
  state.cum_gap += std::max(gap, 0.0);
  state.lambda = std::log(static_cast<double>(state.K)) / state.cum_gap;
  state.weights = exp_weights(state.cum_loss, state.lambda);
  return r;
}

// ---- tracker --------------------------------------------------------------

namespace {

// Two-phase learner: commit a play, then absorb the observed operator.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual Point play(long t) const = 0;
  virtual void update(long t, const Operator& op, Trajectory& out) = 0;
};

class ForwardLearner final : public Learner {
 public:
  ForwardLearner(const Domain& d, Point z, double eta) : domain_(d), z_(std::move(z)), eta_(eta) {
    if (!(eta > 0.0)) throw ConfigError("algorithm.eta", "must be > 0");
  }
  Point play(long) const override { return z_; }
  void update(long, const Operator& op, Trajectory& out) override {
    Vector g = op(z_);
    out.op_values.push_back(g);
    z_ = domain_.project(z_ - eta_ * g);
  }

 private:
  const Domain& domain_;
  Point z_;
  double eta_;
};

class ResolventLearner final : public Learner {
 public:
  explicit ResolventLearner(Point z) : z_(std::move(z)) {}
  Point play(long) const override { return z_; }
  void update(long, const Operator& op, Trajectory& out) override {
    out.op_values.push_back(op(z_));
    z_ = resolvent_step(op, z_);
  }

 private:
  Point z_;
};

class CyclicLearner final : public Learner {
 public:
  CyclicLearner(const Domain& d, CyclicFBState s) : domain_(d), state_(std::move(s)) {}
  Point play(long t) const override { return state_.play(t); }
  void update(long t, const Operator& op, Trajectory& out) override {
    out.op_values.push_back(op(state_.play(t)));
    cyclic_fb_step(state_, domain_, t, op);
  }

 private:
  const Domain& domain_;
  CyclicFBState state_;
};

class MetaLearner final : public Learner {
 public:
  MetaLearner(const Domain& d, MetaState s) : domain_(d), state_(std::move(s)) {}
  Point play(long t) const override { return state_.play(t); }
  void update(long t, const Operator& op, Trajectory& out) override {
    MetaRound r = state_.mode == RateMode::Fixed ? meta_step_fixed(state_, domain_, t, op)
                                                 : meta_step_adaptive(state_, domain_, t, op);
    out.op_values.push_back(r.op_value);
    out.per_base_plays.push_back(std::move(r.base_plays));
    out.weights.push_back(std::move(r.weights));
  }

 private:
  const Domain& domain_;
  MetaState state_;
};

std::unique_ptr<Learner> make_learner(const AlgorithmSpec& algo, const Domain& domain,
                                      const Point& z1) {
  return std::visit(
      [&](const auto& a) -> std::unique_ptr<Learner> {
        using A = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<A, ContractiveForward>) {
          return std::make_unique<ForwardLearner>(domain, z1, a.eta);
        } else if constexpr (std::is_same_v<A, Resolvent>) {
          if (domain.bounded())
            throw ConfigError("algorithm.name", "resolvent requires an unbounded domain");
          return std::make_unique<ResolventLearner>(z1);
        } else if constexpr (std::is_same_v<A, CyclicFB>) {
          return std::make_unique<CyclicLearner>(
              domain, CyclicFBState(a.period, z1, a.schedule, a.literal_indexing));
        } else if constexpr (std::is_same_v<A, MetaFixed>) {
          auto D = a.D ? a.D : domain.diameter();
          if (!D) throw ConfigError("algorithm.D", "fixed-rate aggregation needs a bounded domain");
          if (!a.G) throw ConfigError("algorithm.G", "required for fixed-rate aggregation");
          return std::make_unique<MetaLearner>(domain, MetaState::fixed(a.K, z1, a.mu, *D, *a.G));
        } else {
          return std::make_unique<MetaLearner>(domain, MetaState::adaptive(a.K, z1, a.mu, a.L));
        }
      },
      algo);
}

}  // namespace

Trajectory run_tracker(ProblemSequence& seq, const AlgorithmSpec& algo, const Domain& domain,
                       const Point& z1, long T, TrackerOptions opts) {
  if (T < 1) throw ConfigError("horizon", "must be >= 1");
  if (z1.size() != seq.dim() || domain.dim() != seq.dim())
    throw ContractViolation("run_tracker: dimension mismatch");
  auto learner = make_learner(algo, domain, z1);

  Trajectory out;
  std::vector<Point> sols;
  bool have_sols = true;
  for (long t = 1; t <= T; ++t) {
    Point z = learner->play(t);
    if (!z.allFinite() || z.norm() > opts.divergence_threshold) {
      out.diverged_at = t;
      out.diverged_play = z;
      break;
    }
    Round round = seq.observe(t, z);
    try {
      learner->update(t, round.op, out);
    } catch (const NumericalError&) {
      out.diverged_at = t;
      out.diverged_play = z;
      // Drop partial records of this round.
      out.op_values.resize(out.plays.size());
      out.per_base_plays.resize(std::min(out.per_base_plays.size(), out.plays.size()));
      out.weights.resize(std::min(out.weights.size(), out.plays.size()));
      break;
    }
    out.plays.push_back(std::move(z));
    if (round.solution)
      sols.push_back(*round.solution);
    else
      have_sols = false;
  }
  if (have_sols) out.solutions = std::move(sols);
  return out;
}

std::optional<Point> solve_numerically(const Operator& op, const Domain& domain, const Point& z0,
                                       double eta, double tol, int max_iter) {
  if (!(eta > 0.0)) throw ContractViolation("solve_numerically: eta must be > 0");
  Point z = domain.project(z0);
  for (int i = 0; i < max_iter; ++i) {
    Point half = domain.project(z - eta * op(z));
    if ((half - z).norm() <= tol) return half;
    z = domain.project(z - eta * op(half));
    if (!z.allFinite()) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace tvvi
