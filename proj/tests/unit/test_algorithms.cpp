#include "tvvi/algorithms.hpp"
#include "tvvi/metrics.hpp"
#include "tvvi/scenarios.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace tvvi;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Operator line(double a, double c) {
  return quadratic_operator(Matrix::Constant(1, 1, a), Vector::Constant(1, c));
}

}  // namespace

TEST(Steps, Schedules) {
  EXPECT_DOUBLE_EQ(StepSchedule::constant(0.3).at(17), 0.3);
  EXPECT_DOUBLE_EQ(StepSchedule::inverse_mu_t(2.0).at(5), 0.1);
}

TEST(Steps, ForwardStepProjects) {
  Operator op = line(1.0, 5.0);
  Point z = forward_step(op, Domain::interval(-1.0, 1.0), Point::Constant(1, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(z(0), 1.0);
}

TEST(Steps, ResolventSolvesTheImplicitEquation) {
  Matrix A(2, 2);
  A << 2.0, 1.0, -1.0, 1.0;
  Vector b = vec({0.5, -1.0});
  Operator op = Operator::affine(A, b);
  Point z = vec({3.0, -2.0});
  Point r = resolvent_step(op, z);
  EXPECT_LT((r + A * r + b - z).norm(), 1e-13);
  Operator nonlinear(1, [](const Vector& x) -> Vector { return x.array().cube(); });
  EXPECT_THROW(resolvent_step(nonlinear, Point::Ones(1)), ContractViolation);
}

TEST(Steps, SurrogateIsTheLinearizedOperator) {
  Vector g = vec({1.0, -2.0});
  Point zt = vec({0.5, 0.5});
  Operator s = make_surrogate(g, zt, 4.0);
  Point z = vec({1.0, 3.0});
  EXPECT_LT((s(z) - (g + 4.0 * (z - zt))).norm(), 1e-15);
  EXPECT_LT((*s.solution() - (zt - g / 4.0)).norm(), 1e-15);
}

TEST(Cyclic, SlotsFollowTimeModuloPeriod) {
  CyclicFBState st(3, Point::Zero(1), StepSchedule::constant(0.1));
  EXPECT_EQ(st.slot_for(1), 0);
  EXPECT_EQ(st.slot_for(2), 1);
  EXPECT_EQ(st.slot_for(3), 2);
  EXPECT_EQ(st.slot_for(4), 0);
  CyclicFBState lit(3, Point::Zero(1), StepSchedule::constant(0.1), true);
  EXPECT_EQ(lit.slot_for(1), 1);
  EXPECT_EQ(lit.slot_for(3), 0);
}

TEST(Cyclic, OnlyTheActiveSlotMoves) {
  CyclicFBState st(2, Point::Constant(1, 1.0), StepSchedule::constant(0.5));
  Point play = cyclic_fb_step(st, Domain::unbounded(1), 1, line(1.0, 0.0));
  EXPECT_DOUBLE_EQ(play(0), 1.0);
  EXPECT_DOUBLE_EQ(st.slots[0](0), 0.5);
  EXPECT_DOUBLE_EQ(st.slots[1](0), 1.0);
}

TEST(Weights, ExpWeightsMatchDirectFormula) {
  Vector L = vec({0.3, 1.2, -0.4});
  const double lam = 1.7;
  Vector w = exp_weights(L, lam);
  double z = 0.0;
  for (int i = 0; i < 3; ++i) z += std::exp(-lam * L(i));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(w(i), std::exp(-lam * L(i)) / z, 1e-15);
  Vector big = exp_weights(vec({1000.0, 1001.0}), 5.0);
  EXPECT_TRUE(big.allFinite());
  EXPECT_NEAR(big.sum(), 1.0, 1e-15);
}

TEST(Weights, InfiniteRateIsUniformOverMinimizers) {
  Vector w = exp_weights(vec({2.0, 1.0, 1.0, 3.0}), kInfiniteRate);
  EXPECT_DOUBLE_EQ(w(0), 0.0);
  EXPECT_DOUBLE_EQ(w(1), 0.5);
  EXPECT_DOUBLE_EQ(w(2), 0.5);
  EXPECT_EQ(w, argmin_uniform(vec({2.0, 1.0, 1.0, 3.0})));
}

TEST(Weights, MixLossLimits) {
  Vector p = vec({0.25, 0.75, 0.0});
  Vector l = vec({1.0, 3.0, -10.0});
  EXPECT_NEAR(mix_loss(p, l, 0.0), 0.25 * 1.0 + 0.75 * 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(mix_loss(p, l, kInfiniteRate), 1.0);
  const double lam = 0.8;
  const double direct = -std::log(0.25 * std::exp(-lam * 1.0) + 0.75 * std::exp(-lam * 3.0)) / lam;
  EXPECT_NEAR(mix_loss(p, l, lam), direct, 1e-14);
}

TEST(WeightsProperty, MixLossLiesBetweenMinAndMean) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0), e(0.01, 10.0);
  for (int i = 0; i < 500; ++i) {
    Vector p = Vector::NullaryExpr(4, [&] { return std::abs(u(rng)) + 1e-3; });
    p /= p.sum();
    Vector l = Vector::NullaryExpr(4, [&] { return u(rng); });
    const double m = mix_loss(p, l, e(rng));
    EXPECT_LE(m, p.dot(l) + 1e-12);
    EXPECT_GE(m, l.minCoeff() - 1e-12);
  }
}

TEST(Meta, FixedRateUsesOneEvaluationPerRound) {
  MetaState st = MetaState::fixed(3, Point::Constant(1, 2.0), 1.0, 4.0, 10.0);
  EXPECT_NEAR(st.lambda, 1.0 / (4.0 * 1.0 * std::pow(4.0 + 10.0, 2)), 1e-15);
  Operator op = line(1.0, 0.5);
  for (long t = 1; t <= 5; ++t) {
    op.reset_evaluations();
    MetaRound r = meta_step_fixed(st, Domain::interval(-2.0, 2.0), t, op);
    EXPECT_EQ(op.evaluations(), 1);
    EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
    // Play is the weighted average of base plays.
    Point avg = Point::Zero(1);
    for (int i = 0; i < 3; ++i) avg += r.weights(i) * r.base_plays[static_cast<std::size_t>(i)];
    EXPECT_NEAR((avg - r.play).norm(), 0.0, 1e-14);
    // Losses as defined from the single evaluation.
    for (int i = 0; i < 3; ++i) {
      const Point& zi = r.base_plays[static_cast<std::size_t>(i)];
      EXPECT_NEAR(r.losses(i), r.op_value.dot(zi) + 0.5 * (zi - r.play).squaredNorm(), 1e-14);
    }
  }
}

TEST(Meta, AdaptiveRateUsesKPlusOneEvaluations) {
  MetaState st = MetaState::adaptive(4, Point::Constant(1, 2.0), 1.0, 8.0);
  Operator op = line(1.0, 0.5);
  op.reset_evaluations();
  meta_step_adaptive(st, Domain::unbounded(1), 1, op);
  EXPECT_EQ(op.evaluations(), 5);
}

TEST(Meta, AdaptiveRateStaysInfiniteUntilMixGapAppears) {
  // Identical bases: every loss equals the average, no gap, rate stays infinite.
  MetaState st = MetaState::adaptive(2, Point::Constant(1, 1.0), 1.0, 1.0);
  Operator op = line(1.0, 1.0);
  for (long t = 1; t <= 4; ++t) meta_step_adaptive(st, Domain::unbounded(1), t, op);
  EXPECT_TRUE(std::isinf(st.lambda));
  EXPECT_FALSE(st.T0.has_value());
}

TEST(Tracker, PeriodicOneDimensionalTrackingMatchesResummation) {
  Scenario sc = build_scenario({"periodic_1d", {}});
  const double eta = 1.0, z1 = 3.0;
  Trajectory tr = run_tracker(*sc.sequence, ContractiveForward{eta}, sc.domain, Point::Constant(1, z1), 10);
  // Independent replay: F_t = 8x for odd t, x for even t, solution 0.
  double x = z1, acc = 0.0;
  for (int t = 1; t <= 10; ++t) {
    acc += x * x;
    x -= eta * ((t % 2 == 1) ? 8.0 : 1.0) * x;
  }
  EXPECT_DOUBLE_EQ(tracking_error(tr), acc);
  EXPECT_DOUBLE_EQ(tracking_error(tr), 9.0 + 21.0 * 21.0);
}

TEST(Tracker, StopsAtDivergence) {
  Scenario sc = build_scenario({"periodic_1d", {}});
  TrackerOptions opts;
  opts.divergence_threshold = 100.0;
  Trajectory tr = run_tracker(*sc.sequence, ContractiveForward{0.5}, sc.domain, Point::Ones(1), 100, opts);
  ASSERT_TRUE(tr.diverged());
  EXPECT_EQ(tr.size(), static_cast<std::size_t>(*tr.diverged_at - 1));
  EXPECT_GT(std::abs((*tr.diverged_play)(0)), 100.0);
  for (const auto& p : tr.plays) EXPECT_LE(std::abs(p(0)), 100.0);
}

TEST(Tracker, ResolventRejectsBoundedDomains) {
  Scenario sc = build_scenario({"lower_bound_adversary", {}});
  EXPECT_THROW(run_tracker(*sc.sequence, Resolvent{}, sc.domain, Point::Zero(1), 3), ConfigError);
}

TEST(Tracker, MetaFixedNeedsG) {
  Scenario sc = build_scenario({"periodic_1d", {}});
  try {
    run_tracker(*sc.sequence, MetaFixed{2, 1.0, 1.0, std::nullopt}, sc.domain, Point::Ones(1), 3);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "algorithm.G");
  }
}

TEST(Tracker, CyclicConvergesOnRightPeriod) {
  Scenario sc = build_scenario({"quadratic_drift", {{"dim", "2"}, {"drift", "periodic"}, {"k", "3"},
                                                    {"kappa", "3"}, {"horizon", "600"}}});
  CyclicFB algo{3, StepSchedule::constant(1.0 / *sc.meta.L), false};
  Trajectory tr = run_tracker(*sc.sequence, algo, sc.domain, Point::Constant(2, 4.0), 600);
  auto series = tracking_error_series(tr);
  EXPECT_LT(series.back() - series[299], 1e-12);
}

TEST(Solve, ExtragradientFindsTheKellyEquilibrium) {
  Operator op = kelly_operator(vec({2.0, 3.0}), 0.5, 0.1);
  Domain box = Domain::box(Vector::Zero(2), vec({1.0, 1.5}));
  auto z = solve_numerically(op, box, Point::Zero(2), 0.05);
  ASSERT_TRUE(z);
  // Fixed point of the projected forward map.
  EXPECT_LT((box.project(*z - 0.05 * op(*z)) - *z).norm(), 1e-10);
}
