#include "tvvi/vi_core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace tvvi;

namespace {

Point rand_point(std::mt19937_64& rng, int d, double w) {
  std::uniform_real_distribution<double> u(-w, w);
  Point p(d);
  for (int i = 0; i < d; ++i) p(i) = u(rng);
  return p;
}

}  // namespace

TEST(Domain, BoxProjectionClampsEachCoordinate) {
  Domain box = Domain::box(Vector::Constant(2, -1.0), Vector::Constant(2, 2.0));
  Point p(2);
  p << 5.0, -3.0;
  Point q = box.project(p);
  EXPECT_DOUBLE_EQ(q(0), 2.0);
  EXPECT_DOUBLE_EQ(q(1), -1.0);
  EXPECT_DOUBLE_EQ(*box.diameter(), 3.0 * std::sqrt(2.0));
}

TEST(Domain, BallProjectionRescalesRadially) {
  Vector c(2);
  c << 1.0, 1.0;
  Domain ball = Domain::ball(c, 2.0);
  Point p(2);
  p << 4.0, 5.0;  // offset (3, 4), length 5
  Point q = ball.project(p);
  EXPECT_NEAR(q(0), 1.0 + 3.0 * 2.0 / 5.0, 1e-15);
  EXPECT_NEAR(q(1), 1.0 + 4.0 * 2.0 / 5.0, 1e-15);
  EXPECT_DOUBLE_EQ(*ball.diameter(), 4.0);
  Point inside(2);
  inside << 1.5, 0.5;
  EXPECT_EQ(ball.project(inside), inside);
}

TEST(Domain, IntervalAndUnbounded) {
  Domain iv = Domain::interval(-1.0, 1.0);
  EXPECT_DOUBLE_EQ(iv.project(Point::Constant(1, 3.0))(0), 1.0);
  EXPECT_DOUBLE_EQ(*iv.diameter(), 2.0);
  Domain u = Domain::unbounded(3);
  EXPECT_FALSE(u.diameter().has_value());
  Point p = Point::Constant(3, 1e9);
  EXPECT_EQ(u.project(p), p);
}

TEST(Domain, DimensionMismatchIsAContractViolation) {
  EXPECT_THROW(Domain::unbounded(2).project(Point::Zero(3)), ContractViolation);
}

TEST(DomainProperty, ProjectionIsIdempotentNonexpansiveAndNearest) {
  std::mt19937_64 rng(5);
  std::vector<Domain> domains{Domain::box(Vector::Constant(3, -1.0), Vector::Constant(3, 0.5)),
                              Domain::ball(Vector::Constant(3, 0.3), 1.5), Domain::unbounded(3)};
  for (const auto& dom : domains) {
    for (int i = 0; i < 500; ++i) {
      Point x = rand_point(rng, 3, 5.0), y = rand_point(rng, 3, 5.0);
      Point px = dom.project(x), py = dom.project(y);
      EXPECT_TRUE(dom.contains(px, 1e-12));
      EXPECT_LE((dom.project(px) - px).norm(), 1e-12);
      EXPECT_LE((px - py).norm(), (x - y).norm() + 1e-12);
      // Variational characterization: <x - Px, z - Px> <= 0 for z in the set.
      Point z = dom.project(rand_point(rng, 3, 5.0));
      EXPECT_LE((x - px).dot(z - px), 1e-9);
    }
  }
}

TEST(Operator, CountsEvaluationsAcrossCopies) {
  Operator op = Operator::affine(Matrix::Identity(2, 2), Vector::Zero(2));
  Operator copy = op;
  op(Point::Ones(2));
  copy(Point::Ones(2));
  EXPECT_EQ(op.evaluations(), 2);
  op.reset_evaluations();
  EXPECT_EQ(copy.evaluations(), 0);
}

TEST(Operator, NonFiniteOutputThrows) {
  Operator op(1, [](const Vector& x) -> Vector { return Vector::Constant(1, std::log(x(0))); });
  EXPECT_THROW(op(Point::Constant(1, -1.0)), NumericalError);
  EXPECT_THROW(op(Point::Zero(2)), ContractViolation);
}

TEST(Operator, AnalyticSolutionMatchesLinearSolve) {
  Matrix A(2, 2);
  A << 2.0, 1.0, -1.0, 3.0;
  Vector b(2);
  b << 1.0, -2.0;
  auto sol = analytic_solution(Operator::affine(A, b), Domain::unbounded(2));
  ASSERT_TRUE(sol);
  // Cramer's rule on A z = -b.
  const double det = 2.0 * 3.0 - 1.0 * (-1.0);
  EXPECT_NEAR((*sol)(0), (-1.0 * 3.0 - 1.0 * 2.0) / det, 1e-14);
  EXPECT_NEAR((*sol)(1), (2.0 * 2.0 - (-1.0) * (-1.0)) / det, 1e-14);
}

TEST(Checks, AcceptTrueConstantsAndRejectFalseOnes) {
  Matrix A(2, 2);
  A << 1.0, 0.0, 0.0, 4.0;
  Operator op = Operator::affine(A, Vector::Zero(2));
  Domain dom = Domain::unbounded(2);
  EXPECT_TRUE(check_strong_monotone(op, 1.0, dom, 2000, 1));
  EXPECT_FALSE(check_strong_monotone(op, 1.5, dom, 2000, 1));
  EXPECT_TRUE(check_lipschitz(op, 4.0, dom, 2000, 2));
  EXPECT_FALSE(check_lipschitz(op, 3.5, dom, 2000, 2));
  EXPECT_NEAR(estimate_lipschitz(op, dom, 2000, 3), 4.0, 4.0 * 2e-3);
}

TEST(Checks, RestrictedSecantHoldsForRotationPlusShrink) {
  // F(z) = z + R z with R a rotation by 90 degrees: <F(z), z> = |z|^2.
  Matrix A(2, 2);
  A << 1.0, -1.0, 1.0, 1.0;
  Operator op = Operator::affine(A, Vector::Zero(2));
  EXPECT_TRUE(check_restricted_secant(op, 1.0, Point::Zero(2), Domain::unbounded(2), 1000, 4));
  EXPECT_FALSE(check_restricted_secant(op, 1.01, Point::Zero(2), Domain::unbounded(2), 1000, 4));
}

TEST(Checks, FiniteDifferencesAgreeWithTheGradient) {
  Operator op(2, [](const Vector& z) -> Vector {
    Vector g(2);
    g << 2.0 * z(0) + std::cos(z(1)), -z(0) * std::sin(z(1));
    return g;
  });
  op.with_potential([](const Vector& z) { return z(0) * z(0) + z(0) * std::cos(z(1)); });
  EXPECT_LT(finite_difference_error(op, Domain::unbounded(2), 500, 7), 1e-7);
  Operator plain = Operator::affine(Matrix::Identity(1, 1), Vector::Zero(1));
  EXPECT_THROW(finite_difference_error(plain, Domain::unbounded(1), 10, 1), ContractViolation);
}

TEST(Sampler, StaysInTheDomainAndIsDeterministic) {
  Domain ball = Domain::ball(Vector::Zero(3), 0.5);
  DomainSampler a(ball, 42), b(ball, 42);
  for (int i = 0; i < 1000; ++i) {
    Point p = a.next();
    EXPECT_TRUE(ball.contains(p, 1e-12));
    EXPECT_EQ(p, b.next());
  }
}

TEST(Sequence, PeriodicSequenceCycles) {
  auto seq = make_periodic_sequence({Operator::affine(Matrix::Constant(1, 1, 1.0), Vector::Constant(1, -1.0)),
                                     Operator::affine(Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 2.0))});
  EXPECT_EQ(seq->period(), 2);
  EXPECT_DOUBLE_EQ((*seq->solution(1))(0), 1.0);
  EXPECT_DOUBLE_EQ((*seq->solution(2))(0), -2.0);
  EXPECT_DOUBLE_EQ((*seq->solution(5))(0), 1.0);
}
