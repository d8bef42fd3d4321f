#include "tvvi/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace tvvi;

namespace {

Scenario chaos() { return build_scenario({"chaos_1d", {}}); }

double sig(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// Hand-written per-period map: F_1 with a = 1/4, then F_2 with a = 4.
double phi_by_hand(double x, double eta) {
  auto step = [&](double z, double a) { return z - eta * sig(0.5 * a * z * z) * a * z; };
  return step(step(x, 0.25), 4.0);
}

}  // namespace

TEST(Map, ComposesTheTwoStepsInTimeOrder) {
  GDMap map = compose_map(chaos(), 3.9);
  for (double x : {-2.0, -0.1, 0.3, 1.7})
    EXPECT_NEAR(map(Point::Constant(1, x))(0), phi_by_hand(x, 3.9), 1e-13);
}

TEST(Map, DerivativeAtTheOrigin) {
  for (double eta : {0.3, 2.0, 3.9, 6.1}) {
    GDMap map = compose_map(chaos(), eta);
    EXPECT_NEAR(map.derivative(0.0), (1.0 - eta / 8.0) * (1.0 - 2.0 * eta), 1e-6) << eta;
  }
}

TEST(Map, TransportConjugatesPhases) {
  GDMap m0 = compose_map(chaos(), 6.1, 0), m1 = compose_map(chaos(), 6.1, 1);
  for (double x : {-1.0, 0.2, 0.9}) {
    Point p = Point::Constant(1, x);
    EXPECT_NEAR(m1(m0.transport(p, 1))(0), m0.transport(m0(p), 1)(0), 1e-12);
  }
}

TEST(Map, RejectsNonPeriodicScenarios) {
  EXPECT_THROW(compose_map(build_scenario({"lower_bound_adversary", {}}), 1.0), ConfigError);
  EXPECT_THROW(compose_map(chaos(), -1.0), ConfigError);
}

TEST(Orbit, FixedPointGivesConstantOrbit) {
  Orbit o = iterate_orbit(compose_map(chaos(), 3.9), Point::Zero(1), 50);
  for (const auto& p : o.points) EXPECT_EQ(p(0), 0.0);
  EXPECT_FALSE(o.diverged());
}

TEST(Orbit, DivergesAtEtaTwo) {
  Orbit o = iterate_orbit(compose_map(chaos(), 2.0), Point::Constant(1, 0.01), 2000);
  ASSERT_TRUE(o.diverged());
  EXPECT_GT(std::abs(o.points.back()(0)), 1000.0);
  EXPECT_EQ(static_cast<long>(o.points.size()) - 1, *o.diverged_step);
}

TEST(Classify, ReferenceRegimes) {
  using K = Classification::Kind;
  auto cls = [](double eta) { return classify_eta(compose_map(chaos(), eta), Point::Constant(1, -0.1)); };
  EXPECT_EQ(cls(0.4).kind, K::Converged);
  EXPECT_EQ(cls(8.0).kind, K::Converged);
  EXPECT_EQ(cls(2.0).kind, K::Diverged);
  EXPECT_EQ(cls(3.9), (Classification{K::Periodic, 4}));
  EXPECT_EQ(cls(6.1).kind, K::BoundedAperiodic);
  EXPECT_EQ((Classification{K::Periodic, 4}).label(), "periodic(4)");
}

TEST(Classify, BurnInMustLeaveATail) {
  ClassifyOptions opts;
  opts.burn_in = opts.n_steps;
  EXPECT_THROW(classify_eta(compose_map(chaos(), 1.0), Point::Zero(1), opts), ContractViolation);
}

TEST(Grid, DefaultsReproduceTheReferenceProtocol) {
  EtaGrid g;
  auto v = g.values();
  ASSERT_EQ(v.size(), 3000u);
  EXPECT_DOUBLE_EQ(v.front(), 8.0 / 3000.0);
  EXPECT_DOUBLE_EQ(v.back(), 8.0);
  ClassifyOptions c;
  EXPECT_EQ(c.n_steps, 2000);
  EXPECT_EQ(c.burn_in, 1000);
  EXPECT_DOUBLE_EQ(c.threshold, 1000.0);
  CellGrid cells;
  EXPECT_EQ(cells.cell(-10.0), 0);
  EXPECT_EQ(cells.cell(10.0), 999);
  EXPECT_EQ(cells.cell(0.0), 500);
  EXPECT_FALSE(cells.cell(10.5));
}

TEST(Scan, ResultsDoNotDependOnThreadCount) {
  EtaGrid g{0.0, 8.0, 60, {3.9}};
  ScanOptions one, three;
  three.threads = 3;
  auto a = bifurcation_scan(chaos(), Point::Constant(1, -0.1), g, one);
  auto b = bifurcation_scan(chaos(), Point::Constant(1, -0.1), g, three);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].eta, b.rows[i].eta);
    EXPECT_EQ(a.rows[i].classification, b.rows[i].classification);
    EXPECT_EQ(a.rows[i].cells, b.rows[i].cells);
    if (i) EXPECT_LT(a.rows[i - 1].eta, a.rows[i].eta);
    if (a.rows[i].classification.kind == Classification::Kind::Converged) EXPECT_EQ(a.rows[i].cells.size(), 1u);
  }
}

TEST(ScanProperty, SubsequenceBoundednessMatchesFullOrbit) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ue(0.05, 8.5), ux(-3.0, 3.0);
  Scenario sc = chaos();
  for (int i = 0; i < 50; ++i) {
    const double eta = ue(rng), x0 = ux(rng);
    GDMap map = compose_map(sc, eta);
    Orbit sub = iterate_orbit(map, Point::Constant(1, x0), 500);
    // Full per-step orbit over the same 1000 steps. Mid-period points are one
    // F_1 step away from a period point, and |1 - eta s/4| <= 1 + eta/4.
    double full_max = std::abs(x0);
    Point x = Point::Constant(1, x0);
    for (int t = 0; t < 1000 && std::isfinite(full_max) && full_max < 1e12; ++t) {
      x = map.step(t % 2, x);
      full_max = std::max(full_max, x.allFinite() ? x.norm() : INFINITY);
    }
    if (sub.diverged())
      EXPECT_GT(full_max, 1000.0) << "eta=" << eta << " x0=" << x0;
    else
      EXPECT_LE(full_max, 1000.0 * (1.0 + eta / 4.0)) << "eta=" << eta << " x0=" << x0;
  }
}

TEST(Newton, FourCycleAtEtaThreePointNine) {
  GDMap map = compose_map(chaos(), 3.9);
  auto orb = newton_periodic_orbit(map, 4, -0.1);
  ASSERT_TRUE(orb);
  // Whatever point it lands on must be a genuine 4-cycle of the map.
  Point back = map.iterate(Point::Constant(1, orb->fixed_point), 4);
  EXPECT_NEAR(back(0), orb->fixed_point, 1e-10);
  std::vector<double> sorted = orb->orbit;
  std::sort(sorted.begin(), sorted.end());
  const std::vector<double> ref{-1.5718, -1.3454, 5.9237, 7.0472};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sorted[i], ref[i], 1e-3);
  Stability st = orbit_stability(map, orb->orbit);
  EXPECT_NEAR(st.product, -0.2632, 1e-3);
  EXPECT_TRUE(st.stable);
}

TEST(Newton, PeriodThreeFromNearPointTwo) {
  GDMap map = compose_map(chaos(), 6.1, 1);
  auto orb = newton_periodic_orbit(map, 3, 0.2);
  ASSERT_TRUE(orb);
  EXPECT_NEAR(orb->fixed_point, 0.2015, 2e-3);
}

TEST(Period3, FindsCyclesAndRejectsEscapingIntervals) {
  GDMap map = compose_map(chaos(), 6.1);
  Period3Result r = period3_search(map, -2.5, 2.5, 5000);
  EXPECT_FALSE(r.points.empty());
  for (double p : r.points) {
    EXPECT_NEAR(map.iterate(Point::Constant(1, p), 3)(0), p, 1e-8);
    EXPECT_GT(std::abs(map(Point::Constant(1, p))(0) - p), 1e-8);
  }
  for (const auto& c : r.cycles) ASSERT_EQ(c.by_phase.size(), 2u);
  EXPECT_THROW(period3_search(compose_map(chaos(), 2.0), -2.5, 2.5, 100), ContractViolation);
}

TEST(Radial, DiskScoresHighAndRingScoresLow) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point> disk, ring;
  while (disk.size() < 40000) {
    Point p(2);
    p << u(rng), u(rng);
    if (p.norm() <= 1.0) disk.push_back(p);
  }
  for (int i = 0; i < 4000; ++i) {
    const double a = 2.0 * M_PI * i / 4000.0;
    Point p(2);
    p << std::cos(a), std::sin(a);
    ring.push_back(p);
  }
  EXPECT_GT(radial_containment_score(disk), 0.9);
  EXPECT_LT(radial_containment_score(ring), 0.05);
  EXPECT_EQ(radial_containment_score({}), 0.0);
}

TEST(Star, ConvergesAtSmallStepAndIsSeeded) {
  Scenario sc = build_scenario({"star_2d", {}});
  StarOptions o;
  o.n_samples = 10;
  o.n_steps = 300;
  StarResult a = star_scan(sc, 0.4, o), b = star_scan(sc, 0.4, o);
  EXPECT_EQ(a.avg_norm_series, b.avg_norm_series);
  EXPECT_EQ(a.n_diverged, 0);
  EXPECT_LT(a.avg_norm_series.back(), 1e-3);
  o.n_steps = 1000;
  StarResult d = star_scan(sc, 0.5, o);
  EXPECT_TRUE(d.diverged());
  EXPECT_TRUE(std::isinf(d.avg_norm_series.back()));
}
