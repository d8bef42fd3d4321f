#include "tvvi/algorithms.hpp"
#include "tvvi/dynamics.hpp"
#include "tvvi/scenarios.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace tvvi;

namespace {

Scenario chaos() { return build_scenario({"chaos_1d", {}}); }

void BM_ComposedMap(benchmark::State& state) {
  GDMap map = compose_map(chaos(), 3.9);
  Point x = Point::Constant(1, -0.1);
  for (auto _ : state) {
    x = map(x);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_ComposedMap);

// One row of the bifurcation scan at the reference protocol.
void BM_ClassifyEta(benchmark::State& state) {
  GDMap map = compose_map(chaos(), 6.1);
  for (auto _ : state) benchmark::DoNotOptimize(classify_eta(map, Point::Constant(1, -0.1)));
}
BENCHMARK(BM_ClassifyEta)->Unit(benchmark::kMicrosecond);

void BM_ScanThreads(benchmark::State& state) {
  Scenario sc = chaos();
  EtaGrid grid{0.0, 8.0, 200, {}};
  ScanOptions opts;
  opts.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bifurcation_scan(sc, Point::Constant(1, -0.1), grid, opts));
}
BENCHMARK(BM_ScanThreads)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_MetaAdaptiveTrack(benchmark::State& state) {
  const long T = state.range(0);
  for (auto _ : state) {
    Scenario sc = build_scenario({"quadratic_drift", {{"dim", "4"}, {"drift", "sqrt"}, {"horizon", std::to_string(T)}}});
    MetaAdaptive algo{4, *sc.meta.mu, *sc.meta.L};
    benchmark::DoNotOptimize(run_tracker(*sc.sequence, algo, sc.domain, sc.default_start, T));
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_MetaAdaptiveTrack)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_BallProjection(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Domain ball = Domain::ball(Vector::Zero(d), 1.0);
  Point p = Point::Constant(d, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(ball.project(p));
}
BENCHMARK(BM_BallProjection)->Arg(2)->Arg(64);

void BM_RadialScore(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point> pts;
  while (pts.size() < static_cast<std::size_t>(state.range(0))) {
    Point p(2);
    p << u(rng), u(rng);
    if (p.norm() <= 1.0) pts.push_back(p);
  }
  for (auto _ : state) benchmark::DoNotOptimize(radial_containment_score(pts));
}
BENCHMARK(BM_RadialScore)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
