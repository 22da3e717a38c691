#include <benchmark/benchmark.h>

#include <random>

#include "sobcomp/discretize.hpp"
#include "sobcomp/groundstate.hpp"
#include "sobcomp/levelmap.hpp"
#include "sobcomp/symmetry.hpp"

using namespace sobcomp;

namespace {

ManifoldModel model(int which) {
  switch (which) {
    case 0: return ManifoldModel::euclidean(2);
    case 1: return ManifoldModel::hyperbolic(2);
    default: return ManifoldModel::product_circle(1);
  }
}

void BM_Distance(benchmark::State& state) {
  const ManifoldModel M = model(static_cast<int>(state.range(0)));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<Point> pts;
  for (int i = 0; i < 256; ++i) {
    Vec v(M.dim());
    for (int k = 0; k < M.dim(); ++k) v[k] = n(rng);
    pts.push_back(M.exp_map(v.normalized(), 3.0 * std::abs(n(rng))));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(M.distance(pts[i & 255], pts[(i + 1) & 255]));
    ++i;
  }
  state.SetLabel(M.name());
}
BENCHMARK(BM_Distance)->DenseRange(0, 2);

void BM_GreedyNet(benchmark::State& state) {
  const ManifoldModel M = model(static_cast<int>(state.range(0)));
  NetOptions o;
  o.coverage_samples = 10'000;
  std::size_t points = 0;
  for (auto _ : state) points = greedy_net(M, 5.0, 1.0, o).size();
  state.counters["points"] = static_cast<double>(points);
  state.SetLabel(M.name());
}
BENCHMARK(BM_GreedyNet)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_LocalMassProfile(benchmark::State& state) {
  const ManifoldModel M = ManifoldModel::euclidean(2);
  NetOptions no;
  no.coverage_samples = 10'000;
  const Discretization net = greedy_net(M, 8.0, 1.0, no);
  LocalMassOptions o;
  o.samples = static_cast<std::size_t>(state.range(0));
  const ScalarField u = [](const Point& x) { return std::exp(-x.squaredNorm() / 8.0); };
  for (auto _ : state) benchmark::DoNotOptimize(local_mass_profile(net, u, o).supremum);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(net.size()) * state.range(0));
}
BENCHMARK(BM_LocalMassProfile)->Arg(1'000)->Arg(10'000)->Unit(benchmark::kMillisecond);

void BM_ShellPsi(benchmark::State& state) {
  const ManifoldModel M = ManifoldModel::euclidean(3);
  PsiOptions o;
  o.method = PsiMethod::Shell;
  const auto n = static_cast<std::size_t>(state.range(0));
  Vec z(1);
  z[0] = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(weight_psi(LevelMap::radial(3), M, z, 0.01, n, o).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ShellPsi)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_DeltaR(benchmark::State& state) {
  const ManifoldModel M = ManifoldModel::euclidean(2);
  LevelOptions o;
  o.mc_samples = 20'000;
  const double A = static_cast<double>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(delta_r(LevelMap::radial(2), M, A, 1.0, default_level_grid(A, 1.0, 4), 16, o).value);
}
BENCHMARK(BM_DeltaR)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_AverageTG(benchmark::State& state) {
  const ManifoldModel M = ManifoldModel::euclidean(2);
  const GroupAction G = GroupAction::rotations(M, static_cast<int>(state.range(0)));
  const ScalarField Tf = average_TG(G, random_smooth_field(M, 1));
  Point x(2);
  x << 0.7, -1.3;
  for (auto _ : state) benchmark::DoNotOptimize(Tf(x));
}
BENCHMARK(BM_AverageTG)->Arg(16)->Arg(64)->Arg(256);

void BM_GroundState(benchmark::State& state) {
  GroundStateConfig cfg;
  cfg.dr = 0.01 / static_cast<double>(state.range(0));
  int iterations = 0;
  for (auto _ : state) iterations = solve_ground_state(cfg).result.iterations;
  state.counters["descent_steps"] = iterations;
}
BENCHMARK(BM_GroundState)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
