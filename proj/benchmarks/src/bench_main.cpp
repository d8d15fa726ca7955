#include <benchmark/benchmark.h>

#include "stcut/bulk_surface_solver.hpp"
#include "stcut/surface_examples.hpp"

using namespace stcut;

namespace {

// Simpson snapshots of the first slab of Example 1 on an n x n mesh.
struct SurfaceSlab {
  BackgroundMesh mesh;
  DofHandler dofs;
  SurfaceProblem problem;
  SlabSpace space;

  SurfaceSlab(int n, int p)
      : mesh(build_uniform_mesh(ellipse_box(), n)), dofs(mesh, p), problem(ellipse_problem(example1_solution())) {
    auto tracker = make_circle_tracker(mesh, Vec2(0.0, 0.0), 1.0, TrackerSettings{});
    const double k = mesh.cell_width() / 12;
    const TimeQuadrature quad = newton_cotes(3, 0.0, k);
    std::vector<InterfaceSnapshot> snaps{tracker->snapshot(0.0)};
    for (int m = 1; m < 3; ++m) {
      tracker->advance(problem.beta, quad.points[m - 1], k / 2);
      snaps.push_back(tracker->snapshot(quad.points[m]));
    }
    space = build_active_surface_mesh(dofs, std::move(snaps), quad, 1);
  }
};

void BM_ContourExtraction(benchmark::State& state) {
  const BackgroundMesh mesh = build_uniform_mesh(ellipse_box(), static_cast<int>(state.range(0)));
  const LevelSetTracker tracker(mesh, [](const Vec2& x) { return 1.0 - x.norm(); });
  const auto field = tracker.level_set();
  for (auto _ : state) benchmark::DoNotOptimize(extract_zero_contour(mesh, field, 0.0));
}
BENCHMARK(BM_ContourExtraction)->Arg(40)->Arg(80)->Arg(160)->Unit(benchmark::kMicrosecond);

void BM_SplineSnapshot(benchmark::State& state) {
  const BackgroundMesh mesh = build_uniform_mesh(ellipse_box(), static_cast<int>(state.range(0)));
  auto tracker = make_circle_tracker(mesh, Vec2(0.0, 0.0), 1.0, TrackerSettings{});
  for (auto _ : state) benchmark::DoNotOptimize(tracker->snapshot(0.0));
}
BENCHMARK(BM_SplineSnapshot)->Arg(40)->Arg(80)->Arg(160)->Unit(benchmark::kMicrosecond);

void BM_Redistance(benchmark::State& state) {
  const BackgroundMesh mesh = build_uniform_mesh(VortexSetup::box(), static_cast<int>(state.range(0)));
  const LevelSetTracker tracker(mesh, [](const Vec2& x) { return 0.3 - (x - Vec2(0.1, 0.0)).norm(); });
  const auto field = tracker.level_set();
  for (auto _ : state) benchmark::DoNotOptimize(redistance_geometric(*field));
}
BENCHMARK(BM_Redistance)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SurfaceAssembly(benchmark::State& state) {
  const SurfaceSlab s(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const StabilizationConfig stab = StabilizationConfig::make(StabilizationMode::combined_new, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_slab(s.problem, s.space, stab, {}));
  state.counters["dofs"] = s.space.num_columns();
}
BENCHMARK(BM_SurfaceAssembly)->Args({40, 1})->Args({80, 1})->Args({40, 2})->Args({40, 3})->Unit(benchmark::kMillisecond);

void BM_SurfaceSolve(benchmark::State& state) {
  const SurfaceSlab s(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const SlabSystem sys = assemble_slab(s.problem, s.space, StabilizationConfig::make(StabilizationMode::combined_new, 0.1), {});
  for (auto _ : state) benchmark::DoNotOptimize(solve_slab(sys));
  state.counters["dofs"] = sys.matrix.rows();
}
BENCHMARK(BM_SurfaceSolve)->Args({40, 1})->Args({80, 1})->Args({40, 3})->Unit(benchmark::kMillisecond);

void BM_CoupledNewtonSlab(benchmark::State& state) {
  const BackgroundMesh mesh = build_uniform_mesh(VortexSetup::box(), static_cast<int>(state.range(0)));
  const DofHandler dofs(mesh, 1);
  const CoupledProblem problem = vortex_problem();
  const double k = mesh.cell_width() / 8;
  LevelSetTracker tracker(mesh, problem.phi0);
  const TimeQuadrature quad = newton_cotes(3, 0.0, k);
  std::vector<InterfaceSnapshot> snaps{tracker.snapshot(0.0)};
  for (int m = 1; m < 3; ++m) {
    tracker.advance(problem.beta, quad.points[m - 1], k / 2);
    snaps.push_back(tracker.snapshot(quad.points[m]));
  }
  const CoupledSlab slab = build_coupled_slab(dofs, std::move(snaps), quad);
  const double u0 = initial_total_mass(problem, slab.regions.front(), slab.surface.snapshots.front());
  for (auto _ : state) {
    const CoupledSlabSystem sys(problem, slab, {}, u0);
    benchmark::DoNotOptimize(newton_solve(sys, sys.initial_guess()));
  }
}
BENCHMARK(BM_CoupledNewtonSlab)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
