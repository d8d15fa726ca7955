// Acceptance runner: `stcut_acceptance --criterion N` prints one PASS/FAIL
// line per criterion and exits non-zero on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "stcut/cli/experiment.hpp"

using namespace stcut;
using namespace stcut::cli;

namespace {

constexpr double kPi = std::numbers::pi;

bool report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  return ok;
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1 ---------------------------------------------------------------------

bool quadrature_exactness() {
  double worst3 = 0.0, worst5 = 0.0;
  for (auto [a, b] : {std::pair{0.0, 1.0}, {-0.7, 0.35}, {2.0, 2.125}, {1e-3, 7.5}}) {
    const auto integrate = [&](int points, int power) {
      const TimeQuadrature q = newton_cotes(points, a, b);
      double s = 0.0;
      for (std::size_t i = 0; i < q.points.size(); ++i) s += q.weights[i] * std::pow(q.points[i], power);
      const double exact = (std::pow(b, power + 1) - std::pow(a, power + 1)) / (power + 1);
      return std::abs(s - exact) / std::abs(exact);
    };
    worst3 = std::max(worst3, integrate(3, 3));
    worst5 = std::max(worst5, integrate(5, 5));
  }
  return report(1, worst3 < 1e-13 && worst5 < 1e-13,
                format("Simpson t^3 rel err %.2e, 5-point t^5 rel err %.2e (tol 1e-13)", worst3, worst5));
}

// --- 2 ---------------------------------------------------------------------

bool geometry_orders() {
  std::vector<double> ha, dist, normal;
  for (int m = 8; m <= 128; m *= 2) {
    std::vector<Vec2> markers;
    for (int l = 0; l < m; ++l) markers.emplace_back(std::cos(2 * kPi * l / m), std::sin(2 * kPi * l / m));
    const SplineInterface s = fit_periodic_spline(markers);
    double d = 0.0, nerr = 0.0;
    const int samples = 64 * m;
    for (int i = 0; i < samples; ++i) {
      const double a = s.period() * i / samples;
      const Vec2 x = s.position(a);
      d = std::max(d, std::abs(x.norm() - 1.0));
      nerr = std::max(nerr, (s.normal(a) + x.normalized()).norm());
    }
    ha.push_back(s.h_alpha);
    dist.push_back(d);
    normal.push_back(nerr);
  }
  const RateFit fd = fit_rates(ha, dist), fn = fit_rates(ha, normal);
  return report(2, fd.all >= 3.7 && fn.all >= 2.7,
                format("distance order %.3f (>= 3.7), normal order %.3f (>= 2.7), M = 8..128", fd.all, fn.all));
}

// --- 3 ---------------------------------------------------------------------

bool surface_example1() {
  bool ok = true;
  std::string detail;
  for (int p : {1, 2}) {
    ExperimentConfig c = default_config(Experiment::surface_example1);
    c.p = p;
    c.q = 1;
    c.compute_condition = false;
    const ConvergenceStudy s = run_convergence_study(c);
    for (const auto& r : s.rows)
      std::printf("  p=%d n=%d L2=%.4e H1=%.4e (%.1fs)\n", p, r.n, r.l2, r.h1, r.wall_time);
    const bool pass = s.all_ok() && in_range(s.l2.all, p + 0.6, p + 1.4) && in_range(s.h1.all, p - 0.4, p + 0.4);
    ok = ok && pass;
    detail += format("p=%d: L2 rate %.3f in [%.1f, %.1f], H1 rate %.3f in [%.1f, %.1f]; ", p, s.l2.all, p + 0.6,
                     p + 1.4, s.h1.all, p - 0.4, p + 0.4);
  }
  return report(3, ok, detail + "meshes 20/40/80");
}

// --- 4 ---------------------------------------------------------------------

double first_slab_condition(int p, int n, StabilizationMode mode, double base) {
  const BackgroundMesh mesh = build_uniform_mesh(ellipse_box(), n);
  const DofHandler dofs(mesh, p);
  const SurfaceProblem problem = ellipse_problem(example1_solution());
  auto tracker = make_circle_tracker(mesh, Vec2(0.0, 0.0), 1.0, default_config(Experiment::surface_example1).tracker);
  MarchOptions mo;
  mo.p = p;
  mo.q = 1;
  mo.k = mesh.cell_width() / 12;
  mo.T = mo.k;
  mo.stab = StabilizationConfig::make(mode, base);
  mo.compute_condition = true;
  mo.condition_slab = 0;
  return march(problem, *tracker, dofs, mo).condition_number;
}

bool condition_scaling() {
  const std::vector<int> meshes{40, 80, 160};
  auto slope = [&](int p, StabilizationMode mode, double base) {
    std::vector<double> h, cond;
    for (int n : meshes) {
      const auto t0 = std::chrono::steady_clock::now();
      h.push_back(3.0 / n);
      cond.push_back(first_slab_condition(p, n, mode, base));
      std::printf("  %s p=%d n=%d cond=%.4e (%.1fs)\n", to_string(mode).c_str(), p, n, cond.back(), seconds_since(t0));
    }
    return fit_rates(h, cond).all;
  };
  bool ok = true;
  std::string detail;
  for (int p : {1, 2, 3}) {
    const double s = slope(p, StabilizationMode::combined_new, 0.1);
    ok = ok && in_range(s, -2.6, -1.4);
    detail += format("new p=%d slope %.3f; ", p, s);
  }
  const double legacy = slope(3, StabilizationMode::face_only_legacy, 0.01);
  ok = ok && std::abs(legacy) > 3.0;
  return report(4, ok,
                detail + format("legacy p=3 slope %.3f (|slope| > 3); new in [-2.6, -1.4], meshes 40/80/160", legacy));
}

// --- 5 ---------------------------------------------------------------------

bool temporal_order() {
  bool ok = true;
  std::string detail;
  for (int q : {1, 2}) {
    ExperimentConfig c = default_config(Experiment::surface_example2);
    c.q = q;
    c.compute_condition = false;
    const ConvergenceStudy s = run_convergence_study(c);
    for (const auto& r : s.rows) std::printf("  q=%d n=%d L2=%.4e (%.1fs)\n", q, r.n, r.l2, r.wall_time);
    const double lo = q == 1 ? 1.6 : 2.5, hi = q == 1 ? 2.4 : 3.5;
    ok = ok && s.all_ok() && in_range(s.l2.all, lo, hi);
    detail += format("q=%d: L2 rate %.3f in [%.1f, %.1f]; ", q, s.l2.all, lo, hi);
  }
  return report(5, ok, detail + "legacy, p=2, meshes 10/20/40");
}

// --- 6 ---------------------------------------------------------------------

bool constant_preservation() {
  const BackgroundMesh mesh = build_uniform_mesh({-1.0, -1.0, 1.0, 1.0}, 12);
  LevelSetTracker shape(mesh, [](const Vec2& x) { return 0.55 - (x - Vec2(0.03, 0.01)).norm(); });
  const InterfaceSnapshot snap = shape.snapshot(0.0);
  SurfaceProblem problem;
  problem.beta = zero_velocity();
  problem.k_s = 1.0;
  problem.u0 = [](const Vec2&) { return 1.0; };
  double worst = 0.0;
  int cases = 0;
  for (int p = 1; p <= 3; ++p) {
    const DofHandler dofs(mesh, p);
    for (int q = 1; q <= 2; ++q)
      for (auto mode : {StabilizationMode::combined_new, StabilizationMode::face_only_legacy})
        for (int slabs = 1; slabs <= 4; ++slabs) {
          StaticTracker tracker(snap);
          MarchOptions opt;
          opt.p = p;
          opt.q = q;
          opt.k = 0.05;
          opt.T = 0.05 * slabs;
          opt.stab = StabilizationConfig::make(mode, 0.1);
          const MarchResult r = march(problem, tracker, dofs, opt);
          const SlabSpace& s = r.last_space;
          for (const auto& seg : r.final_snapshot.segments)
            for (double t : {s.t0, 0.5 * (s.t0 + s.t1), s.t1})
              worst = std::max(worst, std::abs(evaluate_spacetime(r.last_coeffs, s, t, seg.midpoint(), seg.host).value - 1.0));
          ++cases;
        }
  }
  return report(6, worst < 1e-10,
                format("max |u_h - 1| = %.2e over %d runs (p 1-3, q 1-2, both stabilizations, slabs 1-4; tol 1e-10)",
                       worst, cases));
}

// --- 7 ---------------------------------------------------------------------

struct CoupledSummary {
  double mass_error = 0.0;
  double cond_ratio = 0.0;
  double cond_min = 0.0;
  double cond_max = 0.0;
  double seconds = 0.0;
  int max_newton = 0;
  std::size_t steps = 0;
};

CoupledSummary coupled_run(int n, double T, bool condition) {
  ExperimentConfig c = default_config(Experiment::coupled_lai);
  c.meshes = {n};
  c.final_time = T;
  c.compute_condition = condition;
  c.snapshot_times.clear();
  const auto t0 = std::chrono::steady_clock::now();
  const CoupledRun run = run_coupled_case(c, n);
  if (!run.ok) throw std::runtime_error(run.error);
  CoupledSummary s;
  s.seconds = seconds_since(t0);
  s.steps = run.result.steps.size();
  s.cond_min = INFINITY;
  for (const auto& st : run.result.steps) {
    s.mass_error = std::max(s.mass_error, st.relative_mass_error);
    s.max_newton = std::max(s.max_newton, st.newton_iterations);
    s.cond_min = std::min(s.cond_min, st.condition_number);
    s.cond_max = std::max(s.cond_max, st.condition_number);
  }
  s.cond_ratio = s.cond_max / s.cond_min;
  return s;
}

bool coupled_conservation() {
  const CoupledSummary smoke = coupled_run(16, 0.5, true);
  std::printf("  smoke n=16 T=0.5: %zu steps, mass err %.2e, cond [%.3e, %.3e], %.1fs\n", smoke.steps,
              smoke.mass_error, smoke.cond_min, smoke.cond_max, smoke.seconds);
  const CoupledSummary full = coupled_run(32, 2.0, true);
  std::printf("  full n=32 T=2: %zu steps, mass err %.2e, cond [%.3e, %.3e], %.1fs\n", full.steps, full.mass_error,
              full.cond_min, full.cond_max, full.seconds);
  const bool ok = smoke.mass_error < 1e-8 && smoke.cond_ratio < 100 && smoke.seconds < 60 && full.mass_error < 1e-8 &&
                  full.cond_ratio < 100;
  return report(7, ok,
                format("n=32 T=2: max rel mass err %.2e (< 1e-8), cond max/min %.2f (< 100); n=16 T=0.5 smoke: %.2e, "
                       "%.2f, %.1fs (< 60s)",
                       full.mass_error, full.cond_ratio, smoke.mass_error, smoke.cond_ratio, smoke.seconds));
}

// --- 8 ---------------------------------------------------------------------

bool coupled_self_convergence() {
  ExperimentConfig c = default_config(Experiment::coupled_lai);
  c.meshes = {16, 32, 64};
  c.final_time = 0.5;
  c.self_convergence_time = 0.5;
  c.compute_condition = false;
  c.snapshot_times.clear();
  const CoupledDemo demo = run_coupled_demo(c);
  for (const auto& r : demo.self) std::printf("  h=%.5f bulk %.4e surface %.4e\n", r.h_fine, r.bulk, r.surface);
  const bool ok = demo.all_ok() && demo.self.size() == 2 && in_range(demo.bulk_rate.all, 1.5, 2.5) &&
                  in_range(demo.surface_rate.all, 1.5, 2.5);
  return report(8, ok,
                format("t=0.5, h = 2/16, 2/32, 2/64: bulk slope %.3f, surface slope %.3f (in [1.5, 2.5])",
                       demo.bulk_rate.all, demo.surface_rate.all));
}

// --- 9 ---------------------------------------------------------------------

double worst_fd_order() {
  const BackgroundMesh mesh = build_uniform_mesh(VortexSetup::box(), 16);
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
  const CoupledSlabSystem sys(problem, slab, {}, 1.5);
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = INFINITY;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(sys.size()), w(sys.size());
    for (int i = 0; i < sys.size(); ++i) {
      x[i] = u(rng);
      w[i] = 2 * u(rng) - 1;
    }
    const Eigen::VectorXd F = sys.residual(x);
    const Eigen::VectorXd Jw = sys.jacobian(x) * w;
    double prev = 0.0;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
      const double e = (sys.residual(x + eps * w) - F - eps * Jw).norm();
      if (prev > 0.0) worst = std::min(worst, std::log10(prev / e));
      prev = e;
    }
  }
  return worst;
}

bool jacobian_and_newton() {
  const double order = worst_fd_order();
  ExperimentConfig c = default_config(Experiment::coupled_lai);
  c.meshes = {32};
  c.final_time = 2.0;
  c.compute_condition = false;
  c.snapshot_times.clear();
  const CoupledRun run = run_coupled_case(c, 32);
  int max_iter = 0, slow_tails = 0;
  double worst_tail = 0.0;
  for (const auto& s : run.result.steps) {
    max_iter = std::max(max_iter, s.newton_iterations);
    const auto& u = s.update_norms;
    if (u.size() >= 2 && u[u.size() - 2] > 0.0) {
      const double ratio = u.back() / u[u.size() - 2];
      worst_tail = std::max(worst_tail, ratio);
      if (ratio >= 0.1) ++slow_tails;
    }
  }
  const bool ok = run.ok && order >= 1.9 && max_iter <= 5 && slow_tails == 0;
  return report(9, ok,
                format("FD order min %.3f over 10 states (>= 1.9); n=32 T=2 run: %zu slabs, max Newton iterations %d "
                       "(<= 5), worst last/previous update %.2e (< 0.1)",
                       order, run.result.steps.size(), max_iter, worst_tail));
}

// --- 10 --------------------------------------------------------------------

bool not_reproducible() {
  std::printf(
      "criterion 10: INFO  absolute error magnitudes are not compared; criteria 1-9 check rates, slopes and "
      "invariants instead\n");
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int criterion = 0;
  app.add_option("--criterion", criterion, "criterion number, 1-10")->required()->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  try {
    bool ok = false;
    switch (criterion) {
      case 1: ok = quadrature_exactness(); break;
      case 2: ok = geometry_orders(); break;
      case 3: ok = surface_example1(); break;
      case 4: ok = condition_scaling(); break;
      case 5: ok = temporal_order(); break;
      case 6: ok = constant_preservation(); break;
      case 7: ok = coupled_conservation(); break;
      case 8: ok = coupled_self_convergence(); break;
      case 9: ok = jacobian_and_newton(); break;
      case 10: ok = not_reproducible(); break;
    }
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    report(criterion, false, std::string("exception: ") + e.what());
    return 1;
  }
}
