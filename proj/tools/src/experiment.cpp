#include "stcut/cli/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "stcut/cli/svg_plot.hpp"

namespace stcut::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Reads `key` from `obj` into `out` if present; type errors name the path.
template <class T>
void read(const json& obj, const char* key, T& out, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + key + ": wrong type");
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& path) {
  if (!obj.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + " must be an object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key " + path + it.key());
}

const json& section(const json& doc, const char* key, const json& empty) {
  auto it = doc.find(key);
  return it == doc.end() ? empty : *it;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

template <class F>
std::string to_text(F&& writer) {
  std::ostringstream s;
  writer(s);
  return s.str();
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::surface_example1: return "surface_example1";
    case Experiment::surface_example2: return "surface_example2";
    case Experiment::coupled_lai: return "coupled_lai";
    case Experiment::custom: return "custom";
  }
  return "custom";
}

Experiment parse_experiment(const std::string& text) {
  for (Experiment e : {Experiment::surface_example1, Experiment::surface_example2, Experiment::coupled_lai,
                       Experiment::custom})
    if (text == to_string(e)) return e;
  throw ConfigError("unknown experiment '" + text + "'");
}

std::string to_string(Solution s) { return s == Solution::example1 ? "example1" : "example2"; }

Solution parse_solution(const std::string& text) {
  if (text == "example1") return Solution::example1;
  if (text == "example2") return Solution::example2;
  throw ConfigError("unknown solution '" + text + "'");
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return experiment == o.experiment && solution == o.solution && meshes == o.meshes && p == o.p && q == o.q &&
         stab == o.stab && stab_constant == o.stab_constant && tracker == o.tracker &&
         time_step_ratio == o.time_step_ratio && final_time == o.final_time &&
         compute_condition == o.compute_condition && condition_slab == o.condition_slab &&
         condition_dense_limit == o.condition_dense_limit && record_wall_time == o.record_wall_time &&
         coupled == o.coupled && use_multiplier == o.use_multiplier && snapshot_times == o.snapshot_times &&
         self_convergence_time == o.self_convergence_time && newton.tol == o.newton.tol &&
         newton.max_iterations == o.newton.max_iterations && output_dir == o.output_dir;
}

double default_stab_constant(Experiment e, StabilizationMode mode) {
  if (e == Experiment::surface_example2) return 0.01;
  // The legacy arm's h^{2i-2} scaling needs a smaller constant at p = 1.
  return mode == StabilizationMode::combined_new ? 0.1 : 0.01;
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  // Example 1: chords of order h^2 keep the geometric error below the
  // discretization error for p = 2.
  c.tracker.marker_spacing = 0.5;
  c.tracker.marker_spacing_power = 1.0;
  c.tracker.chord_length = 1.0 / 3.0;
  c.tracker.chord_power = 2.0;
  switch (e) {
    case Experiment::surface_example1:
    case Experiment::custom:
      break;
    case Experiment::surface_example2:
      c.solution = Solution::example2;
      c.meshes = {10, 20, 40};
      c.p = 2;
      c.stab = StabilizationMode::face_only_legacy;
      c.stab_constant = 0.01;
      // Fixed fine geometry so the time error dominates.
      c.tracker.marker_spacing = 0.02;
      c.tracker.marker_spacing_power = 0.0;
      c.tracker.chord_length = 1e-4;
      c.tracker.chord_power = 0.0;
      break;
    case Experiment::coupled_lai:
      c.meshes = {64};
      c.tracker = TrackerSettings{};
      c.tracker.representation = Representation::levelset;
      c.time_step_ratio = 1.0 / 8.0;
      c.final_time = 2.0;
      c.condition_slab = -1;
      c.condition_dense_limit = 0;
      break;
  }
  return c;
}

void validate(const ExperimentConfig& c) {
  if (c.meshes.empty()) throw ConfigError("meshes: empty");
  for (int n : c.meshes)
    if (n < 2) throw ConfigError("meshes: every entry must be at least 2");
  if (c.p < 1 || c.p > 3) throw ConfigError("p: must be 1, 2 or 3");
  if (c.q < 1 || c.q > 2) throw ConfigError("q: must be 1 or 2");
  if (!(c.stab_constant > 0.0)) throw ConfigError("stabilization.constant: must be positive");
  if (!(c.time_step_ratio > 0.0)) throw ConfigError("time.step_ratio: must be positive");
  if (!(c.final_time > 0.0)) throw ConfigError("time.final_time: must be positive");
  if (!(c.tracker.marker_spacing > 0.0)) throw ConfigError("interface.marker_spacing: must be positive");
  if (c.tracker.samples_per_knot < 1) throw ConfigError("interface.samples_per_knot: must be positive");
  if (c.tracker.chord_length < 0.0) throw ConfigError("interface.chord_length: must be non-negative");
  if (c.tracker.redistribute_every < 1 || c.tracker.redistance_every < 1)
    throw ConfigError("interface: reinitialization intervals must be positive");
  if (c.condition_dense_limit < 0) throw ConfigError("condition.dense_limit: must be non-negative");
  if (c.newton.max_iterations < 1 || !(c.newton.tol > 0.0)) throw ConfigError("coupled.newton: invalid settings");
  const auto& k = c.coupled;
  for (double v : {k.Pe, k.Pe_s, k.Da, k.Bi, k.alpha})
    if (!(v > 0.0)) throw ConfigError("coupled: nondimensional numbers must be positive");
  if (!(k.tau_b > 0.0) || !(k.tau_s > 0.0)) throw ConfigError("coupled: stabilization constants must be positive");
  if (c.is_coupled()) {
    if (c.p != 1 || c.q != 1) throw ConfigError("coupled_lai: only p = q = 1 is supported");
    if (c.tracker.representation != Representation::levelset)
      throw ConfigError("coupled_lai: only the level-set representation is supported");
  }
  if (c.output_dir.empty()) throw ConfigError("output_dir: empty");
}

json serialize(const ExperimentConfig& c) {
  json doc;
  doc["experiment"] = to_string(c.experiment);
  doc["solution"] = to_string(c.solution);
  doc["meshes"] = c.meshes;
  doc["p"] = c.p;
  doc["q"] = c.q;
  doc["stabilization"] = {{"mode", to_string(c.stab)}, {"constant", c.stab_constant}};
  doc["interface"] = {{"representation", to_string(c.tracker.representation)},
                      {"marker_spacing", c.tracker.marker_spacing},
                      {"marker_spacing_power", c.tracker.marker_spacing_power},
                      {"samples_per_knot", c.tracker.samples_per_knot},
                      {"chord_length", c.tracker.chord_length},
                      {"chord_power", c.tracker.chord_power},
                      {"redistribute_every", c.tracker.redistribute_every},
                      {"redistance_every", c.tracker.redistance_every}};
  doc["time"] = {{"step_ratio", c.time_step_ratio}, {"final_time", c.final_time}};
  doc["condition"] = {
      {"enabled", c.compute_condition}, {"slab", c.condition_slab}, {"dense_limit", c.condition_dense_limit}};
  doc["record_wall_time"] = c.record_wall_time;
  doc["coupled"] = {{"Pe", c.coupled.Pe},
                    {"Pe_s", c.coupled.Pe_s},
                    {"Da", c.coupled.Da},
                    {"Bi", c.coupled.Bi},
                    {"alpha", c.coupled.alpha},
                    {"tau_b", c.coupled.tau_b},
                    {"tau_s", c.coupled.tau_s},
                    {"use_multiplier", c.use_multiplier},
                    {"snapshot_times", c.snapshot_times},
                    {"self_convergence_time", c.self_convergence_time},
                    {"newton_tol", c.newton.tol},
                    {"newton_max_iterations", c.newton.max_iterations}};
  doc["output_dir"] = c.output_dir;
  return doc;
}

ExperimentConfig parse_config(const json& doc) {
  reject_unknown(doc,
                 {"experiment", "solution", "meshes", "p", "q", "stabilization", "interface", "time", "condition",
                  "record_wall_time", "coupled", "output_dir"},
                 "");
  std::string name = "surface_example1";
  read(doc, "experiment", name, "");
  ExperimentConfig c = default_config(parse_experiment(name));

  std::string text = to_string(c.solution);
  read(doc, "solution", text, "");
  c.solution = parse_solution(text);
  read(doc, "meshes", c.meshes, "");
  read(doc, "p", c.p, "");
  read(doc, "q", c.q, "");
  read(doc, "record_wall_time", c.record_wall_time, "");
  read(doc, "output_dir", c.output_dir, "");

  const json empty = json::object();
  const json& stab = section(doc, "stabilization", empty);
  reject_unknown(stab, {"mode", "constant"}, "stabilization.");
  text = to_string(c.stab);
  read(stab, "mode", text, "stabilization.");
  try {
    c.stab = parse_stabilization_mode(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("stabilization.mode: ") + e.what());
  }
  read(stab, "constant", c.stab_constant, "stabilization.");

  const json& geo = section(doc, "interface", empty);
  reject_unknown(geo,
                 {"representation", "marker_spacing", "marker_spacing_power", "samples_per_knot", "chord_length",
                  "chord_power", "redistribute_every", "redistance_every"},
                 "interface.");
  text = to_string(c.tracker.representation);
  read(geo, "representation", text, "interface.");
  try {
    c.tracker.representation = parse_representation(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("interface.representation: ") + e.what());
  }
  read(geo, "marker_spacing", c.tracker.marker_spacing, "interface.");
  read(geo, "marker_spacing_power", c.tracker.marker_spacing_power, "interface.");
  read(geo, "samples_per_knot", c.tracker.samples_per_knot, "interface.");
  read(geo, "chord_length", c.tracker.chord_length, "interface.");
  read(geo, "chord_power", c.tracker.chord_power, "interface.");
  read(geo, "redistribute_every", c.tracker.redistribute_every, "interface.");
  read(geo, "redistance_every", c.tracker.redistance_every, "interface.");

  const json& time = section(doc, "time", empty);
  reject_unknown(time, {"step_ratio", "final_time"}, "time.");
  read(time, "step_ratio", c.time_step_ratio, "time.");
  read(time, "final_time", c.final_time, "time.");

  const json& cond = section(doc, "condition", empty);
  reject_unknown(cond, {"enabled", "slab", "dense_limit"}, "condition.");
  read(cond, "enabled", c.compute_condition, "condition.");
  read(cond, "slab", c.condition_slab, "condition.");
  read(cond, "dense_limit", c.condition_dense_limit, "condition.");

  const json& cp = section(doc, "coupled", empty);
  reject_unknown(cp,
                 {"Pe", "Pe_s", "Da", "Bi", "alpha", "tau_b", "tau_s", "use_multiplier", "snapshot_times",
                  "self_convergence_time", "newton_tol", "newton_max_iterations"},
                 "coupled.");
  read(cp, "Pe", c.coupled.Pe, "coupled.");
  read(cp, "Pe_s", c.coupled.Pe_s, "coupled.");
  read(cp, "Da", c.coupled.Da, "coupled.");
  read(cp, "Bi", c.coupled.Bi, "coupled.");
  read(cp, "alpha", c.coupled.alpha, "coupled.");
  read(cp, "tau_b", c.coupled.tau_b, "coupled.");
  read(cp, "tau_s", c.coupled.tau_s, "coupled.");
  read(cp, "use_multiplier", c.use_multiplier, "coupled.");
  read(cp, "snapshot_times", c.snapshot_times, "coupled.");
  read(cp, "self_convergence_time", c.self_convergence_time, "coupled.");
  read(cp, "newton_tol", c.newton.tol, "coupled.");
  read(cp, "newton_max_iterations", c.newton.max_iterations, "coupled.");

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

RateFit fit_rates(const std::vector<double>& h, const std::vector<double>& y) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < h.size() && i < y.size(); ++i)
    if (h[i] > 0.0 && y[i] > 0.0 && std::isfinite(h[i]) && std::isfinite(y[i]))
      pts.emplace_back(std::log(h[i]), std::log(y[i]));
  auto slope = [&](std::size_t first) {
    const std::size_t m = pts.size() - first;
    if (pts.size() < first + 2) return kNaN;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = first; i < pts.size(); ++i) {
      sx += pts[i].first;
      sy += pts[i].second;
      sxx += pts[i].first * pts[i].first;
      sxy += pts[i].first * pts[i].second;
    }
    const double den = m * sxx - sx * sx;
    return den == 0.0 ? kNaN : (m * sxy - sx * sy) / den;
  };
  RateFit fit;
  fit.all = slope(0);
  fit.last3 = slope(pts.size() > 3 ? pts.size() - 3 : 0);
  return fit;
}

bool ConvergenceStudy::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.ok; });
}

bool CoupledDemo::all_ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const CoupledRun& r) { return r.ok; });
}

ConvergenceRow run_surface_case(const ExperimentConfig& config, int n) {
  const auto t0 = std::chrono::steady_clock::now();
  ConvergenceRow row;
  row.n = n;
  row.p = config.p;
  row.q = config.q;
  row.stab_mode = to_string(config.stab);
  try {
    const BackgroundMesh mesh = build_uniform_mesh(ellipse_box(), n);
    row.h = mesh.cell_width();
    row.k = config.time_step_ratio * row.h;
    const DofHandler dofs(mesh, config.p);
    const SurfaceProblem problem =
        ellipse_problem(config.solution == Solution::example1 ? example1_solution() : example2_solution());
    auto tracker = make_circle_tracker(mesh, Vec2(0.0, 0.0), 1.0, config.tracker);
    MarchOptions mo;
    mo.p = config.p;
    mo.q = config.q;
    mo.k = row.k;
    mo.T = config.final_time;
    mo.stab = StabilizationConfig::make(config.stab, config.stab_constant);
    mo.compute_condition = config.compute_condition;
    mo.condition_slab = config.condition_slab;
    mo.condition_dense_limit = config.condition_dense_limit;
    const MarchResult result = march(problem, *tracker, dofs, mo);
    const ErrorNorms err = error_norms(result, problem);
    row.l2 = err.l2;
    row.h1 = err.h1;
    row.cond = config.compute_condition ? result.condition_number : kNaN;
    row.dofs = result.max_dofs;
    row.k = config.final_time / result.num_slabs;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
    row.l2 = row.h1 = row.cond = kNaN;
  }
  row.wall_time = config.record_wall_time ? seconds_since(t0) : 0.0;
  return row;
}

ConvergenceStudy run_convergence_study(const ExperimentConfig& config) {
  validate(config);
  if (config.is_coupled()) throw ConfigError("run_convergence_study: coupled experiment");
  ConvergenceStudy study;
  study.config = config;
  std::vector<double> h, l2, h1, cond;
  for (int n : config.meshes) {
    study.rows.push_back(run_surface_case(config, n));
    const auto& r = study.rows.back();
    if (!r.ok) continue;
    h.push_back(r.h);
    l2.push_back(r.l2);
    h1.push_back(r.h1);
    cond.push_back(r.cond);
  }
  study.l2 = fit_rates(h, l2);
  study.h1 = fit_rates(h, h1);
  study.cond = fit_rates(h, cond);
  return study;
}

CoupledProblem coupled_problem(const ExperimentConfig& config) {
  CoupledProblem problem = vortex_problem(config.coupled);
  problem.use_multiplier = config.use_multiplier;
  return problem;
}

CoupledRun run_coupled_case(const ExperimentConfig& config, int n) {
  const auto t0 = std::chrono::steady_clock::now();
  CoupledRun run;
  run.n = n;
  try {
    run.mesh = std::make_unique<BackgroundMesh>(build_uniform_mesh(VortexSetup::box(), n));
    run.dofs = std::make_unique<DofHandler>(*run.mesh, 1);
    run.h = run.mesh->cell_width();
    run.k = config.time_step_ratio * run.h;
    CoupledOptions o;
    o.k = run.k;
    o.T = config.final_time;
    o.newton = config.newton;
    o.compute_condition = config.compute_condition;
    o.condition_dense_limit = config.condition_dense_limit;
    o.snapshot_times = config.snapshot_times;
    if (config.meshes.size() > 1) o.checkpoint_times = {config.self_convergence_time};
    o.redistance_every = config.tracker.redistance_every;
    run.result = march_coupled(coupled_problem(config), *run.dofs, o);
    if (!run.result.steps.empty()) run.k = config.final_time / run.result.steps.size();
  } catch (const std::exception& e) {
    run.ok = false;
    run.error = e.what();
  }
  run.wall_time = config.record_wall_time ? seconds_since(t0) : 0.0;
  return run;
}

CoupledDemo run_coupled_demo(const ExperimentConfig& config) {
  validate(config);
  if (!config.is_coupled()) throw ConfigError("run_coupled_demo: not a coupled experiment");
  CoupledDemo demo;
  demo.config = config;
  std::vector<int> meshes = config.meshes;
  std::sort(meshes.begin(), meshes.end());
  for (int n : meshes) demo.runs.push_back(run_coupled_case(config, n));

  std::vector<double> h, bulk, surface;
  for (std::size_t i = 0; i + 1 < demo.runs.size(); ++i) {
    const CoupledRun& coarse = demo.runs[i];
    CoupledRun& fine = demo.runs[i + 1];
    if (!coarse.ok || !fine.ok) continue;
    if (coarse.result.checkpoints.empty() || fine.result.checkpoints.empty()) {
      fine.ok = false;
      fine.error = "no slab ends at t = " + short_number(config.self_convergence_time);
      continue;
    }
    const SelfConvergence d = self_convergence(fine.result.checkpoints.front(), coarse.result.checkpoints.front());
    demo.self.push_back({fine.h, d.bulk, d.surface});
    h.push_back(fine.h);
    bulk.push_back(d.bulk);
    surface.push_back(d.surface);
  }
  demo.bulk_rate = fit_rates(h, bulk);
  demo.surface_rate = fit_rates(h, surface);
  return demo;
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << "h,k,p,q,stab_mode,L2_error,H1_error,cond_number,dofs,wall_time_s\n";
  for (const auto& r : rows)
    out << fmt(r.h) << ',' << fmt(r.k) << ',' << r.p << ',' << r.q << ',' << r.stab_mode << ',' << fmt(r.l2) << ','
        << fmt(r.h1) << ',' << fmt(r.cond) << ',' << r.dofs << ',' << fmt(r.wall_time) << '\n';
}

void write_rates_csv(std::ostream& out, const std::vector<std::pair<std::string, RateFit>>& fits) {
  out << "quantity,slope_last3,slope_all\n";
  for (const auto& [name, fit] : fits) out << name << ',' << fmt(fit.last3) << ',' << fmt(fit.all) << '\n';
}

void write_timeseries_csv(std::ostream& out, const std::vector<CoupledStep>& steps) {
  out << "step,t_n,mass,relative_mass_error,newton_iters,cond_number\n";
  for (const auto& s : steps)
    out << s.step << ',' << fmt(s.t) << ',' << fmt(s.mass) << ',' << fmt(s.relative_mass_error) << ','
        << s.newton_iterations << ',' << fmt(s.condition_number) << '\n';
}

void write_field_csv(std::ostream& out, const std::vector<std::array<double, 3>>& points, const std::string& value) {
  out << "x,y," << value << '\n';
  for (const auto& p : points) out << fmt(p[0]) << ',' << fmt(p[1]) << ',' << fmt(p[2]) << '\n';
}

void write_self_convergence_csv(std::ostream& out, const std::vector<SelfConvergenceRow>& rows) {
  out << "h,bulk_difference,surface_difference\n";
  for (const auto& r : rows) out << fmt(r.h_fine) << ',' << fmt(r.bulk) << ',' << fmt(r.surface) << '\n';
}

std::string study_stem(const ExperimentConfig& c) {
  return to_string(c.experiment) + "_p" + std::to_string(c.p) + "_q" + std::to_string(c.q) + "_" +
         (c.stab == StabilizationMode::combined_new ? "new" : "legacy") + "_" + to_string(c.tracker.representation);
}

std::vector<std::filesystem::path> emit_outputs(const ConvergenceStudy& study, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const std::string stem = study_stem(study.config);
  auto emit = [&](const std::string& name, const std::string& text) {
    written.push_back(dir / name);
    write_file(written.back(), text);
  };

  emit(stem + ".csv", to_text([&](std::ostream& o) { write_convergence_csv(o, study.rows); }));
  emit(stem + "_rates.csv", to_text([&](std::ostream& o) {
         write_rates_csv(o, {{"L2_error", study.l2}, {"H1_error", study.h1}, {"cond_number", study.cond}});
       }));

  std::vector<double> h, l2, h1, cond;
  for (const auto& r : study.rows)
    if (r.ok) {
      h.push_back(r.h);
      l2.push_back(r.l2);
      h1.push_back(r.h1);
      cond.push_back(r.cond);
    }
  const int p = study.config.p, q = study.config.q;
  PlotSpec errors{"errors at t = " + short_number(study.config.final_time), "h", "error", true, true, {}};
  errors.series.push_back({"L2", h, l2});
  errors.series.push_back({"H1", h, h1});
  if (!h.empty()) {
    const int order = study.config.experiment == Experiment::surface_example2 ? q + 1 : p + 1;
    errors.series.push_back(reference_slope(h, h.back(), l2.back(), order, "h^" + std::to_string(order)));
    errors.series.push_back(reference_slope(h, h.back(), h1.back(), p, "h^" + std::to_string(p)));
  }
  emit(stem + "_errors.svg", render_svg(errors));

  if (study.config.compute_condition) {
    PlotSpec cs{"spectral condition number", "h", "condition number", true, true, {}};
    cs.series.push_back({"cond", h, cond});
    if (!h.empty()) cs.series.push_back(reference_slope(h, h.back(), cond.back(), -2.0, "h^-2"));
    emit(stem + "_cond.svg", render_svg(cs));
  }
  return written;
}

std::vector<std::filesystem::path> emit_outputs(const CoupledDemo& demo, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    written.push_back(dir / name);
    write_file(written.back(), text);
  };

  for (const auto& run : demo.runs) {
    const std::string stem = "coupled_n" + std::to_string(run.n);
    emit(stem + "_timeseries.csv", to_text([&](std::ostream& o) { write_timeseries_csv(o, run.result.steps); }));
    for (const auto& f : run.result.fields) {
      const std::string t = short_number(f.t);
      emit(stem + "_bulk_t" + t + ".csv", to_text([&](std::ostream& o) { write_field_csv(o, f.bulk, "u_B"); }));
      emit(stem + "_surface_t" + t + ".csv", to_text([&](std::ostream& o) { write_field_csv(o, f.surface, "u_S"); }));
    }
    std::vector<double> t, err, cond;
    for (const auto& s : run.result.steps) {
      t.push_back(s.t);
      err.push_back(s.relative_mass_error);
      cond.push_back(s.condition_number);
    }
    PlotSpec mass{"relative total mass error", "t", "relative error", false, true, {{"mass", t, err}}};
    emit(stem + "_mass.svg", render_svg(mass));
    if (demo.config.compute_condition) {
      PlotSpec cs{"condition number of the Newton matrix", "t", "condition number", false, true, {{"cond", t, cond}}};
      emit(stem + "_cond.svg", render_svg(cs));
    }
  }

  if (demo.runs.size() > 1) {
    emit("coupled_self_convergence.csv", to_text([&](std::ostream& o) { write_self_convergence_csv(o, demo.self); }));
    emit("coupled_self_convergence_rates.csv", to_text([&](std::ostream& o) {
           write_rates_csv(o, {{"bulk_difference", demo.bulk_rate}, {"surface_difference", demo.surface_rate}});
         }));
    std::vector<double> h, b, s;
    for (const auto& r : demo.self) {
      h.push_back(r.h_fine);
      b.push_back(r.bulk);
      s.push_back(r.surface);
    }
    PlotSpec sc{"self-convergence at t = " + short_number(demo.config.self_convergence_time), "h", "difference",
                true, true, {{"bulk", h, b}, {"surface", h, s}}};
    if (!h.empty()) sc.series.push_back(reference_slope(h, h.back(), b.back(), 2.0, "h^2"));
    emit("coupled_self_convergence.svg", render_svg(sc));
  }
  return written;
}

}  // namespace stcut::cli
