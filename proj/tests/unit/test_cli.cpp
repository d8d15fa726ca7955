#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "stcut/cli/experiment.hpp"
#include "stcut/cli/svg_plot.hpp"

using namespace stcut;
using namespace stcut::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("stcut_cli_test_" + name);
  fs::remove_all(d);
  return d;
}

ExperimentConfig tiny_surface_config() {
  ExperimentConfig c = default_config(Experiment::surface_example1);
  c.meshes = {8, 12};
  c.final_time = 0.02;
  c.record_wall_time = false;
  c.condition_dense_limit = 100000;
  return c;
}

}  // namespace

TEST(Config, RoundTripEveryExperiment) {
  for (Experiment e :
       {Experiment::surface_example1, Experiment::surface_example2, Experiment::coupled_lai, Experiment::custom}) {
    const ExperimentConfig c = default_config(e);
    EXPECT_NO_THROW(validate(c));
    EXPECT_EQ(parse_config(serialize(c)), c) << to_string(e);
    EXPECT_EQ(parse_experiment(to_string(e)), e);
  }
}

TEST(Config, RoundTripModified) {
  ExperimentConfig c = default_config(Experiment::custom);
  c.solution = Solution::example2;
  c.meshes = {6, 9, 13};
  c.p = 3;
  c.q = 2;
  c.stab = StabilizationMode::face_only_legacy;
  c.stab_constant = 0.037;
  c.tracker.representation = Representation::levelset;
  c.time_step_ratio = 0.1;
  c.final_time = 0.3;
  c.record_wall_time = false;
  c.coupled.Pe = 10.0;
  c.use_multiplier = false;
  c.snapshot_times = {0.25};
  c.newton.tol = 1e-8;
  c.output_dir = "elsewhere";
  const ExperimentConfig back = parse_config(serialize(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize(back).dump(), serialize(c).dump());
}

TEST(Config, MissingKeysTakeExperimentDefaults) {
  const ExperimentConfig c = parse_config(nlohmann::json{{"experiment", "surface_example2"}});
  EXPECT_EQ(c, default_config(Experiment::surface_example2));
  EXPECT_EQ(c.p, 2);
  EXPECT_EQ(c.stab, StabilizationMode::face_only_legacy);
  EXPECT_EQ(c.meshes, (std::vector<int>{10, 20, 40}));

  const ExperimentConfig d = parse_config(nlohmann::json{{"experiment", "coupled_lai"}, {"p", 1}});
  EXPECT_EQ(d, default_config(Experiment::coupled_lai));
  EXPECT_EQ(d.meshes, (std::vector<int>{64}));
  EXPECT_DOUBLE_EQ(d.time_step_ratio, 0.125);
  EXPECT_EQ(d.coupled, CoupledParameters{});
}

TEST(Config, PaperDefaults) {
  const ExperimentConfig e1 = default_config(Experiment::surface_example1);
  EXPECT_EQ(e1.meshes, (std::vector<int>{20, 40, 80}));
  EXPECT_EQ(e1.stab, StabilizationMode::combined_new);
  EXPECT_DOUBLE_EQ(e1.stab_constant, 0.1);
  EXPECT_DOUBLE_EQ(e1.time_step_ratio, 1.0 / 12.0);
  EXPECT_DOUBLE_EQ(e1.final_time, 0.25);
  const ExperimentConfig c = default_config(Experiment::coupled_lai);
  EXPECT_DOUBLE_EQ(c.final_time, 2.0);
  EXPECT_EQ(c.snapshot_times, (std::vector<double>{0.5, 1.0, 1.5, 2.0}));
  EXPECT_DOUBLE_EQ(c.self_convergence_time, 0.5);
  EXPECT_DOUBLE_EQ(default_stab_constant(Experiment::surface_example1, StabilizationMode::face_only_legacy), 0.01);
}

TEST(Config, UnknownKeysRejected) {
  nlohmann::json doc = serialize(default_config(Experiment::surface_example1));
  doc["mesh_sizes"] = {1, 2};
  EXPECT_THROW(parse_config(doc), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json{{"experiment", "example3"}}), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::array()), ConfigError);
}

TEST(Config, ValidationNamesTheField) {
  ExperimentConfig c = default_config(Experiment::surface_example1);
  c.p = 4;
  try {
    validate(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("p:"), std::string::npos);
  }
  c = default_config(Experiment::surface_example1);
  c.meshes.clear();
  EXPECT_THROW(validate(c), ConfigError);
  c = default_config(Experiment::coupled_lai);
  c.p = 2;
  EXPECT_THROW(validate(c), ConfigError);
  nlohmann::json doc{{"experiment", "surface_example1"}, {"q", 3}};
  EXPECT_THROW(parse_config(doc), ConfigError);
}

TEST(Config, LoadFromFile) {
  const fs::path dir = scratch_dir("load");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "c.json");
    out << R"({"experiment": "surface_example1", "meshes": [5, 7], "stabilization": {"mode": "legacy"}})";
  }
  const ExperimentConfig c = load_config(dir / "c.json");
  EXPECT_EQ(c.meshes, (std::vector<int>{5, 7}));
  EXPECT_EQ(c.stab, StabilizationMode::face_only_legacy);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(FitRates, ExactPowerLaw) {
  const std::vector<double> h{0.4, 0.2, 0.1, 0.05};
  std::vector<double> y;
  for (double v : h) y.push_back(3.0 * v * v);
  const RateFit f = fit_rates(h, y);
  EXPECT_NEAR(f.last3, 2.0, 1e-12);
  EXPECT_NEAR(f.all, 2.0, 1e-12);
}

TEST(FitRates, LastThreeSkipPreAsymptoticPoint) {
  const std::vector<double> h{0.8, 0.4, 0.2, 0.1};
  const std::vector<double> y{1.0, 0.04 * 0.4 * 0.4 * 0.4, 0.04 * 0.2 * 0.2 * 0.2, 0.04 * 0.1 * 0.1 * 0.1};
  const RateFit f = fit_rates(h, y);
  EXPECT_NEAR(f.last3, 3.0, 1e-12);
  EXPECT_GT(std::abs(f.all - 3.0), 0.1);
}

TEST(FitRates, DegenerateInputs) {
  EXPECT_TRUE(std::isnan(fit_rates({0.1}, {1.0}).all));
  EXPECT_TRUE(std::isnan(fit_rates({}, {}).last3));
  // Non-positive and infinite values are skipped.
  const RateFit f = fit_rates({0.4, 0.2, 0.1}, {0.16, 0.0, 0.01});
  EXPECT_NEAR(f.all, 2.0, 1e-12);
  EXPECT_TRUE(std::isnan(fit_rates({0.4, 0.2}, {1.0, INFINITY}).all));
}

TEST(Outputs, ConvergenceColumnsExact) {
  std::ostringstream out;
  write_convergence_csv(out, {});
  EXPECT_EQ(out.str(), "h,k,p,q,stab_mode,L2_error,H1_error,cond_number,dofs,wall_time_s\n");
}

TEST(Outputs, EmptyResultsGiveHeaderOnly) {
  std::ostringstream a, b, c;
  write_timeseries_csv(a, {});
  write_self_convergence_csv(b, {});
  write_field_csv(c, {}, "u_S");
  EXPECT_EQ(a.str(), "step,t_n,mass,relative_mass_error,newton_iters,cond_number\n");
  EXPECT_EQ(b.str(), "h,bulk_difference,surface_difference\n");
  EXPECT_EQ(c.str(), "x,y,u_S\n");

  ConvergenceStudy empty;
  empty.config = tiny_surface_config();
  const fs::path dir = scratch_dir("empty");
  const auto files = emit_outputs(empty, dir);
  ASSERT_FALSE(files.empty());
  EXPECT_EQ(files.front().filename().string(), study_stem(empty.config) + ".csv");
  EXPECT_EQ(slurp(files.front()), "h,k,p,q,stab_mode,L2_error,H1_error,cond_number,dofs,wall_time_s\n");
  fs::remove_all(dir);
}

TEST(Outputs, RowsCarryTheRun) {
  ConvergenceRow r;
  r.h = 0.25;
  r.k = 0.25 / 12;
  r.p = 2;
  r.q = 1;
  r.stab_mode = "combined_new";
  r.l2 = 1.5e-3;
  r.h1 = 2e-2;
  r.cond = 1234.5;
  r.dofs = 77;
  std::ostringstream out;
  write_convergence_csv(out, {r});
  std::string header, line;
  std::istringstream in(out.str());
  std::getline(in, header);
  std::getline(in, line);
  std::vector<std::string> cells;
  std::stringstream ls(line);
  for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
  ASSERT_EQ(cells.size(), 10u);
  EXPECT_DOUBLE_EQ(std::stod(cells[0]), 0.25);
  EXPECT_EQ(cells[2], "2");
  EXPECT_EQ(cells[4], "combined_new");
  EXPECT_DOUBLE_EQ(std::stod(cells[5]), 1.5e-3);
  EXPECT_DOUBLE_EQ(std::stod(cells[7]), 1234.5);
  EXPECT_EQ(cells[8], "77");
}

TEST(Study, IdenticalRunsGiveIdenticalFiles) {
  const ExperimentConfig c = tiny_surface_config();
  const ConvergenceStudy a = run_convergence_study(c);
  const ConvergenceStudy b = run_convergence_study(c);
  ASSERT_EQ(a.rows.size(), 2u);
  EXPECT_TRUE(a.all_ok());
  for (const auto& r : a.rows) {
    EXPECT_GT(r.l2, 0.0);
    EXPECT_GT(r.cond, 1.0);
    EXPECT_EQ(r.wall_time, 0.0);
  }
  const fs::path da = scratch_dir("run_a"), db = scratch_dir("run_b");
  const auto fa = emit_outputs(a, da);
  const auto fb = emit_outputs(b, db);
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    EXPECT_EQ(fa[i].filename(), fb[i].filename());
    EXPECT_EQ(slurp(fa[i]), slurp(fb[i])) << fa[i];
  }
  fs::remove_all(da);
  fs::remove_all(db);
}

TEST(Study, CoupledDemoWritesSeriesAndSnapshots) {
  ExperimentConfig c = default_config(Experiment::coupled_lai);
  c.meshes = {16};
  c.final_time = 0.125;
  c.snapshot_times = {0.0625, 0.125};
  c.record_wall_time = false;
  const CoupledDemo demo = run_coupled_demo(c);
  ASSERT_EQ(demo.runs.size(), 1u);
  ASSERT_TRUE(demo.all_ok()) << demo.runs[0].error;
  const CoupledResult& r = demo.runs[0].result;
  EXPECT_EQ(r.steps.size(), 8u);
  EXPECT_EQ(r.fields.size(), 2u);
  for (const auto& s : r.steps) EXPECT_LT(s.relative_mass_error, 1e-8);
  const fs::path dir = scratch_dir("coupled");
  const auto files = emit_outputs(demo, dir);
  for (const char* name : {"coupled_n16_timeseries.csv", "coupled_n16_bulk_t0.0625.csv",
                           "coupled_n16_surface_t0.125.csv", "coupled_n16_mass.svg", "coupled_n16_cond.svg"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  std::istringstream series(slurp(dir / "coupled_n16_timeseries.csv"));
  int lines = 0;
  for (std::string l; std::getline(series, l);) ++lines;
  EXPECT_EQ(lines, 9);
  fs::remove_all(dir);
}

TEST(Svg, LogAxesAndReferenceSlope) {
  const std::vector<double> h{0.1, 0.05, 0.025};
  PlotSpec spec{"errors", "h", "error", true, true, {}};
  spec.series.push_back({"L2", h, {1e-2, 2.5e-3, 6.25e-4}});
  spec.series.push_back(reference_slope(h, 0.025, 6.25e-4, 2.0, "h^2"));
  const std::string svg = render_svg(spec);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("h^2"), std::string::npos);
  EXPECT_NE(svg.find("L2"), std::string::npos);
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
  EXPECT_EQ(render_svg(spec), svg);
}

TEST(Svg, ReferenceSlopeIsExact) {
  const PlotSeries s = reference_slope({0.1, 0.05, 0.025}, 0.025, 1e-3, -2.0, "h^-2");
  ASSERT_EQ(s.x.size(), 2u);
  EXPECT_TRUE(s.dashed);
  for (std::size_t i = 0; i < s.x.size(); ++i) EXPECT_NEAR(s.y[i], 1e-3 * std::pow(s.x[i] / 0.025, -2.0), 1e-15);
}

TEST(Svg, NonPositiveValuesSkippedOnLogAxes) {
  PlotSpec spec{"t", "x", "y", true, true, {{"s", {1.0, 2.0, 0.0}, {1.0, -1.0, 3.0}}}};
  const std::string svg = render_svg(spec);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_EQ(svg.find("inf"), std::string::npos);
  PlotSpec empty{"none", "x", "y", true, true, {}};
  EXPECT_NE(render_svg(empty).find("</svg>"), std::string::npos);
}
