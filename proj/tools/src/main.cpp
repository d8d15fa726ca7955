#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stcut/cli/experiment.hpp"

using namespace stcut;
using namespace stcut::cli;

namespace {

std::vector<int> parse_mesh_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int n = std::stoi(item, &used);
    if (used != item.size()) throw ConfigError("--mesh-list: bad entry '" + item + "'");
    out.push_back(n);
  }
  return out;
}

void print_fit(const char* name, const RateFit& f) {
  std::printf("  %-12s slope (last 3) %7.3f   slope (all) %7.3f\n", name, f.last3, f.all);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time unfitted FEM experiments on evolving interfaces"};
  std::string experiment, config_path, out_dir, mesh_list, stab, representation;
  int p = 0, q = 0;
  bool dump = false;
  app.add_option("--experiment", experiment, "surface_example1, surface_example2, coupled_lai or custom");
  app.add_option("--config", config_path, "JSON config; missing keys take the experiment defaults")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--mesh-list", mesh_list, "comma separated cells per side, e.g. 20,40,80");
  app.add_option("--p", p, "spatial degree")->check(CLI::Range(1, 3));
  app.add_option("--q", q, "temporal degree")->check(CLI::Range(1, 2));
  app.add_option("--stab", stab, "stabilization")->check(CLI::IsMember({"new", "legacy"}));
  app.add_option("--representation", representation, "interface representation")
      ->check(CLI::IsMember({"levelset", "spline"}));
  app.add_flag("--dump-config", dump, "print the resolved config and exit");
  CLI11_PARSE(app, argc, argv);

  ExperimentConfig config;
  try {
    if (!config_path.empty()) {
      config = load_config(config_path);
      if (!experiment.empty() && parse_experiment(experiment) != config.experiment)
        throw ConfigError("--experiment disagrees with the config file");
    } else {
      config = default_config(experiment.empty() ? Experiment::surface_example1 : parse_experiment(experiment));
    }
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!mesh_list.empty()) config.meshes = parse_mesh_list(mesh_list);
    if (p) config.p = p;
    if (q) config.q = q;
    if (!stab.empty()) {
      const StabilizationMode mode = parse_stabilization_mode(stab);
      if (config_path.empty()) config.stab_constant = default_stab_constant(config.experiment, mode);
      config.stab = mode;
    }
    if (!representation.empty()) config.tracker.representation = parse_representation(representation);
    validate(config);
  } catch (const std::exception& e) {
    std::cerr << "stcut: " << e.what() << "\n";
    return 1;
  }

  if (dump) {
    std::cout << serialize(config).dump(2) << "\n";
    return 0;
  }

  try {
    if (config.is_coupled()) {
      const CoupledDemo demo = run_coupled_demo(config);
      for (const auto& run : demo.runs) {
        if (!run.ok) {
          std::printf("n=%d FAILED: %s\n", run.n, run.error.c_str());
          continue;
        }
        double worst = 0.0, cmin = 0.0, cmax = 0.0;
        int iters = 0;
        for (const auto& s : run.result.steps) {
          worst = std::max(worst, s.relative_mass_error);
          iters = std::max(iters, s.newton_iterations);
          cmin = cmin == 0.0 ? s.condition_number : std::min(cmin, s.condition_number);
          cmax = std::max(cmax, s.condition_number);
        }
        std::printf("n=%d h=%.5g k=%.5g steps=%zu mass=%.12g max_rel_mass_err=%.3e max_newton=%d cond=[%.4g, %.4g] "
                    "%.1fs\n",
                    run.n, run.h, run.k, run.result.steps.size(), run.result.initial_mass, worst, iters, cmin, cmax,
                    run.wall_time);
      }
      for (const auto& r : demo.self)
        std::printf("self-convergence h=%.5g bulk=%.4e surface=%.4e\n", r.h_fine, r.bulk, r.surface);
      if (demo.self.size() > 0) {
        print_fit("bulk", demo.bulk_rate);
        print_fit("surface", demo.surface_rate);
      }
      for (const auto& path : emit_outputs(demo, config.output_dir)) std::printf("wrote %s\n", path.c_str());
      return demo.all_ok() ? 0 : 2;
    }

    const ConvergenceStudy study = run_convergence_study(config);
    for (const auto& r : study.rows) {
      if (r.ok)
        std::printf("n=%d h=%.5g k=%.5g L2=%.4e H1=%.4e cond=%.4e dofs=%d %.1fs\n", r.n, r.h, r.k, r.l2, r.h1, r.cond,
                    r.dofs, r.wall_time);
      else
        std::printf("n=%d FAILED: %s\n", r.n, r.error.c_str());
    }
    print_fit("L2", study.l2);
    print_fit("H1", study.h1);
    if (config.compute_condition) print_fit("cond", study.cond);
    for (const auto& path : emit_outputs(study, config.output_dir)) std::printf("wrote %s\n", path.c_str());
    return study.all_ok() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "stcut: " << e.what() << "\n";
    return 2;
  }
}
