#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "run.hpp"

namespace {

void add_grid_options(CLI::App* cmd, vesicle::RunConfig& cfg) {
  cmd->add_option("--N,--degree", cfg.degree, "truncation degree of the expansion");
  cmd->add_option("--nt", cfg.n_theta, "polar (Gauss) node count");
  cmd->add_option("--np", cfg.n_phi, "azimuthal node count (default 2*nt)");
}

void add_energy_options(CLI::App* cmd, vesicle::RunConfig& cfg) {
  cmd->add_option("--kappa-c", cfg.kappa_c, "bending modulus");
  cmd->add_option("--kappa-g", cfg.kappa_g, "Gaussian modulus (additive constant)");
  cmd->add_option("--c0", cfg.c0, "spontaneous curvature");
  cmd->add_option("--ks", cfg.k_s, "area penalty weight");
  cmd->add_option("--kv", cfg.k_v, "volume penalty weight");
}

void add_optimizer_options(CLI::App* cmd, vesicle::RunConfig& cfg) {
  cmd->add_option("--eps-g", cfg.eps_g, "gradient-change stop tolerance");
  cmd->add_option("--eps-a", cfg.eps_a, "mode-change stop tolerance");
  cmd->add_option("--max-iters", cfg.max_iters, "iteration cap");
  cmd->add_option("--ls-eps", cfg.ls_eps, "line-search bracket tolerance");
  cmd->add_option("--ls-max-iters", cfg.ls_max_iters, "line-search iteration cap");
  cmd->add_flag("--beta-verbatim", cfg.beta_verbatim,
                "disable the beta >= 0 restart safeguard (verbatim Hestenes-Stiefel)");
  cmd->add_option("--perturb-mode", cfg.perturb_mode,
                  "flat mode index of the deterministic initial bump");
  cmd->add_option("--perturb-amp", cfg.perturb_amp, "initial perturbation amplitude");
  cmd->add_option("--seed", cfg.seed,
                  "nonzero: random initial perturbation on all degree >= 1 modes");
  cmd->add_option("--fine-nt", cfg.fine_n_theta, "node count for the final energy re-evaluation");
}

void add_output_options(CLI::App* cmd, vesicle::RunConfig& cfg) {
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_flag("--obj", cfg.write_obj, "also write surface.obj");
}

std::vector<double> parse_v_values(const std::string& list, double from, double to, double step) {
  std::vector<double> vs;
  if (!list.empty()) {
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) vs.push_back(std::stod(item));
    }
    return vs;
  }
  if (step > 0 && to >= from) {
    for (double v = from; v <= to + 1e-12; v += step) vs.push_back(std::min(v, to));
  }
  return vs;
}

}  // namespace

int main(int argc, char** argv) {
  vesicle::RunConfig cfg;

  // A JSON config file seeds the defaults; explicit flags override it.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
    if (!path.empty()) {
      try {
        vesicle::apply_config_json(cfg, path);
      } catch (const std::exception& e) {
        std::cerr << "error (config): " << e.what() << "\n";
        return 1;
      }
    }
  }

  CLI::App app{"equilibrium lipid-vesicle shapes from surface-harmonic expansions"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)")
      ->expected(1);

  auto* minimize = app.add_subcommand("minimize", "minimize the constrained bending energy");
  minimize->add_option("--v", cfg.v_target, "target reduced volume");
  add_grid_options(minimize, cfg);
  add_energy_options(minimize, cfg);
  add_optimizer_options(minimize, cfg);
  add_output_options(minimize, cfg);

  auto* sweep = app.add_subcommand("sweep", "minimize across a list of reduced volumes");
  std::string v_list_str;
  double v_from = 0, v_to = -1, v_step = 0;
  sweep->add_option("--v-list", v_list_str, "comma-separated reduced volumes");
  sweep->add_option("--v-from", v_from, "range start");
  sweep->add_option("--v-to", v_to, "range end (inclusive)");
  sweep->add_option("--v-step", v_step, "range step");
  add_grid_options(sweep, cfg);
  add_energy_options(sweep, cfg);
  add_optimizer_options(sweep, cfg);
  add_output_options(sweep, cfg);

  auto* reconstruct = app.add_subcommand("reconstruct", "project a target surface onto the basis");
  reconstruct->add_option("--target", cfg.target, "rbc | csv");
  reconstruct->add_option("--w217", cfg.blend_w217, "blend weight on the tonicity-217 row");
  reconstruct->add_option("--profile", cfg.profile_path, "CSV profile file (x,h header)");
  add_grid_options(reconstruct, cfg);
  add_energy_options(reconstruct, cfg);
  add_output_options(reconstruct, cfg);

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the gradient");
  gradcheck->add_option("--seed", cfg.seed, "seed for the random configuration");
  gradcheck->add_option("--step", cfg.fd_step, "central-difference step");
  add_grid_options(gradcheck, cfg);
  add_energy_options(gradcheck, cfg);
  add_output_options(gradcheck, cfg);

  auto* export_mesh = app.add_subcommand("export-mesh", "OBJ mesh from a coefficients file");
  export_mesh->add_option("--coeffs", cfg.coeffs_path, "coefficients JSON")->required();
  add_grid_options(export_mesh, cfg);
  add_output_options(export_mesh, cfg);

  CLI11_PARSE(app, argc, argv);

  if (minimize->parsed()) cfg.command = "minimize";
  if (sweep->parsed()) {
    cfg.command = "sweep";
    try {
      const auto vs = parse_v_values(v_list_str, v_from, v_to, v_step);
      if (!vs.empty()) cfg.v_list = vs;
    } catch (const std::exception& e) {
      std::cerr << "error (config): bad reduced-volume list: " << e.what() << "\n";
      return 1;
    }
  }
  if (reconstruct->parsed()) cfg.command = "reconstruct";
  if (gradcheck->parsed()) cfg.command = "gradcheck";
  if (export_mesh->parsed()) cfg.command = "export-mesh";

  return vesicle::run(cfg);
}
