#pragma once

#include <string>
#include <vector>

#include "vesicle/geometry.hpp"

namespace vesicle {

/// One CLI invocation, fully resolved.  Negative resolution fields mean
/// "pick from the reduced-volume cutoff policy" (degree 4 with 20 theta
/// nodes for 0.75 <= v <= 1, degree 6 with 30 for 0.65 <= v < 0.75); n_phi
/// defaults to 2 * n_theta.
struct RunConfig {
  std::string command;  // minimize | sweep | reconstruct | gradcheck | export-mesh

  int degree = -1;
  int n_theta = -1;
  int n_phi = -1;

  double kappa_c = 1.0;
  double kappa_g = 0.0;
  double c0 = 0.0;
  double k_s = 4000.0;
  double k_v = 4000.0;

  double v_target = 1.0;
  std::vector<double> v_list;  // sweep points
  double eps_g = 1e-6;
  double eps_a = 1e-6;
  int max_iters = 5000;
  double ls_eps = 1e-6;
  int ls_max_iters = 60;
  bool beta_verbatim = false;  // unclamped Hestenes-Stiefel beta
  int perturb_mode = 4;        // flat index of the deterministic bump (A_2^0)
  double perturb_amp = -0.05;  // negative seeds the oblate branch
  unsigned seed = 0;           // nonzero: seeded random perturbation instead
  int fine_n_theta = 64;       // final-energy re-evaluation grid

  double fd_step = 1e-6;  // gradcheck

  std::string target = "rbc";  // reconstruct: rbc | csv
  double blend_w217 = 0.5;     // weight on the tonicity-217 coefficients
  std::string profile_path;

  std::string coeffs_path;  // export-mesh input

  std::string out_dir = ".";
  bool write_obj = false;
};

/// Merge settings from a JSON config file into `cfg` (flags still override;
/// callers apply explicit flags afterwards).  Unknown keys are an error.
void apply_config_json(RunConfig& cfg, const std::string& path);

/// Execute one command, writing artifacts under cfg.out_dir.  Returns the
/// process exit code; failures also leave a machine-readable error.json.
int run(const RunConfig& cfg);

SurfaceCoefficients<double> load_coefficients_json(const std::string& path);
void save_coefficients_json(const std::string& path, const SurfaceCoefficients<double>& coeffs);

}  // namespace vesicle
