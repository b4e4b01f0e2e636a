#include "run.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include <json.hpp>

#include "obj_export.hpp"
#include "vesicle/energy.hpp"
#include "vesicle/errors.hpp"
#include "vesicle/ncg.hpp"
#include "vesicle/quadrature.hpp"
#include "vesicle/reconstruct.hpp"

namespace vesicle {

namespace {

using json = nlohmann::json;

// All floating output carries 17 significant digits so files re-ingest to
// the identical double.
std::string fp(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

class JsonLines {
public:
  void field(const std::string& key, const std::string& raw) {
    lines_.push_back(quoted(key) + ": " + raw);
  }
  void number(const std::string& key, double v) { field(key, fp(v)); }
  void integer(const std::string& key, long long v) { field(key, std::to_string(v)); }
  void text(const std::string& key, const std::string& v) { field(key, quoted(v)); }
  void boolean(const std::string& key, bool v) { field(key, v ? "true" : "false"); }

  std::string str() const {
    std::string out = "{\n";
    for (size_t i = 0; i < lines_.size(); ++i) {
      out += "  " + lines_[i] + (i + 1 < lines_.size() ? ",\n" : "\n");
    }
    out += "}\n";
    return out;
  }

private:
  std::vector<std::string> lines_;
};

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out_dir) / name;
}

void write_error_json(const RunConfig& cfg, const std::string& kind, const std::string& message,
                      const std::vector<int>& nodes = {}) {
  JsonLines j;
  j.text("error", kind);
  j.text("message", message);
  if (!nodes.empty()) {
    std::string arr = "[";
    for (size_t i = 0; i < nodes.size(); ++i) {
      arr += std::to_string(nodes[i]) + (i + 1 < nodes.size() ? ", " : "");
    }
    arr += "]";
    j.field("nodes", arr);
  }
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  write_text(out_path(cfg, "error.json"), j.str());
  std::cerr << "error (" << kind << "): " << message << "\n";
}

// Reduced-volume cutoff policy for default resolution.
void resolve_resolution(RunConfig& cfg, double v) {
  if (cfg.degree < 0) cfg.degree = (v >= 0.75) ? 4 : (v >= 0.65 ? 6 : 8);
  if (cfg.n_theta < 0) cfg.n_theta = (v >= 0.75) ? 20 : (v >= 0.65 ? 30 : 40);
  if (cfg.n_phi < 0) cfg.n_phi = 2 * cfg.n_theta;
}

EnergyParams<double> energy_params(const RunConfig& cfg) {
  EnergyParams<double> p;
  p.kappa_c = cfg.kappa_c;
  p.kappa_g = cfg.kappa_g;
  p.c0 = cfg.c0;
  p.k_s = cfg.k_s;
  p.k_v = cfg.k_v;
  return p;
}

NcgConfig<double> ncg_config(const RunConfig& cfg) {
  NcgConfig<double> c;
  c.eps_g = cfg.eps_g;
  c.eps_a = cfg.eps_a;
  c.max_iters = cfg.max_iters;
  c.ls_eps = cfg.ls_eps;
  c.ls_max_iters = cfg.ls_max_iters;
  c.beta_floor_at_zero = !cfg.beta_verbatim;
  return c;
}

SurfaceCoefficients<double> initial_coefficients(const RunConfig& cfg) {
  auto coeffs = sphere_coefficients(1.0, cfg.degree);
  if (cfg.seed != 0) {
    std::mt19937 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-cfg.perturb_amp, cfg.perturb_amp);
    for (int i = 1; i < coeffs.size(); ++i) coeffs.a[i] += dist(rng);
  } else {
    if (cfg.perturb_mode < 0 || cfg.perturb_mode >= coeffs.size()) {
      throw std::invalid_argument("perturb_mode outside the coefficient range");
    }
    coeffs.a[cfg.perturb_mode] += cfg.perturb_amp;
  }
  return coeffs;
}

std::string trace_csv(const IterationTrace<double>& trace) {
  std::string out = "k,energy,grad_norm,alpha,beta,area,volume,reduced_volume\n";
  for (const auto& row : trace) {
    out += std::to_string(row.k) + "," + fp(row.energy) + "," + fp(row.grad_norm) + "," +
           fp(row.alpha) + "," + fp(row.beta) + "," + fp(row.area) + "," + fp(row.volume) + "," +
           fp(row.reduced_v) + "\n";
  }
  return out;
}

struct MinimizeOutcome {
  NcgResult<double> result;
  EnergyReport<double> fine;
  double e_over_e0 = 0;
  double e_over_e0_fine = 0;
  double residual_area = 0;
  double residual_volume = 0;
  EnergyParams<double> params;
};

MinimizeOutcome minimize_once(const RunConfig& cfg, double v_target) {
  RunConfig local = cfg;
  resolve_resolution(local, v_target);

  const auto grid = build_grid<double>(local.n_theta, local.n_phi);
  auto coeffs0 = initial_coefficients(local);

  auto params = energy_params(local);
  // Targets come from the unperturbed sphere: its area, and the volume of
  // the equal-area sphere scaled by the requested reduced volume.
  const double r0 = coeffs0.a[0] / std::sqrt(4.0 * M_PI);
  params.s_bar = 4.0 * M_PI * r0 * r0;
  params.v_bar = v_target * (4.0 * M_PI / 3.0) * std::pow(params.s_bar / (4.0 * M_PI), 1.5);

  MinimizeOutcome out;
  out.params = params;
  out.result = ncg_minimize(coeffs0, grid, params, ncg_config(local));

  const auto fine_grid = build_grid<double>(local.fine_n_theta, 2 * local.fine_n_theta);
  out.fine = total_energy(out.result.coeffs, fine_grid, params);

  const double e0 = 8.0 * M_PI * params.kappa_c;
  out.e_over_e0 = out.result.report.e_bend / e0;
  out.e_over_e0_fine = out.fine.e_bend / e0;
  out.residual_area = std::abs(out.result.report.s_area - params.s_bar) / params.s_bar;
  out.residual_volume = std::abs(out.result.report.volume - params.v_bar) / params.v_bar;
  return out;
}

int run_minimize(const RunConfig& cfg) {
  RunConfig local = cfg;
  resolve_resolution(local, cfg.v_target);
  const auto out = minimize_once(local, cfg.v_target);

  JsonLines j;
  j.text("command", "minimize");
  j.number("v_target", cfg.v_target);
  j.integer("degree", local.degree);
  j.integer("n_theta", local.n_theta);
  j.integer("n_phi", local.n_phi);
  j.number("kappa_c", local.kappa_c);
  j.number("kappa_g", local.kappa_g);
  j.number("c0", local.c0);
  j.number("k_s", local.k_s);
  j.number("k_v", local.k_v);
  j.number("s_bar", out.params.s_bar);
  j.number("v_bar", out.params.v_bar);
  j.number("e_bend", out.result.report.e_bend);
  j.number("e_total", out.result.report.e_total);
  j.number("e_over_e0", out.e_over_e0);
  j.number("s_area", out.result.report.s_area);
  j.number("volume", out.result.report.volume);
  j.number("reduced_v", out.result.report.reduced_v);
  j.number("grad_norm", out.result.report.grad_norm);
  j.integer("fine_n_theta", local.fine_n_theta);
  j.number("fine_e_bend", out.fine.e_bend);
  j.number("fine_e_over_e0", out.e_over_e0_fine);
  j.number("fine_s_area", out.fine.s_area);
  j.number("fine_volume", out.fine.volume);
  j.number("fine_reduced_v", out.fine.reduced_v);
  j.number("coarse_fine_gap_rel",
           std::abs(out.e_over_e0 - out.e_over_e0_fine) / out.e_over_e0_fine);
  j.number("residual_area_rel", out.residual_area);
  j.number("residual_volume_rel", out.residual_volume);
  j.integer("iterations", out.result.iterations);
  j.text("stop_reason", to_string(out.result.stop));
  write_text(out_path(cfg, "summary.json"), j.str());

  save_coefficients_json(out_path(cfg, "coeffs.json").string(), out.result.coeffs);
  write_text(out_path(cfg, "trace.csv"), trace_csv(out.result.trace));
  if (cfg.write_obj) {
    std::ofstream obj(out_path(cfg, "surface.obj"));
    write_surface_obj(obj, out.result.coeffs, local.n_theta, local.n_phi);
  }

  if (out.result.stop == StopReason::LineSearchFailure) {
    write_error_json(cfg, "line_search_failure",
                     "line search found no energy decrease; best iterate written");
    return 3;
  }
  return 0;
}

int run_sweep(const RunConfig& cfg) {
  if (cfg.v_list.empty()) {
    throw std::invalid_argument("sweep needs a nonempty reduced-volume list");
  }
  std::string csv =
      "v_target,v_final,e_over_e0,e_over_e0_coarse,e_bend,area,volume,iterations,stop_reason,"
      "degree,n_theta\n";
  bool any_ls_failure = false;
  for (size_t idx = 0; idx < cfg.v_list.size(); ++idx) {
    const double v = cfg.v_list[idx];
    RunConfig point = cfg;
    if (point.seed != 0) point.seed = cfg.seed + static_cast<unsigned>(idx);
    resolve_resolution(point, v);
    const auto out = minimize_once(point, v);
    any_ls_failure = any_ls_failure || out.result.stop == StopReason::LineSearchFailure;
    csv += fp(v) + "," + fp(out.fine.reduced_v) + "," + fp(out.e_over_e0_fine) + "," +
           fp(out.e_over_e0) + "," + fp(out.fine.e_bend) + "," + fp(out.fine.s_area) + "," +
           fp(out.fine.volume) + "," + std::to_string(out.result.iterations) + "," +
           to_string(out.result.stop) + "," + std::to_string(point.degree) + "," +
           std::to_string(point.n_theta) + "\n";
  }
  write_text(out_path(cfg, "sweep.csv"), csv);

  JsonLines j;
  j.text("command", "sweep");
  j.integer("points", static_cast<long long>(cfg.v_list.size()));
  j.text("csv", "sweep.csv");
  write_text(out_path(cfg, "summary.json"), j.str());

  if (any_ls_failure) {
    write_error_json(cfg, "line_search_failure", "at least one sweep point ended in line search "
                                                 "failure; see sweep.csv stop_reason column");
    return 3;
  }
  return 0;
}

std::unique_ptr<TargetSurface<double>> make_target(const RunConfig& cfg) {
  if (cfg.target == "csv") {
    if (cfg.profile_path.empty()) {
      throw std::invalid_argument("csv target needs --profile <file>");
    }
    auto profile =
        std::make_shared<SplineProfile<double>>(load_profile_csv<double>(cfg.profile_path));
    return std::make_unique<RevolvedProfileSurface<double>>(profile,
                                                            "profile:" + cfg.profile_path);
  }
  if (cfg.target == "rbc") {
    const auto params =
        blend_rbc(rbc_tonicity_300<double>(), rbc_tonicity_217<double>(), cfg.blend_w217);
    auto profile = std::make_shared<RbcProfile<double>>(params);
    std::ostringstream tag;
    tag << "rbc:w217=" << cfg.blend_w217;
    return std::make_unique<RevolvedProfileSurface<double>>(profile, tag.str());
  }
  throw std::invalid_argument("unknown reconstruction target: " + cfg.target);
}

int run_reconstruct(const RunConfig& cfg) {
  RunConfig local = cfg;
  if (local.degree < 0) local.degree = 4;
  if (local.n_theta < 0) local.n_theta = 230;
  if (local.n_phi < 0) local.n_phi = 2 * local.n_theta;

  const auto target = make_target(local);
  const auto grid = build_grid<double>(local.n_theta, local.n_phi);
  const auto coeffs = project_coefficients(*target, local.degree, grid);
  const auto errors = reconstruction_errors(*target, coeffs, grid, energy_params(local));

  JsonLines j;
  j.text("command", "reconstruct");
  j.text("target", target->provenance());
  j.integer("degree", local.degree);
  j.integer("n_theta", local.n_theta);
  j.integer("n_phi", local.n_phi);
  j.number("e_rms", errors.e_rms);
  j.number("e_ms", errors.e_ms);
  j.number("e_vol", errors.e_vol);
  j.number("e_sa", errors.e_sa);
  j.number("e_eng", errors.e_eng);
  write_text(out_path(cfg, "summary.json"), j.str());

  save_coefficients_json(out_path(cfg, "coeffs.json").string(), coeffs);
  if (cfg.write_obj) {
    std::ofstream obj(out_path(cfg, "surface.obj"));
    write_surface_obj(obj, coeffs, 64, 128);
  }
  return 0;
}

int run_gradcheck(const RunConfig& cfg) {
  RunConfig local = cfg;
  if (local.degree < 0) local.degree = 4;
  if (local.n_theta < 0) local.n_theta = 20;
  if (local.n_phi < 0) local.n_phi = 2 * local.n_theta;

  // The differencing runs in extended precision so the oracle's rounding
  // noise stays far below the acceptance gates; the analytic formulas are
  // the same templates the double path runs.
  auto coeffs = sphere_coefficients<long double>(1.0L, local.degree);
  std::mt19937 rng(local.seed);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (int i = 0; i < coeffs.size(); ++i) coeffs.a[i] += static_cast<long double>(dist(rng));

  const auto grid = build_grid<long double>(local.n_theta, local.n_phi);
  EnergyParams<long double> params;
  params.kappa_c = local.kappa_c;
  params.kappa_g = local.kappa_g;
  params.c0 = local.c0;
  params.k_s = local.k_s;
  params.k_v = local.k_v;
  const auto check =
      fd_gradient_check(coeffs, grid, params, static_cast<long double>(local.fd_step));
  const bool ok = check.passes();

  JsonLines j;
  j.text("command", "gradcheck");
  j.integer("degree", local.degree);
  j.integer("n_theta", local.n_theta);
  j.integer("n_phi", local.n_phi);
  j.integer("seed", local.seed);
  j.number("fd_step", local.fd_step);
  j.number("max_rel_error", static_cast<double>(check.max_rel()));
  j.number("max_abs_error", static_cast<double>(check.abs_err.maxCoeff()));
  j.boolean("passes", ok);
  write_text(out_path(cfg, "summary.json"), j.str());

  std::cout << "gradcheck: max relative error " << fp(static_cast<double>(check.max_rel()))
            << " over " << coeffs.size() << " modes -> " << (ok ? "pass" : "FAIL") << "\n";
  return ok ? 0 : 4;
}

int run_export_mesh(const RunConfig& cfg) {
  if (cfg.coeffs_path.empty()) {
    throw std::invalid_argument("export-mesh needs --coeffs <coeffs.json>");
  }
  RunConfig local = cfg;
  if (local.n_theta < 0) local.n_theta = 64;
  if (local.n_phi < 0) local.n_phi = 2 * local.n_theta;

  const auto coeffs = load_coefficients_json(local.coeffs_path);
  std::ofstream obj(out_path(cfg, "surface.obj"));
  if (!obj) throw std::runtime_error("cannot write surface.obj");
  write_surface_obj(obj, coeffs, local.n_theta, local.n_phi);
  return 0;
}

}  // namespace

void apply_config_json(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json doc = json::parse(in);
  for (const auto& [key, value] : doc.items()) {
    if (key == "command") cfg.command = value.get<std::string>();
    else if (key == "degree") cfg.degree = value.get<int>();
    else if (key == "n_theta") cfg.n_theta = value.get<int>();
    else if (key == "n_phi") cfg.n_phi = value.get<int>();
    else if (key == "kappa_c") cfg.kappa_c = value.get<double>();
    else if (key == "kappa_g") cfg.kappa_g = value.get<double>();
    else if (key == "c0") cfg.c0 = value.get<double>();
    else if (key == "k_s") cfg.k_s = value.get<double>();
    else if (key == "k_v") cfg.k_v = value.get<double>();
    else if (key == "v") cfg.v_target = value.get<double>();
    else if (key == "v_list") cfg.v_list = value.get<std::vector<double>>();
    else if (key == "eps_g") cfg.eps_g = value.get<double>();
    else if (key == "eps_a") cfg.eps_a = value.get<double>();
    else if (key == "max_iters") cfg.max_iters = value.get<int>();
    else if (key == "ls_eps") cfg.ls_eps = value.get<double>();
    else if (key == "ls_max_iters") cfg.ls_max_iters = value.get<int>();
    else if (key == "beta_verbatim") cfg.beta_verbatim = value.get<bool>();
    else if (key == "perturb_mode") cfg.perturb_mode = value.get<int>();
    else if (key == "perturb_amp") cfg.perturb_amp = value.get<double>();
    else if (key == "seed") cfg.seed = value.get<unsigned>();
    else if (key == "fine_n_theta") cfg.fine_n_theta = value.get<int>();
    else if (key == "fd_step") cfg.fd_step = value.get<double>();
    else if (key == "target") cfg.target = value.get<std::string>();
    else if (key == "blend_w217") cfg.blend_w217 = value.get<double>();
    else if (key == "profile") cfg.profile_path = value.get<std::string>();
    else if (key == "coeffs") cfg.coeffs_path = value.get<std::string>();
    else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
    else if (key == "obj") cfg.write_obj = value.get<bool>();
    else throw std::runtime_error("unknown config key: " + key);
  }
}

SurfaceCoefficients<double> load_coefficients_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open coefficients file: " + path);
  json doc = json::parse(in);
  const int degree = doc.at("degree").get<int>();
  const auto values = doc.at("a").get<std::vector<double>>();
  if (static_cast<int>(values.size()) != mode_count(degree)) {
    throw std::runtime_error("coefficients file length does not match degree");
  }
  SurfaceCoefficients<double> coeffs(degree);
  for (int i = 0; i < coeffs.size(); ++i) coeffs.a[i] = values[i];
  return coeffs;
}

void save_coefficients_json(const std::string& path, const SurfaceCoefficients<double>& coeffs) {
  std::string body = "{\n  \"degree\": " + std::to_string(coeffs.degree) +
                     ",\n  \"ordering\": \"flat surface-harmonic mode index\",\n  \"a\": [\n";
  for (int i = 0; i < coeffs.size(); ++i) {
    body += "    " + fp(coeffs.a[i]) + (i + 1 < coeffs.size() ? ",\n" : "\n");
  }
  body += "  ]\n}\n";
  write_text(path, body);
}

int run(const RunConfig& cfg) {
  try {
    std::filesystem::create_directories(cfg.out_dir);
    if (cfg.command == "minimize") return run_minimize(cfg);
    if (cfg.command == "sweep") return run_sweep(cfg);
    if (cfg.command == "reconstruct") return run_reconstruct(cfg);
    if (cfg.command == "gradcheck") return run_gradcheck(cfg);
    if (cfg.command == "export-mesh") return run_export_mesh(cfg);
    throw std::invalid_argument("unknown command: " + cfg.command);
  } catch (const GeometryError& e) {
    write_error_json(cfg, "geometry", e.what(), e.nodes());
    return 2;
  } catch (const DegenerateNodeError& e) {
    write_error_json(cfg, "degenerate_node", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    write_error_json(cfg, "config", e.what());
    return 1;
  } catch (const std::exception& e) {
    write_error_json(cfg, "runtime", e.what());
    return 1;
  }
}

}  // namespace vesicle
