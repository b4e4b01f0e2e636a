#include "obj_export.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "vesicle/quadrature.hpp"

namespace vesicle {

namespace {

void emit_vertex(std::ostream& out, double x, double y, double z) {
  // math frame (polar axis +z) -> OBJ Y-up right-handed
  char buf[96];
  std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", x, z, -y);
  out << buf;
}

}  // namespace

void write_surface_obj(std::ostream& out, const SurfaceCoefficients<double>& coeffs, int n_theta,
                       int n_phi) {
  const auto grid = build_grid<double>(n_theta, n_phi);
  const auto rf = eval_radius_field(coeffs, grid);

  out << "# star-shaped surface from a surface-harmonic expansion, degree " << coeffs.degree
      << "\n";
  for (int k = 0; k < n_theta; ++k) {
    const double st = grid.sin_thetas[grid.node(k, 0)];
    const double ct = grid.cos_thetas[grid.node(k, 0)];
    for (int l = 0; l < n_phi; ++l) {
      const double r = rf.r[grid.node(k, l)];
      emit_vertex(out, r * st * std::cos(grid.phis[l]), r * st * std::sin(grid.phis[l]), r * ct);
    }
  }
  const double r_north = radius_value_at(coeffs, 0.0, 0.0);
  const double r_south = radius_value_at(coeffs, M_PI, 0.0);
  emit_vertex(out, 0.0, 0.0, r_north);
  emit_vertex(out, 0.0, 0.0, -r_south);

  auto vid = [n_phi](int k, int l) { return k * n_phi + (l % n_phi) + 1; };  // 1-based
  const int north = n_theta * n_phi + 1;
  const int south = n_theta * n_phi + 2;

  for (int l = 0; l < n_phi; ++l) {
    out << "f " << north << ' ' << vid(0, l) << ' ' << vid(0, l + 1) << "\n";
  }
  for (int k = 0; k + 1 < n_theta; ++k) {
    for (int l = 0; l < n_phi; ++l) {
      out << "f " << vid(k, l) << ' ' << vid(k + 1, l) << ' ' << vid(k + 1, l + 1) << "\n";
      out << "f " << vid(k, l) << ' ' << vid(k + 1, l + 1) << ' ' << vid(k, l + 1) << "\n";
    }
  }
  for (int l = 0; l < n_phi; ++l) {
    out << "f " << south << ' ' << vid(n_theta - 1, l + 1) << ' ' << vid(n_theta - 1, l) << "\n";
  }
}

}  // namespace vesicle
