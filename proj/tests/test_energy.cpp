#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vesicle/energy.hpp"
#include "vesicle/geometry.hpp"
#include "vesicle/ncg.hpp"
#include "vesicle/quadrature.hpp"

using namespace vesicle;

namespace {

SurfaceCoefficients<double> random_surface(int degree, unsigned seed, double amplitude) {
  auto coeffs = sphere_coefficients(1.0, degree);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  for (int i = 1; i < coeffs.size(); ++i) coeffs.a[i] += dist(rng);
  return coeffs;
}

Eigen::ArrayXd omega_of(const SurfaceCoefficients<double>& coeffs, const SphereGrid<double>& grid) {
  return eval_geometry_field(eval_radius_field(coeffs, grid), grid).omega;
}

Eigen::ArrayXd mean_curvature_of(const SurfaceCoefficients<double>& coeffs,
                                 const SphereGrid<double>& grid) {
  return eval_geometry_field(eval_radius_field(coeffs, grid), grid).H;
}

EnergyParams<double> plain_bending() {
  EnergyParams<double> p;
  p.k_s = 0;
  p.k_v = 0;
  return p;
}

}  // namespace

TEST_CASE("sphere bending energy closed forms") {
  const auto grid = build_grid<double>(16, 32);
  const auto rf = eval_radius_field(sphere_coefficients(1.0, 4), grid);
  const auto gf = eval_geometry_field(rf, grid);

  EnergyParams<double> p = plain_bending();
  CHECK(bending_energy(gf, grid, p) == doctest::Approx(8 * M_PI).epsilon(1e-12));

  // c0 = -2 cancels 2H = -2 exactly under the H = -1 sphere convention
  p.c0 = -2.0;
  CHECK(std::abs(bending_energy(gf, grid, p)) < 1e-10);

  p.c0 = 0.0;
  p.kappa_g = 2.5;
  CHECK(bending_energy(gf, grid, p) ==
        doctest::Approx(8 * M_PI + 4 * M_PI * 2.5).epsilon(1e-12));
}

TEST_CASE("penalized total energy on spheres") {
  const auto grid = build_grid<double>(16, 32);
  const auto coeffs = sphere_coefficients(1.0, 4);

  EnergyParams<double> matched;  // defaults target the unit sphere
  const auto rep = total_energy(coeffs, grid, matched);
  CHECK(rep.e_total == doctest::Approx(8 * M_PI).epsilon(1e-10));
  CHECK(rep.e_bend == doctest::Approx(8 * M_PI).epsilon(1e-10));
  CHECK(rep.s_area == doctest::Approx(4 * M_PI).epsilon(1e-12));
  CHECK(rep.volume == doctest::Approx(4 * M_PI / 3).epsilon(1e-12));
  CHECK(rep.reduced_v == doctest::Approx(1.0).epsilon(1e-12));

  EnergyParams<double> squeezed = matched;
  squeezed.k_s = 1000.0;
  squeezed.k_v = 100.0;
  squeezed.v_bar = 0.9 * (4 * M_PI / 3);
  const auto rep2 = total_energy(coeffs, grid, squeezed);
  const double expected = 8 * M_PI + 50.0 * std::pow(0.1 * 4 * M_PI / 3, 2);
  CHECK(rep2.e_total == doctest::Approx(expected).epsilon(1e-12));

  // penalties only add
  const auto coeffs_r = random_surface(4, 31, 0.08);
  EnergyParams<double> active;
  active.v_bar = 0.8 * (4 * M_PI / 3);
  const auto table = build_basis_table(grid, 4);
  const auto rep3 = total_energy(coeffs_r, table, grid, active);
  CHECK(rep3.e_total >= rep3.e_bend);
}

TEST_CASE("variation fields: constant mode on the unit sphere") {
  const auto grid = build_grid<double>(12, 24);
  const auto coeffs = sphere_coefficients(1.0, 2);
  const auto rf = eval_radius_field(coeffs, grid);
  const auto vf = variation_fields(mode_from_flat(0), grid, rf);

  const double f00 = normalization_factor(0, 0);
  CHECK((vf.dr - f00).abs().maxCoeff() < 1e-14);
  CHECK(vf.dr_theta.abs().maxCoeff() < 1e-14);
  CHECK(vf.dr_phi.abs().maxCoeff() < 1e-14);

  // oracle: central difference of omega in the coefficient (step 1e-7).
  // On the sphere family omega = r^2 sin(theta), so this is 2 sin(theta) f00.
  const double eps = 1e-7;
  auto plus = coeffs, minus = coeffs;
  plus.a[0] += eps;
  minus.a[0] -= eps;
  const Eigen::ArrayXd fd = (omega_of(plus, grid) - omega_of(minus, grid)) / (2 * eps);
  CHECK((vf.domega - fd).abs().maxCoeff() < 1e-7);
  CHECK((vf.domega - 2.0 * f00 * grid.sin_thetas).abs().maxCoeff() < 1e-12);
}

TEST_CASE("variation fields: phi-phi identity") {
  const auto grid = build_grid<double>(10, 20);
  const auto coeffs = random_surface(3, 8, 0.05);
  const auto rf = eval_radius_field(coeffs, grid);
  for (int i : {0, 2, 5, 8, 12}) {
    const auto mode = mode_from_flat(i);
    const auto vf = variation_fields(mode, grid, rf);
    const double m2 = double(mode.m) * double(mode.m);
    CHECK((vf.dr_phiphi + m2 * vf.dr).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("variation of omega matches finite differences on random surfaces") {
  const auto grid = build_grid<double>(10, 20);
  const auto coeffs = random_surface(4, 77, 0.08);
  const auto rf = eval_radius_field(coeffs, grid);
  const double eps = 1e-7;
  for (int i : {0, 1, 4, 7, 13, 20, 24}) {
    const auto vf = variation_fields(mode_from_flat(i), grid, rf);
    auto plus = coeffs, minus = coeffs;
    plus.a[i] += eps;
    minus.a[i] -= eps;
    const Eigen::ArrayXd fd = (omega_of(plus, grid) - omega_of(minus, grid)) / (2 * eps);
    for (int node = 0; node < grid.node_count(); ++node) {
      CHECK(std::abs(vf.domega[node] - fd[node]) <= 1e-6 * std::max(1.0, std::abs(fd[node])));
    }
  }
}

TEST_CASE("mean curvature variation: sphere constant mode") {
  const auto grid = build_grid<double>(12, 24);
  const auto coeffs = sphere_coefficients(1.0, 2);
  const auto rf = eval_radius_field(coeffs, grid);
  const auto gf = eval_geometry_field(rf, grid);
  const auto dh = mean_curvature_variation(mode_from_flat(0), rf, gf, grid);
  // H = -1/r on concentric spheres, so dH = +f00 per unit coefficient
  const double f00 = normalization_factor(0, 0);
  CHECK((dh - f00).abs().maxCoeff() < 1e-11);
}

TEST_CASE("mean curvature variation: sine modes vanish on the symmetry meridian") {
  const auto grid = build_grid<double>(12, 24);
  auto coeffs = sphere_coefficients(1.0, 3);
  coeffs.a[flat_from_nm(2, 0)] = 0.12;  // axisymmetric base
  const auto rf = eval_radius_field(coeffs, grid);
  const auto gf = eval_geometry_field(rf, grid);
  const auto dh = mean_curvature_variation(ModeIndex{flat_from_nm(2, -1), 2, -1}, rf, gf, grid);
  for (int k = 0; k < grid.n_theta(); ++k) {
    CHECK(std::abs(dh[grid.node(k, 0)]) < 1e-12);  // phi = 0 column
  }
}

TEST_CASE("mean curvature variation matches finite differences") {
  const auto grid = build_grid<double>(10, 20);
  const auto coeffs = random_surface(4, 55, 0.08);
  const auto rf = eval_radius_field(coeffs, grid);
  const auto gf = eval_geometry_field(rf, grid);
  const double eps = 1e-6;
  for (int i : {0, 3, 6, 11, 17, 23}) {
    const auto dh = mean_curvature_variation(mode_from_flat(i), rf, gf, grid);
    auto plus = coeffs, minus = coeffs;
    plus.a[i] += eps;
    minus.a[i] -= eps;
    const Eigen::ArrayXd fd =
        (mean_curvature_of(plus, grid) - mean_curvature_of(minus, grid)) / (2 * eps);
    for (int node = 0; node < grid.node_count(); ++node) {
      CHECK(std::abs(dh[node] - fd[node]) <= 1e-6 * std::max(1.0, std::abs(fd[node])));
    }
  }
}

TEST_CASE("gradient vanishes on the matched sphere") {
  const auto grid = build_grid<double>(16, 32);
  const auto coeffs = sphere_coefficients(1.0, 4);
  const auto table = build_basis_table(grid, 4);
  EnergyParams<double> p;  // matched targets, penalties on
  const auto grad = energy_gradient(coeffs, table, grid, p);
  CHECK(grad.norm() < 1e-8);
}

TEST_CASE("volume penalty term: constant-mode integral") {
  const auto grid = build_grid<double>(12, 24);
  const auto coeffs = sphere_coefficients(1.0, 2);
  const auto table = build_basis_table(grid, 2);
  const double volume = 4 * M_PI / 3;

  EnergyParams<double> with;
  with.k_s = 0;
  with.k_v = 1.0;
  with.v_bar = volume - 1.0;  // unit volume excess
  EnergyParams<double> without = with;
  without.k_v = 0.0;

  const auto g_with = energy_gradient(coeffs, table, grid, with);
  const auto g_without = energy_gradient(coeffs, table, grid, without);
  CHECK((g_with - g_without)[0] == doctest::Approx(std::sqrt(4 * M_PI)).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches finite differences") {
  const auto grid = build_grid<double>(10, 20);
  EnergyParams<double> p;
  p.v_bar = 0.9 * (4 * M_PI / 3);
  for (unsigned seed : {101u, 202u, 303u}) {
    const auto coeffs = random_surface(4, seed, 0.1);
    const auto check = fd_gradient_check(coeffs, grid, p, 1e-6);
    CHECK(check.passes());
  }
}

TEST_CASE("bending energy is scale invariant at zero spontaneous curvature") {
  const auto grid = build_grid<double>(16, 32);
  const auto coeffs = random_surface(4, 12, 0.08);
  const auto p = plain_bending();
  const auto gf = eval_geometry_field(eval_radius_field(coeffs, grid), grid);
  const double base = bending_energy(gf, grid, p);
  CHECK(base >= 0.0);  // the integrand is a square at c0 = 0
  for (double lambda : {0.5, 2.0, 10.0}) {
    SurfaceCoefficients<double> scaled = coeffs;
    scaled.a *= lambda;
    const auto gf_s = eval_geometry_field(eval_radius_field(scaled, grid), grid);
    CHECK(bending_energy(gf_s, grid, p) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("Gaussian modulus never enters the gradient") {
  const auto grid = build_grid<double>(10, 20);
  const auto coeffs = random_surface(4, 4, 0.08);
  const auto table = build_basis_table(grid, 4);
  EnergyParams<double> p0;
  EnergyParams<double> p1 = p0;
  p1.kappa_g = 2.5;
  const auto g0 = energy_gradient(coeffs, table, grid, p0);
  const auto g1 = energy_gradient(coeffs, table, grid, p1);
  CHECK((g0 - g1).norm() == 0.0);
}

TEST_CASE("double and long double instantiations agree") {
  const auto grid_d = build_grid<double>(10, 20);
  const auto grid_l = build_grid<long double>(10, 20);
  auto coeffs_d = sphere_coefficients(1.0, 3);
  coeffs_d.a[flat_from_nm(2, 0)] = 0.1;
  coeffs_d.a[flat_from_nm(3, 2)] = -0.04;
  SurfaceCoefficients<long double> coeffs_l(3);
  for (int i = 0; i < coeffs_d.size(); ++i) coeffs_l.a[i] = coeffs_d.a[i];

  EnergyParams<double> p_d;
  EnergyParams<long double> p_l;
  const auto rep_d = total_energy(coeffs_d, grid_d, p_d);
  const auto rep_l = total_energy(coeffs_l, grid_l, p_l);
  CHECK(rep_d.e_total == doctest::Approx(double(rep_l.e_total)).epsilon(1e-13));
  CHECK(rep_d.s_area == doctest::Approx(double(rep_l.s_area)).epsilon(1e-13));
  CHECK(rep_d.volume == doctest::Approx(double(rep_l.volume)).epsilon(1e-13));
  CHECK(rep_d.grad_norm == doctest::Approx(double(rep_l.grad_norm)).epsilon(1e-10));
}

TEST_CASE("penalty energy is linear in the weight") {
  const auto grid = build_grid<double>(10, 20);
  const auto coeffs = random_surface(4, 9, 0.08);
  const auto table = build_basis_table(grid, 4);
  EnergyParams<double> p;
  p.k_v = 0;
  p.k_s = 0;
  const auto rep0 = total_energy(coeffs, table, grid, p);
  p.k_s = 1;
  const auto rep1 = total_energy(coeffs, table, grid, p);
  const double ds = rep0.s_area - p.s_bar;
  CHECK(rep1.e_total - rep0.e_total == doctest::Approx(0.5 * ds * ds).epsilon(1e-12));
}
