#pragma once

#include <array>
#include <cmath>

#include <Eigen/Core>

#include "vesicle/geometry.hpp"
#include "vesicle/quadrature.hpp"

namespace vesicle {

/// Moduli, spontaneous curvature, and penalty setup for the constrained
/// bending energy.  The spontaneous curvature follows the orientation in
/// which a unit sphere has H = -1.
template <typename Scalar = double>
struct EnergyParams {
  Scalar kappa_c = 1;                       // bending modulus, > 0
  Scalar kappa_g = 0;                       // Gaussian modulus (enters as a constant)
  Scalar c0 = 0;                            // spontaneous curvature
  Scalar k_s = 4000;                        // area penalty weight
  Scalar k_v = 4000;                        // volume penalty weight
  Scalar s_bar = Scalar(4) * Scalar(M_PI);  // target area
  Scalar v_bar = Scalar(4) * Scalar(M_PI) / Scalar(3);  // target volume
};

template <typename Scalar = double>
struct EnergyReport {
  Scalar e_bend = 0;
  Scalar e_total = 0;
  Scalar s_area = 0;
  Scalar volume = 0;
  Scalar reduced_v = 0;
  Scalar grad_norm = 0;
};

/// Bending energy (kappa_c/2) * int (2H - c0)^2 dS, plus the topological
/// constant 4 pi kappa_g for genus 0 when kappa_g is nonzero.
template <typename Scalar>
Scalar bending_energy(const GeometryField<Scalar>& gf, const SphereGrid<Scalar>& grid,
                      const EnergyParams<Scalar>& params) {
  const auto integrand =
      (Scalar(2) * gf.H - params.c0).square() * gf.omega / grid.sin_thetas;
  Scalar e = Scalar(0.5) * params.kappa_c * integrate(grid, integrand);
  if (params.kappa_g != Scalar(0)) {
    e += Scalar(4) * Scalar(M_PI) * params.kappa_g;
  }
  return e;
}

template <typename Scalar>
Scalar penalty_energy(Scalar area, Scalar volume, const EnergyParams<Scalar>& params) {
  const Scalar ds = area - params.s_bar;
  const Scalar dv = volume - params.v_bar;
  return Scalar(0.5) * params.k_s * ds * ds + Scalar(0.5) * params.k_v * dv * dv;
}

// Index order for the six radius fields a variation can touch.
enum RadiusFieldIndex {
  kFieldR = 0,
  kFieldRTheta = 1,
  kFieldRPhi = 2,
  kFieldRThetaTheta = 3,
  kFieldRPhiPhi = 4,
  kFieldRThetaPhi = 5,
};

/// Per-node linear coefficients of the first variations of omega and H with
/// respect to the six radius fields: for any mode,
///   domega = sum_f w[f] * dfield_f   (f < 3; omega has no second-derivative deps)
///   dH     = sum_f h[f] * dfield_f.
/// The H chain runs through the variations of E, F, G, L, M, N and R.
template <typename Scalar = double>
struct VariationCoefficients {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  std::array<ArrayX, 3> w;
  std::array<ArrayX, 6> h;
};

template <typename Scalar>
VariationCoefficients<Scalar> variation_coefficients(const RadiusField<Scalar>& rf,
                                                     const GeometryField<Scalar>& gf,
                                                     const SphereGrid<Scalar>& grid) {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const ArrayX& st = grid.sin_thetas;
  const ArrayX& ct = grid.cos_thetas;
  const ArrayX& r = rf.r;
  const ArrayX& rt = rf.r_theta;
  const ArrayX& rp = rf.r_phi;
  const ArrayX& rtt = rf.r_thetatheta;
  const ArrayX& rpp = rf.r_phiphi;
  const ArrayX& rtp = rf.r_thetaphi;

  VariationCoefficients<Scalar> vc;
  const ArrayX st2 = st.square();
  const ArrayX w = gf.R / r;  // sqrt(r_phi^2 + r_theta^2 sin^2 + r^2 sin^2)

  // dR = domega: coefficients on (dr, dr_theta, dr_phi)
  vc.w[kFieldR] = w + r.square() * st2 / w;
  vc.w[kFieldRTheta] = r * rt * st2 / w;
  vc.w[kFieldRPhi] = r * rp / w;

  // dH through the quotient rule on H = (E N + G L - 2 F M) / (2 (EG - F^2))
  const ArrayX d = gf.Eff * gf.G - gf.F.square();
  const ArrayX pe = gf.Nn / (Scalar(2) * d) - gf.H * gf.G / d;
  const ArrayX pf = (Scalar(2) * gf.H * gf.F - gf.M) / d;
  const ArrayX pg = gf.L / (Scalar(2) * d) - gf.H * gf.Eff / d;
  const ArrayX pl = gf.G / (Scalar(2) * d);
  const ArrayX pm = -gf.F / d;
  const ArrayX pn = gf.Eff / (Scalar(2) * d);

  const ArrayX inv_r_big = gf.R.inverse();
  const ArrayX s_r = st * inv_r_big;
  // dL, dM, dN all carry -(X/R) dR; collect the combined dR coefficient once
  const ArrayX qr = -(pl * gf.L + pm * gf.M + pn * gf.Nn) * inv_r_big;

  vc.h[kFieldR] = Scalar(2) * r * pe + Scalar(2) * r * st2 * pg + qr * vc.w[kFieldR] +
                  s_r * (Scalar(-2) * rt.square() + Scalar(2) * r * rtt - Scalar(3) * r.square()) * pl +
                  inv_r_big *
                      (Scalar(2) * st * rp * rt - Scalar(2) * st * r * rtp + Scalar(2) * ct * r * rp) *
                      pm +
                  s_r *
                      (Scalar(-3) * r.square() * st2 + Scalar(2) * r * rpp +
                       Scalar(2) * ct * st * r * rt - Scalar(2) * rp.square()) *
                      pn;
  vc.h[kFieldRTheta] = Scalar(2) * rt * pe + rp * pf + qr * vc.w[kFieldRTheta] +
                       s_r * (Scalar(-4) * r * rt) * pl +
                       inv_r_big * (Scalar(2) * st * r * rp) * pm +
                       s_r * (ct * st * r.square()) * pn;
  vc.h[kFieldRPhi] = rt * pf + Scalar(2) * rp * pg + qr * vc.w[kFieldRPhi] +
                     inv_r_big * (Scalar(2) * st * r * rt + ct * r.square()) * pm +
                     s_r * (Scalar(-4) * r * rp) * pn;
  vc.h[kFieldRThetaTheta] = s_r * r.square() * pl;
  vc.h[kFieldRPhiPhi] = s_r * r.square() * pn;
  vc.h[kFieldRThetaPhi] = inv_r_big * (-st * r.square()) * pm;
  return vc;
}

/// Per-node samples of one mode's basis function and partials over the grid
/// in field-index order (the variations of the six radius fields).
template <typename Scalar>
std::array<Eigen::Array<Scalar, Eigen::Dynamic, 1>, 6> basis_mode_fields(
    const ModeIndex& mode, const SphereGrid<Scalar>& grid) {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const int nn = grid.node_count();
  std::array<ArrayX, 6> fields;
  for (auto& f : fields) f.resize(nn);
  for (int k = 0; k < grid.n_theta(); ++k) {
    for (int l = 0; l < grid.n_phi(); ++l) {
      const int idx = grid.node(k, l);
      const BasisSample<Scalar> b = basis_sample(mode, grid.thetas[k], grid.phis[l]);
      fields[kFieldR][idx] = b.s;
      fields[kFieldRTheta][idx] = b.s_theta;
      fields[kFieldRPhi][idx] = b.s_phi;
      fields[kFieldRThetaTheta][idx] = b.s_thetatheta;
      fields[kFieldRPhiPhi][idx] = b.s_phiphi;
      fields[kFieldRThetaPhi][idx] = b.s_thetaphi;
    }
  }
  return fields;
}

/// First variations of the radius fields and of omega for one mode.
template <typename Scalar = double>
struct VariationFields {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  ArrayX dr, dr_theta, dr_phi, dr_thetatheta, dr_phiphi, dr_thetaphi, domega;
};

template <typename Scalar>
VariationFields<Scalar> variation_fields(const ModeIndex& mode, const SphereGrid<Scalar>& grid,
                                         const RadiusField<Scalar>& rf) {
  const auto fields = basis_mode_fields(mode, grid);
  const auto gf = eval_geometry_field(rf, grid);
  const auto vc = variation_coefficients(rf, gf, grid);

  VariationFields<Scalar> out;
  out.dr = fields[kFieldR];
  out.dr_theta = fields[kFieldRTheta];
  out.dr_phi = fields[kFieldRPhi];
  out.dr_thetatheta = fields[kFieldRThetaTheta];
  out.dr_phiphi = fields[kFieldRPhiPhi];
  out.dr_thetaphi = fields[kFieldRThetaPhi];
  out.domega = vc.w[kFieldR] * fields[kFieldR] + vc.w[kFieldRTheta] * fields[kFieldRTheta] +
               vc.w[kFieldRPhi] * fields[kFieldRPhi];
  return out;
}

/// Per-node first variation of the mean curvature for one mode, exact to
/// first order: H(a + eps e_mode) = H(a) + eps dH + O(eps^2).
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> mean_curvature_variation(const ModeIndex& mode,
                                                                 const RadiusField<Scalar>& rf,
                                                                 const GeometryField<Scalar>& gf,
                                                                 const SphereGrid<Scalar>& grid) {
  const auto fields = basis_mode_fields(mode, grid);
  const auto vc = variation_coefficients(rf, gf, grid);
  Eigen::Array<Scalar, Eigen::Dynamic, 1> dh =
      Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(grid.node_count());
  for (int f = 0; f < 6; ++f) dh += vc.h[f] * fields[f];
  return dh;
}

namespace detail {

// Gradient of the penalized energy given precomputed fields.  Assembled in
// adjoint form: one per-node weight array per radius field, then one
// transposed mat-vec per field against the basis table.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> energy_gradient_impl(
    const RadiusField<Scalar>& rf, const GeometryField<Scalar>& gf,
    const BasisTable<Scalar>& table, const SphereGrid<Scalar>& grid,
    const EnergyParams<Scalar>& params, Scalar area, Scalar volume) {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const auto vc = variation_coefficients(rf, gf, grid);

  const ArrayX w_tp = grid.weights / grid.sin_thetas;  // dtheta dphi measure
  const ArrayX q_bend_h =
      w_tp * Scalar(2) * params.kappa_c * (Scalar(2) * gf.H - params.c0) * gf.omega;
  const ArrayX q_omega = w_tp * (Scalar(0.5) * params.kappa_c *
                                     (Scalar(2) * gf.H - params.c0).square() +
                                 params.k_s * (area - params.s_bar));
  const ArrayX q_vol = grid.weights * params.k_v * (volume - params.v_bar) * rf.r.square();

  std::array<ArrayX, 6> adj;
  for (int f = 0; f < 6; ++f) adj[f] = q_bend_h * vc.h[f];
  for (int f = 0; f < 3; ++f) adj[f] += q_omega * vc.w[f];
  adj[kFieldR] += q_vol;

  return table.s.transpose() * adj[kFieldR].matrix() +
         table.s_theta.transpose() * adj[kFieldRTheta].matrix() +
         table.s_phi.transpose() * adj[kFieldRPhi].matrix() +
         table.s_thetatheta.transpose() * adj[kFieldRThetaTheta].matrix() +
         table.s_phiphi.transpose() * adj[kFieldRPhiPhi].matrix() +
         table.s_thetaphi.transpose() * adj[kFieldRThetaPhi].matrix();
}

}  // namespace detail

/// Analytic gradient of the penalized total energy with respect to every
/// surface-harmonic coefficient.  The Gaussian term contributes nothing.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> energy_gradient(const SurfaceCoefficients<Scalar>& coeffs,
                                                         const BasisTable<Scalar>& table,
                                                         const SphereGrid<Scalar>& grid,
                                                         const EnergyParams<Scalar>& params) {
  const auto rf = eval_radius_field(coeffs, table);
  const auto gf = eval_geometry_field(rf, grid);
  const Scalar area = surface_area(gf, grid);
  const Scalar volume = enclosed_volume(rf, grid);
  return detail::energy_gradient_impl(rf, gf, table, grid, params, area, volume);
}

/// Full report: bending energy, penalized total, area, volume, reduced
/// volume, and the gradient norm.
template <typename Scalar>
EnergyReport<Scalar> total_energy(const SurfaceCoefficients<Scalar>& coeffs,
                                  const BasisTable<Scalar>& table, const SphereGrid<Scalar>& grid,
                                  const EnergyParams<Scalar>& params) {
  const auto rf = eval_radius_field(coeffs, table);
  const auto gf = eval_geometry_field(rf, grid);

  EnergyReport<Scalar> rep;
  rep.s_area = surface_area(gf, grid);
  rep.volume = enclosed_volume(rf, grid);
  rep.reduced_v = reduced_volume(rep.s_area, rep.volume);
  rep.e_bend = bending_energy(gf, grid, params);
  rep.e_total = rep.e_bend + penalty_energy(rep.s_area, rep.volume, params);
  rep.grad_norm = detail::energy_gradient_impl(rf, gf, table, grid, params, rep.s_area, rep.volume)
                      .norm();
  return rep;
}

template <typename Scalar>
EnergyReport<Scalar> total_energy(const SurfaceCoefficients<Scalar>& coeffs,
                                  const SphereGrid<Scalar>& grid,
                                  const EnergyParams<Scalar>& params) {
  return total_energy(coeffs, build_basis_table(grid, coeffs.degree), grid, params);
}

}  // namespace vesicle
