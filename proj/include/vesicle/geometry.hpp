#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vesicle/errors.hpp"
#include "vesicle/quadrature.hpp"
#include "vesicle/sh_basis.hpp"

namespace vesicle {

/// Surface-harmonic expansion coefficients in flat mode ordering
/// [A_0^0, A_1^0, A_1^1, B_1^1, A_2^0, ...], length (degree+1)^2.
template <typename Scalar = double>
struct SurfaceCoefficients {
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int degree = 0;
  VectorX a;

  SurfaceCoefficients() = default;
  explicit SurfaceCoefficients(int degree_) : degree(degree_), a(VectorX::Zero(mode_count(degree_))) {}
  SurfaceCoefficients(int degree_, VectorX values) : degree(degree_), a(std::move(values)) {
    if (a.size() != mode_count(degree)) {
      throw std::invalid_argument("SurfaceCoefficients: length must be (degree+1)^2");
    }
  }

  int size() const { return static_cast<int>(a.size()); }
  Scalar& operator[](int i) { return a[i]; }
  Scalar operator[](int i) const { return a[i]; }
};

/// Coefficients of a perfect sphere: only the constant mode is set,
/// A_0^0 = radius * sqrt(4 pi).
template <typename Scalar = double>
SurfaceCoefficients<Scalar> sphere_coefficients(Scalar radius, int degree) {
  SurfaceCoefficients<Scalar> c(degree);
  c.a[0] = radius * std::sqrt(Scalar(4) * Scalar(M_PI));
  return c;
}

/// Normalization factors f_n^|m| indexed by flat mode index.
template <typename Scalar = double>
Eigen::Array<Scalar, Eigen::Dynamic, 1> normalization_table(int degree) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> f(mode_count(degree));
  for (int i = 0; i < f.size(); ++i) {
    const ModeIndex mode = mode_from_flat(i);
    f[i] = normalization_factor<Scalar>(mode.n, std::abs(mode.m));
  }
  return f;
}

/// Per-node samples of every surface harmonic through `degree` and their
/// partials; column i holds mode i over the flattened grid.  Built once per
/// (grid, degree) pair and reused across all optimizer iterations.
template <typename Scalar = double>
struct BasisTable {
  using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int degree = 0;
  MatrixX s, s_theta, s_phi, s_thetatheta, s_phiphi, s_thetaphi;
};

template <typename Scalar>
BasisTable<Scalar> build_basis_table(const SphereGrid<Scalar>& grid, int degree) {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const int nt = grid.n_theta();
  const int np = grid.n_phi();
  const int nn = nt * np;
  const int nm = mode_count(degree);

  BasisTable<Scalar> t;
  t.degree = degree;
  t.s.resize(nn, nm);
  t.s_theta.resize(nn, nm);
  t.s_phi.resize(nn, nm);
  t.s_thetatheta.resize(nn, nm);
  t.s_phiphi.resize(nn, nm);
  t.s_thetaphi.resize(nn, nm);

  // Angular factors cos(m phi_l), sin(m phi_l).
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cosm(np, degree + 1), sinm(np, degree + 1);
  for (int m = 0; m <= degree; ++m) {
    for (int l = 0; l < np; ++l) {
      cosm(l, m) = std::cos(Scalar(m) * grid.phis[l]);
      sinm(l, m) = std::sin(Scalar(m) * grid.phis[l]);
    }
  }

  ArrayX col(degree + 3);
  for (int k = 0; k < nt; ++k) {
    const Scalar theta = grid.thetas[k];
    const Scalar mu = std::cos(theta);
    const Scalar st = std::sin(theta);
    const int row0 = k * np;
    for (int m = 0; m <= degree; ++m) {
      assoc_legendre_column(m, degree + 2, mu, col.data());
      for (int n = m; n <= degree; ++n) {
        const Scalar f = normalization_factor<Scalar>(n, m);
        const Scalar p = f * col[n - m];
        const Scalar dp = f * detail::legendre_dtheta(col[n - m], col[n + 1 - m], n, m, mu, st);
        const Scalar d2p = f * detail::legendre_d2theta(col[n - m], col[n + 1 - m],
                                                        col[n + 2 - m], n, m, mu, st);
        const Scalar mm = Scalar(m) * Scalar(m);

        const int ia = flat_from_nm(n, m);
        t.s.col(ia).segment(row0, np) = p * cosm.col(m);
        t.s_theta.col(ia).segment(row0, np) = dp * cosm.col(m);
        t.s_thetatheta.col(ia).segment(row0, np) = d2p * cosm.col(m);
        t.s_phi.col(ia).segment(row0, np) = -Scalar(m) * p * sinm.col(m);
        t.s_thetaphi.col(ia).segment(row0, np) = -Scalar(m) * dp * sinm.col(m);
        t.s_phiphi.col(ia).segment(row0, np) = -mm * p * cosm.col(m);

        if (m > 0) {
          const int ib = flat_from_nm(n, -m);
          t.s.col(ib).segment(row0, np) = p * sinm.col(m);
          t.s_theta.col(ib).segment(row0, np) = dp * sinm.col(m);
          t.s_thetatheta.col(ib).segment(row0, np) = d2p * sinm.col(m);
          t.s_phi.col(ib).segment(row0, np) = Scalar(m) * p * cosm.col(m);
          t.s_thetaphi.col(ib).segment(row0, np) = Scalar(m) * dp * cosm.col(m);
          t.s_phiphi.col(ib).segment(row0, np) = -mm * p * sinm.col(m);
        }
      }
    }
  }
  return t;
}

/// The radius expansion and its five partials, per node.
template <typename Scalar = double>
struct RadiusField {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  ArrayX r, r_theta, r_phi, r_thetatheta, r_phiphi, r_thetaphi;
};

namespace detail {

template <typename Scalar>
void require_positive_radius(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& r) {
  if ((r > Scalar(0)).all()) return;
  std::vector<int> bad;
  for (int i = 0; i < r.size(); ++i) {
    if (!(r[i] > Scalar(0))) bad.push_back(i);
  }
  const std::string what = "radius not strictly positive at " + std::to_string(bad.size()) +
                           " grid node(s); surface is not star-shaped";
  throw GeometryError(what, std::move(bad));
}

}  // namespace detail

/// Assemble the radius field from a prebuilt basis table (six mat-vecs).
template <typename Scalar>
RadiusField<Scalar> eval_radius_field(const SurfaceCoefficients<Scalar>& coeffs,
                                      const BasisTable<Scalar>& table) {
  if (mode_count(table.degree) != coeffs.size()) {
    throw std::invalid_argument("eval_radius_field: coefficient/table degree mismatch");
  }
  RadiusField<Scalar> rf;
  rf.r = (table.s * coeffs.a).array();
  rf.r_theta = (table.s_theta * coeffs.a).array();
  rf.r_phi = (table.s_phi * coeffs.a).array();
  rf.r_thetatheta = (table.s_thetatheta * coeffs.a).array();
  rf.r_phiphi = (table.s_phiphi * coeffs.a).array();
  rf.r_thetaphi = (table.s_thetaphi * coeffs.a).array();
  detail::require_positive_radius(rf.r);
  return rf;
}

/// Assemble the radius field directly from the grid, one theta row at a
/// time.  Same result as the table path without the table's memory.
template <typename Scalar>
RadiusField<Scalar> eval_radius_field(const SurfaceCoefficients<Scalar>& coeffs,
                                      const SphereGrid<Scalar>& grid) {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const int degree = coeffs.degree;
  const int nt = grid.n_theta();
  const int np = grid.n_phi();
  const int nn = nt * np;

  RadiusField<Scalar> rf;
  for (ArrayX* field : {&rf.r, &rf.r_theta, &rf.r_phi, &rf.r_thetatheta, &rf.r_phiphi,
                        &rf.r_thetaphi}) {
    field->setZero(nn);
  }

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cosm(np, degree + 1), sinm(np, degree + 1);
  for (int m = 0; m <= degree; ++m) {
    for (int l = 0; l < np; ++l) {
      cosm(l, m) = std::cos(Scalar(m) * grid.phis[l]);
      sinm(l, m) = std::sin(Scalar(m) * grid.phis[l]);
    }
  }

  ArrayX col(degree + 3);
  ArrayX ang(np), dang(np);
  for (int k = 0; k < nt; ++k) {
    const Scalar theta = grid.thetas[k];
    const Scalar mu = std::cos(theta);
    const Scalar st = std::sin(theta);
    const int row0 = k * np;
    for (int m = 0; m <= degree; ++m) {
      assoc_legendre_column(m, degree + 2, mu, col.data());
      for (int n = m; n <= degree; ++n) {
        const Scalar f = normalization_factor<Scalar>(n, m);
        const Scalar p = f * col[n - m];
        const Scalar dp = f * detail::legendre_dtheta(col[n - m], col[n + 1 - m], n, m, mu, st);
        const Scalar d2p = f * detail::legendre_d2theta(col[n - m], col[n + 1 - m],
                                                        col[n + 2 - m], n, m, mu, st);
        const Scalar ca = coeffs.a[flat_from_nm(n, m)];
        const Scalar cb = (m > 0) ? coeffs.a[flat_from_nm(n, -m)] : Scalar(0);

        // angular combination and its phi-derivative
        ang = ca * cosm.col(m).array() + cb * sinm.col(m).array();
        dang = Scalar(m) * (cb * cosm.col(m).array() - ca * sinm.col(m).array());

        rf.r.segment(row0, np) += p * ang;
        rf.r_theta.segment(row0, np) += dp * ang;
        rf.r_thetatheta.segment(row0, np) += d2p * ang;
        rf.r_phi.segment(row0, np) += p * dang;
        rf.r_thetaphi.segment(row0, np) += dp * dang;
        rf.r_phiphi.segment(row0, np) -= Scalar(m) * Scalar(m) * p * ang;
      }
    }
  }
  detail::require_positive_radius(rf.r);
  return rf;
}

/// Radius values only (no derivatives); safe at the poles, used for mesh
/// export and reconstruction error sampling.
template <typename Scalar>
Scalar radius_value_at(const SurfaceCoefficients<Scalar>& coeffs, Scalar theta, Scalar phi) {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const int degree = coeffs.degree;
  const Scalar mu = std::cos(theta);
  ArrayX col(degree + 1);
  Scalar out = 0;
  for (int m = 0; m <= degree; ++m) {
    assoc_legendre_column(m, degree, mu, col.data());
    const Scalar c = std::cos(Scalar(m) * phi);
    const Scalar s = std::sin(Scalar(m) * phi);
    for (int n = m; n <= degree; ++n) {
      const Scalar f = normalization_factor<Scalar>(n, m);
      const Scalar ca = coeffs.a[flat_from_nm(n, m)];
      const Scalar cb = (m > 0) ? coeffs.a[flat_from_nm(n, -m)] : Scalar(0);
      out += f * col[n - m] * (ca * c + cb * s);
    }
  }
  return out;
}

/// First and second fundamental forms, curvatures, and the area element.
/// Orientation note: with the normal along x_theta x x_phi, a sphere of
/// radius R has H = -1/R and K = 1/R^2.
template <typename Scalar = double>
struct GeometryField {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  ArrayX omega;          // area element dS/(dtheta dphi); equals R at every node
  ArrayX Eff, F, G;      // first fundamental form
  ArrayX L, M, Nn;       // second fundamental form
  ArrayX R;              // |x_theta x x_phi|
  ArrayX H, K;           // mean and Gaussian curvature
};

template <typename Scalar>
GeometryField<Scalar> eval_geometry_field(const RadiusField<Scalar>& rf,
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

  GeometryField<Scalar> gf;
  const ArrayX st2 = st.square();
  const ArrayX w2 = rp.square() + rt.square() * st2 + r.square() * st2;
  gf.R = r * w2.sqrt();
  gf.omega = gf.R;

  gf.Eff = rt.square() + r.square();
  gf.F = rt * rp;
  gf.G = rp.square() + r.square() * st2;

  const ArrayX inv_r_big = gf.R.inverse();
  gf.L = inv_r_big * (Scalar(-2) * r * rt.square() * st + r.square() * rtt * st -
                      r.cube() * st);
  gf.M = inv_r_big * (Scalar(2) * r * rp * rt * st - r.square() * rtp * st +
                      r.square() * rp * ct);
  gf.Nn = inv_r_big * (-r.cube() * st * st2 + r.square() * rpp * st +
                       r.square() * rt * ct * st2 - Scalar(2) * r * rp.square() * st);

  const ArrayX d = gf.Eff * gf.G - gf.F.square();
  if (!(d > Scalar(0)).all()) {
    std::vector<int> bad;
    for (int i = 0; i < d.size(); ++i) {
      if (!(d[i] > Scalar(0))) bad.push_back(i);
    }
    const std::string what =
        "degenerate metric: E*G - F^2 not positive at " + std::to_string(bad.size()) + " node(s)";
    throw GeometryError(what, std::move(bad));
  }
  gf.H = (gf.Eff * gf.Nn + gf.G * gf.L - Scalar(2) * gf.F * gf.M) / (Scalar(2) * d);
  gf.K = (gf.L * gf.Nn - gf.M.square()) / d;
  return gf;
}

/// Mean curvature from the single closed-form expression in r and its
/// partials (an independent route to GeometryField::H).
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> mean_curvature_direct(const RadiusField<Scalar>& rf,
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

  const ArrayX st2 = st.square();
  const ArrayX st3 = st * st2;
  const ArrayX big_r = r * (rp.square() + rt.square() * st2 + r.square() * st2).sqrt();

  const ArrayX numer = Scalar(3) * rt.square() * r.square() * st3 -
                       rt.square() * r * rpp * st - rt.cube() * r * ct * st2 +
                       Scalar(8) * rt.square() * rp.square() * st + Scalar(2) * r.pow(4) * st3 -
                       r.cube() * rpp * st - r.cube() * rt * ct * st2 +
                       Scalar(3) * r.square() * rp.square() * st - rp.square() * r * rtt * st -
                       r.cube() * rtt * st3 - Scalar(2) * rp * rt * r * rtp * st +
                       Scalar(2) * rp.square() * rt * r * ct;
  const ArrayX denom = -r.cube() * st2 - r * rt.square() * st2 - r * rp.square();
  return Scalar(0.5) * numer / (big_r * denom);
}

/// Total surface area: integral of omega over (theta, phi).
template <typename Scalar>
Scalar surface_area(const GeometryField<Scalar>& gf, const SphereGrid<Scalar>& grid) {
  return integrate(grid, gf.omega / grid.sin_thetas);
}

/// Enclosed volume: (1/3) * solid-angle integral of r^3.
template <typename Scalar>
Scalar enclosed_volume(const RadiusField<Scalar>& rf, const SphereGrid<Scalar>& grid) {
  return integrate(grid, rf.r.cube()) / Scalar(3);
}

/// Reduced volume v = 6 sqrt(pi) V / S_A^(3/2); equals 1 exactly on spheres.
template <typename Scalar>
Scalar reduced_volume(Scalar area, Scalar volume) {
  return Scalar(6) * std::sqrt(Scalar(M_PI)) * volume / std::pow(area, Scalar(1.5));
}

}  // namespace vesicle
