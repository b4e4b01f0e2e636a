#pragma once

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "vesicle/energy.hpp"
#include "vesicle/errors.hpp"
#include "vesicle/geometry.hpp"
#include "vesicle/quadrature.hpp"

namespace vesicle {

/// Statistically fitted red-blood-cell profile coefficients.  The half
/// height of the profile at normalized equatorial coordinate x in [-1, 1] is
///   h(x) = (0.5 / r0) sqrt(1 - x^2) (c0 + c2 x^2 + c4 x^4),
/// the Evans-Fung thickness law, with lengths in micrometers; h comes out
/// dimensionless.  The square root makes the rim tangent vertical, so the
/// upper and lower branches meet smoothly; without it the revolved surface
/// has an equatorial corner and its bending energy diverges with grid
/// refinement.
template <typename Scalar = double>
struct RbcShapeParams {
  Scalar r0 = 1;
  Scalar c0 = 0;
  Scalar c2 = 0;
  Scalar c4 = 0;
};

template <typename Scalar = double>
RbcShapeParams<Scalar> rbc_tonicity_300() {
  return RbcShapeParams<Scalar>{Scalar(3.91), Scalar(0.81), Scalar(7.83), Scalar(-4.39)};
}

template <typename Scalar = double>
RbcShapeParams<Scalar> rbc_tonicity_217() {
  return RbcShapeParams<Scalar>{Scalar(3.80), Scalar(2.10), Scalar(7.58), Scalar(-5.59)};
}

/// Coefficient-wise convex blend: weight_b on `b`, (1 - weight_b) on `a`.
template <typename Scalar>
RbcShapeParams<Scalar> blend_rbc(const RbcShapeParams<Scalar>& a, const RbcShapeParams<Scalar>& b,
                                 Scalar weight_b) {
  const Scalar wa = Scalar(1) - weight_b;
  return RbcShapeParams<Scalar>{wa * a.r0 + weight_b * b.r0, wa * a.c0 + weight_b * b.c0,
                                wa * a.c2 + weight_b * b.c2, wa * a.c4 + weight_b * b.c4};
}

template <typename Scalar>
Scalar rbc_profile(const RbcShapeParams<Scalar>& p, Scalar x) {
  const Scalar x2 = x * x;
  return Scalar(0.5) / p.r0 * std::sqrt(std::max(Scalar(1) - x2, Scalar(0))) *
         (p.c0 + p.c2 * x2 + p.c4 * x2 * x2);
}

/// Half-profile of an axisymmetric closed surface: height h(x) >= 0 above
/// the equatorial plane at distance x from the symmetry (polar) axis, on
/// [0, x_max] with h(x_max) = 0.  The closed contour is (x, +-h(x)) revolved
/// about the polar axis.
template <typename Scalar = double>
class AxisymmetricProfile {
public:
  virtual ~AxisymmetricProfile() = default;
  virtual Scalar height(Scalar x) const = 0;
  virtual Scalar dheight(Scalar x) const = 0;
  virtual Scalar d2height(Scalar x) const = 0;
  virtual Scalar x_max() const = 0;
};

template <typename Scalar = double>
class RbcProfile final : public AxisymmetricProfile<Scalar> {
public:
  explicit RbcProfile(RbcShapeParams<Scalar> p) : p_(p) {}

  Scalar height(Scalar x) const override { return rbc_profile(p_, x); }
  Scalar dheight(Scalar x) const override {
    const Scalar x2 = x * x;
    const Scalar s = std::sqrt(std::max(Scalar(1) - x2, Scalar(0)));
    const Scalar poly = p_.c0 + p_.c2 * x2 + p_.c4 * x2 * x2;
    const Scalar dpoly = Scalar(2) * p_.c2 * x + Scalar(4) * p_.c4 * x2 * x;
    return Scalar(0.5) / p_.r0 * (-x / s * poly + s * dpoly);
  }
  Scalar d2height(Scalar x) const override {
    const Scalar x2 = x * x;
    const Scalar s = std::sqrt(std::max(Scalar(1) - x2, Scalar(0)));
    const Scalar poly = p_.c0 + p_.c2 * x2 + p_.c4 * x2 * x2;
    const Scalar dpoly = Scalar(2) * p_.c2 * x + Scalar(4) * p_.c4 * x2 * x;
    const Scalar d2poly = Scalar(2) * p_.c2 + Scalar(12) * p_.c4 * x2;
    // d2/dx2 sqrt(1-x^2) = -1/s^3
    return Scalar(0.5) / p_.r0 * (-poly / (s * s * s) - Scalar(2) * x * dpoly / s + s * d2poly);
  }
  Scalar x_max() const override { return Scalar(1); }

private:
  RbcShapeParams<Scalar> p_;
};

/// Ellipsoid of revolution: equatorial semi-axis a, polar semi-axis c.
template <typename Scalar = double>
class EllipsoidProfile final : public AxisymmetricProfile<Scalar> {
public:
  EllipsoidProfile(Scalar equatorial, Scalar polar) : a_(equatorial), c_(polar) {}

  Scalar height(Scalar x) const override {
    const Scalar t = Scalar(1) - (x / a_) * (x / a_);
    return c_ * std::sqrt(std::max(t, Scalar(0)));
  }
  Scalar dheight(Scalar x) const override {
    const Scalar h = height(x);
    return -c_ * c_ * x / (a_ * a_ * h);
  }
  Scalar d2height(Scalar x) const override {
    const Scalar h = height(x);
    return -c_ * c_ / (a_ * a_ * h) - (c_ * c_ * x / (a_ * a_)) * (c_ * c_ * x / (a_ * a_)) / (h * h * h);
  }
  Scalar x_max() const override { return a_; }

private:
  Scalar a_, c_;
};

/// Natural cubic spline with analytic first and second derivatives.
template <typename Scalar = double>
class CubicSpline {
public:
  CubicSpline() = default;
  CubicSpline(std::vector<Scalar> x, std::vector<Scalar> y) : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    if (n < 3) throw std::invalid_argument("CubicSpline: need at least 3 samples");
    for (int i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) {
        throw std::invalid_argument("CubicSpline: abscissae must be strictly increasing");
      }
    }
    // second derivatives from the tridiagonal natural-spline system
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
    a(0, 0) = 1;
    a(n - 1, n - 1) = 1;
    for (int i = 1; i < n - 1; ++i) {
      const Scalar hl = x_[i] - x_[i - 1];
      const Scalar hr = x_[i + 1] - x_[i];
      a(i, i - 1) = hl;
      a(i, i) = Scalar(2) * (hl + hr);
      a(i, i + 1) = hr;
      rhs[i] = Scalar(6) * ((y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl);
    }
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> m = a.ldlt().solve(rhs);
    m_.assign(m.data(), m.data() + n);
  }

  Scalar x_front() const { return x_.front(); }
  Scalar x_back() const { return x_.back(); }

  Scalar eval(Scalar x) const {
    const auto [i, t, h] = locate(x);
    const Scalar b = (y_[i + 1] - y_[i]) / h - h / Scalar(6) * (m_[i + 1] + Scalar(2) * m_[i]);
    return y_[i] + b * t + m_[i] / Scalar(2) * t * t + (m_[i + 1] - m_[i]) / (Scalar(6) * h) * t * t * t;
  }
  Scalar deriv(Scalar x) const {
    const auto [i, t, h] = locate(x);
    const Scalar b = (y_[i + 1] - y_[i]) / h - h / Scalar(6) * (m_[i + 1] + Scalar(2) * m_[i]);
    return b + m_[i] * t + (m_[i + 1] - m_[i]) / (Scalar(2) * h) * t * t;
  }
  Scalar deriv2(Scalar x) const {
    const auto [i, t, h] = locate(x);
    return m_[i] + (m_[i + 1] - m_[i]) / h * t;
  }

private:
  std::tuple<int, Scalar, Scalar> locate(Scalar x) const {
    const int n = static_cast<int>(x_.size());
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (x_[mid] <= x) lo = mid;
      else hi = mid;
    }
    return {lo, x - x_[lo], x_[lo + 1] - x_[lo]};
  }

  std::vector<Scalar> x_, y_;
  std::vector<Scalar> m_;
};

/// Spline-interpolated profile from (x, h) samples.  Only x >= 0 shapes the
/// revolved surface; samples at x < 0 anchor the spline slope at the axis.
template <typename Scalar = double>
class SplineProfile final : public AxisymmetricProfile<Scalar> {
public:
  SplineProfile(std::vector<Scalar> x, std::vector<Scalar> h)
      : spline_(std::move(x), std::move(h)) {
    if (spline_.x_back() <= Scalar(0)) {
      throw std::invalid_argument("SplineProfile: last sample must be at x > 0");
    }
  }

  Scalar height(Scalar x) const override { return spline_.eval(x); }
  Scalar dheight(Scalar x) const override { return spline_.deriv(x); }
  Scalar d2height(Scalar x) const override { return spline_.deriv2(x); }
  Scalar x_max() const override { return spline_.x_back(); }

private:
  CubicSpline<Scalar> spline_;
};

/// Read a profile CSV with header "x,h", x strictly increasing in [-1, 1].
template <typename Scalar = double>
SplineProfile<Scalar> load_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty profile file: " + path);
  // tolerate whitespace and an optional BOM around the header
  std::string header;
  for (char c : line) {
    if (!std::isspace(static_cast<unsigned char>(c)) && static_cast<unsigned char>(c) < 0x80) {
      header += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (header != "x,h") {
    throw std::runtime_error("profile file must start with header \"x,h\": " + path);
  }
  std::vector<Scalar> xs, hs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string xs_str, hs_str;
    if (!std::getline(ss, xs_str, ',') || !std::getline(ss, hs_str)) {
      throw std::runtime_error("malformed profile row at line " + std::to_string(lineno));
    }
    try {
      xs.push_back(static_cast<Scalar>(std::stod(xs_str)));
      hs.push_back(static_cast<Scalar>(std::stod(hs_str)));
    } catch (const std::exception&) {
      throw std::runtime_error("malformed profile row at line " + std::to_string(lineno));
    }
  }
  if (xs.size() < 3) throw std::runtime_error("profile file needs at least 3 samples");
  if (xs.front() < Scalar(-1) - Scalar(1e-12) || xs.back() > Scalar(1) + Scalar(1e-12)) {
    throw std::runtime_error("profile abscissae must lie in [-1, 1]");
  }
  return SplineProfile<Scalar>(std::move(xs), std::move(hs));
}

/// Distance from the origin to the revolved profile along the ray at polar
/// angle theta.  The intersection parameter solves
/// x cos(theta) = h(x) sin(theta) by bisection to ~1e-13 * x_max.
template <typename Scalar>
Scalar profile_to_radius(const AxisymmetricProfile<Scalar>& profile, Scalar theta) {
  const Scalar xm = profile.x_max();
  Scalar th = theta;
  if (th > Scalar(M_PI) / Scalar(2)) th = Scalar(M_PI) - th;  // mirror hemisphere
  if (th <= Scalar(0)) return profile.height(Scalar(0));      // on-axis pole
  const Scalar c = std::cos(th), s = std::sin(th);
  auto f = [&](Scalar x) { return x * c - profile.height(x) * s; };
  Scalar lo = 0, hi = xm;
  // f(0) = -h(0) sin < 0, f(xm) = xm cos >= 0
  for (int it = 0; it < 200; ++it) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    if (f(mid) < Scalar(0)) lo = mid;
    else hi = mid;
    if (hi - lo < Scalar(1e-13) * xm) break;
  }
  const Scalar x = Scalar(0.5) * (lo + hi);
  return std::hypot(x, profile.height(x));
}

/// A star-shaped target surface sampled by radius.
template <typename Scalar = double>
class TargetSurface {
public:
  virtual ~TargetSurface() = default;
  virtual Scalar radius(Scalar theta, Scalar phi) const = 0;
  /// Exact radius field on a grid (all five partials included).
  virtual RadiusField<Scalar> radius_field(const SphereGrid<Scalar>& grid) const = 0;
  virtual std::string provenance() const = 0;
};

/// Axisymmetric surface of revolution of a half profile.  Radius derivatives
/// come from implicit differentiation of the ray-intersection equation, so
/// they are exact up to the root-find tolerance.
template <typename Scalar = double>
class RevolvedProfileSurface final : public TargetSurface<Scalar> {
public:
  RevolvedProfileSurface(std::shared_ptr<const AxisymmetricProfile<Scalar>> profile,
                         std::string provenance)
      : profile_(std::move(profile)), provenance_(std::move(provenance)) {
    check_star_shaped();
  }

  Scalar radius(Scalar theta, Scalar /*phi*/) const override {
    return profile_to_radius(*profile_, theta);
  }

  /// r, r_theta, r_thetatheta on the ray at angle theta in (0, pi).
  void radius_derivatives(Scalar theta, Scalar& r, Scalar& r_t, Scalar& r_tt) const {
    Scalar th = theta;
    Scalar mirror = 1;
    if (th > Scalar(M_PI) / Scalar(2)) {
      th = Scalar(M_PI) - th;
      mirror = -1;  // flips the sign of r_theta only
    }
    const Scalar xm = profile_->x_max();
    const Scalar c = std::cos(th), s = std::sin(th);
    Scalar lo = 0, hi = xm;
    auto f = [&](Scalar x) { return x * c - profile_->height(x) * s; };
    for (int it = 0; it < 200; ++it) {
      const Scalar mid = Scalar(0.5) * (lo + hi);
      if (f(mid) < Scalar(0)) lo = mid;
      else hi = mid;
      if (hi - lo < Scalar(1e-14) * xm) break;
    }
    const Scalar x = Scalar(0.5) * (lo + hi);
    const Scalar h = profile_->height(x);
    const Scalar hp = profile_->dheight(x);
    const Scalar hpp = profile_->d2height(x);

    r = std::hypot(x, h);
    // parametric chain rule through theta(x) = atan2(x, h(x))
    const Scalar aa = x + h * hp;       // r r'(x)
    const Scalar bb = h - x * hp;       // r^2 theta'(x)
    const Scalar dr_dx = aa / r;
    r_t = r * aa / bb;
    const Scalar daa = Scalar(1) + hp * hp + h * hpp;
    const Scalar dbb = -x * hpp;
    const Scalar drt_dx = dr_dx * aa / bb + r * daa / bb - r * aa * dbb / (bb * bb);
    r_tt = drt_dx * r * r / bb;
    r_t *= mirror;
  }

  RadiusField<Scalar> radius_field(const SphereGrid<Scalar>& grid) const override {
    const int nt = grid.n_theta();
    const int np = grid.n_phi();
    RadiusField<Scalar> rf;
    for (auto* field : {&rf.r, &rf.r_theta, &rf.r_phi, &rf.r_thetatheta, &rf.r_phiphi,
                        &rf.r_thetaphi}) {
      field->setZero(nt * np);
    }
    for (int k = 0; k < nt; ++k) {
      Scalar r, rt, rtt;
      radius_derivatives(grid.thetas[k], r, rt, rtt);
      rf.r.segment(k * np, np).setConstant(r);
      rf.r_theta.segment(k * np, np).setConstant(rt);
      rf.r_thetatheta.segment(k * np, np).setConstant(rtt);
    }
    detail::require_positive_radius(rf.r);
    return rf;
  }

  std::string provenance() const override { return provenance_; }

private:
  void check_star_shaped() const {
    // Rays from the origin meet the contour once iff theta(x) = atan2(x, h)
    // is strictly increasing, i.e. h - x h' > 0 where the contour is off the
    // equatorial plane.
    const Scalar xm = profile_->x_max();
    const int samples = 2048;
    if (!(profile_->height(Scalar(0)) > Scalar(0))) {
      throw GeometryError("profile height at the axis must be positive");
    }
    if (std::abs(profile_->height(xm)) > Scalar(1e-9)) {
      throw GeometryError("profile does not close: height at x_max must be zero");
    }
    std::vector<int> bad;
    for (int i = 0; i < samples; ++i) {
      const Scalar x = xm * (Scalar(i) + Scalar(0.5)) / Scalar(samples);
      const Scalar h = profile_->height(x);
      if (!(h > Scalar(0))) {
        throw GeometryError("profile height must stay positive inside (0, x_max)");
      }
      if (!(h - x * profile_->dheight(x) > Scalar(0))) bad.push_back(i);
    }
    if (!bad.empty()) {
      throw GeometryError(
          "profile is not star-shaped about the origin (a ray meets it more than once)",
          std::move(bad));
    }
  }

  std::shared_ptr<const AxisymmetricProfile<Scalar>> profile_;
  std::string provenance_;
};

/// Target backed by an existing surface-harmonic expansion (round trips and
/// synthetic tests).
template <typename Scalar = double>
class HarmonicSurface final : public TargetSurface<Scalar> {
public:
  explicit HarmonicSurface(SurfaceCoefficients<Scalar> coeffs, std::string provenance = "harmonic")
      : coeffs_(std::move(coeffs)), provenance_(std::move(provenance)) {}

  Scalar radius(Scalar theta, Scalar phi) const override {
    return radius_value_at(coeffs_, theta, phi);
  }
  RadiusField<Scalar> radius_field(const SphereGrid<Scalar>& grid) const override {
    return eval_radius_field(coeffs_, grid);
  }
  std::string provenance() const override { return provenance_; }

private:
  SurfaceCoefficients<Scalar> coeffs_;
  std::string provenance_;
};

namespace detail {

// Basis values (no derivatives) for one theta row: np x mode_count block.
template <typename Scalar>
void basis_value_row(const SphereGrid<Scalar>& grid, int k, int degree,
                     const Eigen::Array<Scalar, Eigen::Dynamic, 1>& fnm,
                     Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& block) {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const int np = grid.n_phi();
  const Scalar mu = std::cos(grid.thetas[k]);
  ArrayX col(degree + 1);
  block.resize(np, mode_count(degree));
  for (int m = 0; m <= degree; ++m) {
    assoc_legendre_column(m, degree, mu, col.data());
    for (int n = m; n <= degree; ++n) {
      const int ia = flat_from_nm(n, m);
      const Scalar p = fnm[ia] * col[n - m];
      for (int l = 0; l < np; ++l) {
        block(l, ia) = p * std::cos(Scalar(m) * grid.phis[l]);
      }
      if (m > 0) {
        const int ib = flat_from_nm(n, -m);
        for (int l = 0; l < np; ++l) {
          block(l, ib) = p * std::sin(Scalar(m) * grid.phis[l]);
        }
      }
    }
  }
}

}  // namespace detail

/// Expansion coefficients of a target surface: weighted linear least squares
/// of the sampled radius against the basis under solid-angle weights.  The
/// normal equations stream one theta row at a time, so no full basis table
/// is materialized.
template <typename Scalar>
SurfaceCoefficients<Scalar> project_coefficients(const TargetSurface<Scalar>& target, int degree,
                                                 const SphereGrid<Scalar>& grid) {
  using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const int nm = mode_count(degree);
  const int np = grid.n_phi();
  const auto fnm = normalization_table<Scalar>(degree);
  const auto rf = target.radius_field(grid);

  MatrixX normal = MatrixX::Zero(nm, nm);
  VectorX rhs = VectorX::Zero(nm);
  MatrixX block;
  for (int k = 0; k < grid.n_theta(); ++k) {
    detail::basis_value_row(grid, k, degree, fnm, block);
    const VectorX w = grid.weights.segment(k * np, np);
    const VectorX r = rf.r.segment(k * np, np);
    const MatrixX wb = w.asDiagonal() * block;
    normal.noalias() += block.transpose() * wb;
    rhs.noalias() += wb.transpose() * r;
  }
  Eigen::LDLT<MatrixX> solver(normal);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("project_coefficients: rank-deficient normal equations");
  }
  return SurfaceCoefficients<Scalar>(degree, solver.solve(rhs));
}

/// Weighted squared radius misfit minimized by project_coefficients.
template <typename Scalar>
Scalar projection_misfit(const TargetSurface<Scalar>& target,
                         const SurfaceCoefficients<Scalar>& coeffs,
                         const SphereGrid<Scalar>& grid) {
  const auto r_target = target.radius_field(grid).r;
  const auto r_fit = eval_radius_field(coeffs, grid).r;
  return (grid.weights * (r_target - r_fit).square()).sum();
}

/// Truncation-error metrics of a reconstruction against its target.
/// e_rms is the root mean square pointwise radius error over the grid nodes
/// (e_ms is the raw mean of squares, the form older tabulations report);
/// volume, area, and energy
/// errors are relative, with reference values from dense-grid integration
/// over the target.
template <typename Scalar = double>
struct ReconstructionErrors {
  Scalar e_rms = 0;
  Scalar e_ms = 0;
  Scalar e_vol = 0;
  Scalar e_sa = 0;
  Scalar e_eng = 0;
};

template <typename Scalar>
ReconstructionErrors<Scalar> reconstruction_errors(const TargetSurface<Scalar>& target,
                                                   const SurfaceCoefficients<Scalar>& coeffs,
                                                   const SphereGrid<Scalar>& grid,
                                                   const EnergyParams<Scalar>& params,
                                                   int dense_n_theta = 300, int dense_n_phi = 64) {
  ReconstructionErrors<Scalar> err;
  {
    const auto r_target = target.radius_field(grid).r;
    const auto r_fit = eval_radius_field(coeffs, grid).r;
    err.e_ms = (r_target - r_fit).square().mean();
    err.e_rms = std::sqrt(err.e_ms);
  }

  const auto dense = build_grid<Scalar>(dense_n_theta, dense_n_phi);
  const auto rf_t = target.radius_field(dense);
  const auto gf_t = eval_geometry_field(rf_t, dense);
  const Scalar area_t = surface_area(gf_t, dense);
  const Scalar vol_t = enclosed_volume(rf_t, dense);
  const Scalar eng_t = bending_energy(gf_t, dense, params);

  const auto rf_f = eval_radius_field(coeffs, dense);
  const auto gf_f = eval_geometry_field(rf_f, dense);
  const Scalar area_f = surface_area(gf_f, dense);
  const Scalar vol_f = enclosed_volume(rf_f, dense);
  const Scalar eng_f = bending_energy(gf_f, dense, params);

  err.e_vol = std::abs(vol_f - vol_t) / vol_t;
  err.e_sa = std::abs(area_f - area_t) / area_t;
  err.e_eng = std::abs(eng_f - eng_t) / eng_t;
  return err;
}

}  // namespace vesicle
