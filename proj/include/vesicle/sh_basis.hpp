#pragma once

#include <cmath>
#include <cstdlib>
#include <string>

#include <Eigen/Core>

#include "vesicle/errors.hpp"

namespace vesicle {

/// Number of surface-harmonic modes through truncation degree `degree`.
constexpr int mode_count(int degree) { return (degree + 1) * (degree + 1); }

/// One surface-harmonic mode: flat index i, degree n, signed order m.
/// m >= 0 addresses an A (cosine) coefficient, m < 0 a B (sine) coefficient.
struct ModeIndex {
  int i = 0;
  int n = 0;
  int m = 0;
};

/// Flat index -> (n, m).  n = floor(sqrt(i)); m = i - n^2 when that is <= n,
/// otherwise m = n^2 + n - i (negative, a B coefficient).
inline ModeIndex mode_from_flat(int i) {
  int n = static_cast<int>(std::floor(std::sqrt(static_cast<double>(i))));
  while ((n + 1) * (n + 1) <= i) ++n;  // protect against sqrt rounding
  while (n * n > i) --n;
  const int d = i - n * n;
  const int m = (d <= n) ? d : (n * n + n - i);
  return ModeIndex{i, n, m};
}

/// (n, m) -> flat index, inverse of mode_from_flat.
inline int flat_from_nm(int n, int m) {
  return (m >= 0) ? (n * n + m) : (n * n + n - m);
}

/// Normalization factor f_n^m = sqrt((2n+1)(n-m)! / (4 pi (n+m)!)).
/// The factorial ratio goes through lgamma so large degrees cannot overflow.
template <typename Scalar = double>
Scalar normalization_factor(int n, int m) {
  const double log_ratio =
      std::lgamma(static_cast<double>(n - m + 1)) - std::lgamma(static_cast<double>(n + m + 1));
  return static_cast<Scalar>(
      std::sqrt((2.0 * n + 1.0) / (4.0 * M_PI) * std::exp(log_ratio)));
}

/// Values P_m^m(mu), P_{m+1}^m(mu), ..., P_{nmax}^m(mu) written to out[0..nmax-m].
/// Condon-Shortley sign (-1)^m is built into the diagonal seed.  Upward
/// recurrence in n: (n-m) P_n^m = (2n-1) mu P_{n-1}^m - (n+m-1) P_{n-2}^m.
template <typename Scalar>
void assoc_legendre_column(int m, int nmax, Scalar mu, Scalar* out) {
  Scalar pmm = Scalar(1);
  if (m > 0) {
    const Scalar somx2 = std::sqrt((Scalar(1) - mu) * (Scalar(1) + mu));
    Scalar odd = Scalar(1);
    for (int k = 1; k <= m; ++k) {
      pmm *= -odd * somx2;
      odd += Scalar(2);
    }
  }
  out[0] = pmm;
  if (nmax == m) return;
  Scalar pmmp1 = mu * Scalar(2 * m + 1) * pmm;
  out[1] = pmmp1;
  for (int n = m + 2; n <= nmax; ++n) {
    const Scalar pll =
        (Scalar(2 * n - 1) * mu * pmmp1 - Scalar(n + m - 1) * pmm) / Scalar(n - m);
    pmm = pmmp1;
    pmmp1 = pll;
    out[n - m] = pll;
  }
}

/// Associated Legendre polynomial P_n^m(mu), Condon-Shortley convention.
template <typename Scalar>
Scalar assoc_legendre(int n, int m, Scalar mu) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> col(n - m + 1);
  assoc_legendre_column(m, n, mu, col.data());
  return col[n - m];
}

namespace detail {

inline constexpr double kPoleSinFloor = 1e-12;

template <typename Scalar>
void require_off_pole(Scalar sin_theta, Scalar floor) {
  if (std::abs(sin_theta) < floor) {
    throw DegenerateNodeError(
        "theta-derivative of P_n^m requested at a node with |sin(theta)| < " +
        std::to_string(static_cast<double>(floor)));
  }
}

// d/dtheta P_n^m(cos theta) from P_n^m and P_{n+1}^m at the same point.
template <typename Scalar>
Scalar legendre_dtheta(Scalar p_n, Scalar p_n1, int n, int m, Scalar cos_t, Scalar sin_t) {
  return -(Scalar(n + 1) * cos_t * p_n - Scalar(n - m + 1) * p_n1) / sin_t;
}

// d^2/dtheta^2 P_n^m(cos theta) from P_n^m, P_{n+1}^m, P_{n+2}^m.
template <typename Scalar>
Scalar legendre_d2theta(Scalar p_n, Scalar p_n1, Scalar p_n2, int n, int m, Scalar cos_t,
                        Scalar sin_t) {
  const Scalar np1 = Scalar(n + 1);
  return ((np1 + np1 * np1 * cos_t * cos_t) * p_n -
          Scalar(2) * cos_t * Scalar(n - m + 1) * Scalar(n + 2) * p_n1 +
          Scalar(n - m + 1) * Scalar(n - m + 2) * p_n2) /
         (sin_t * sin_t);
}

}  // namespace detail

/// d/dtheta P_n^m(cos theta).  theta must be strictly inside (0, pi).
template <typename Scalar>
Scalar assoc_legendre_dtheta(int n, int m, Scalar theta,
                             Scalar sin_floor = Scalar(detail::kPoleSinFloor)) {
  const Scalar st = std::sin(theta);
  detail::require_off_pole(st, sin_floor);
  const Scalar mu = std::cos(theta);
  Eigen::Array<Scalar, Eigen::Dynamic, 1> col(n + 2 - m);
  assoc_legendre_column(m, n + 1, mu, col.data());
  return detail::legendre_dtheta(col[n - m], col[n + 1 - m], n, m, mu, st);
}

/// d^2/dtheta^2 P_n^m(cos theta).  theta must be strictly inside (0, pi).
template <typename Scalar>
Scalar assoc_legendre_d2theta(int n, int m, Scalar theta,
                              Scalar sin_floor = Scalar(detail::kPoleSinFloor)) {
  const Scalar st = std::sin(theta);
  detail::require_off_pole(st, sin_floor);
  const Scalar mu = std::cos(theta);
  Eigen::Array<Scalar, Eigen::Dynamic, 1> col(n + 3 - m);
  assoc_legendre_column(m, n + 2, mu, col.data());
  return detail::legendre_d2theta(col[n - m], col[n + 1 - m], col[n + 2 - m], n, m, mu, st);
}

/// A surface harmonic S_n^m and its first and second partials at one point.
template <typename Scalar = double>
struct BasisSample {
  Scalar s = 0;
  Scalar s_theta = 0;
  Scalar s_phi = 0;
  Scalar s_thetatheta = 0;
  Scalar s_phiphi = 0;
  Scalar s_thetaphi = 0;
};

/// Sample S_n^m(theta, phi) with all partials.  m >= 0 selects the cosine
/// branch, m < 0 the sine branch; the identity s_phiphi = -m^2 s holds for
/// every mode.  theta must be strictly inside (0, pi).
template <typename Scalar>
BasisSample<Scalar> basis_sample(const ModeIndex& mode, Scalar theta, Scalar phi,
                                 Scalar sin_floor = Scalar(detail::kPoleSinFloor)) {
  const int n = mode.n;
  const int m = std::abs(mode.m);
  const Scalar st = std::sin(theta);
  detail::require_off_pole(st, sin_floor);
  const Scalar mu = std::cos(theta);

  Eigen::Array<Scalar, Eigen::Dynamic, 1> col(n + 3 - m);
  assoc_legendre_column(m, n + 2, mu, col.data());
  const Scalar f = normalization_factor<Scalar>(n, m);
  const Scalar p = f * col[n - m];
  const Scalar dp = f * detail::legendre_dtheta(col[n - m], col[n + 1 - m], n, m, mu, st);
  const Scalar d2p =
      f * detail::legendre_d2theta(col[n - m], col[n + 1 - m], col[n + 2 - m], n, m, mu, st);

  const Scalar c = std::cos(Scalar(m) * phi);
  const Scalar s = std::sin(Scalar(m) * phi);
  const Scalar ang = (mode.m >= 0) ? c : s;
  const Scalar dang = (mode.m >= 0) ? -Scalar(m) * s : Scalar(m) * c;

  BasisSample<Scalar> out;
  out.s = p * ang;
  out.s_theta = dp * ang;
  out.s_thetatheta = d2p * ang;
  out.s_phi = p * dang;
  out.s_thetaphi = dp * dang;
  out.s_phiphi = -Scalar(m) * Scalar(m) * out.s;
  return out;
}

}  // namespace vesicle
