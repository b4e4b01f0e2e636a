#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace vesicle {

/// Product quadrature on the sphere: Gauss-Legendre nodes in mu = cos(theta)
/// crossed with equispaced nodes in phi.  Weights are solid-angle weights, so
///   sum_i weights[i] * f(theta_i, phi_i)  ~  iint f sin(theta) dtheta dphi.
/// Flat node ordering is theta-major: node(k, l) = k * n_phi + l.
template <typename Scalar = double>
struct SphereGrid {
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  ArrayX thetas;      // n_t polar angles, ascending, strictly inside (0, pi)
  ArrayX phis;        // n_p azimuthal angles, 2*pi*l/n_p
  ArrayX mu_weights;  // Gauss weights in mu, aligned with thetas

  // Flattened per-node arrays.
  ArrayX weights;     // solid-angle weights, sum = 4*pi
  ArrayX sin_thetas;
  ArrayX cos_thetas;

  int n_theta() const { return static_cast<int>(thetas.size()); }
  int n_phi() const { return static_cast<int>(phis.size()); }
  int node_count() const { return static_cast<int>(weights.size()); }
  int node(int k, int l) const { return k * n_phi() + l; }
};

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1] by Newton
/// iteration on P_n; accurate to machine precision for any practical n.
template <typename Scalar = double>
void gauss_legendre(int n, Eigen::Array<Scalar, Eigen::Dynamic, 1>& nodes,
                    Eigen::Array<Scalar, Eigen::Dynamic, 1>& weights) {
  nodes.resize(n);
  weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    Scalar z = std::cos(M_PI * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar p1 = 1, p2 = 0, pp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      p1 = 1;
      p2 = 0;
      for (int j = 1; j <= n; ++j) {
        const Scalar p3 = p2;
        p2 = p1;
        p1 = (Scalar(2 * j - 1) * z * p2 - Scalar(j - 1) * p3) / Scalar(j);
      }
      pp = Scalar(n) * (z * p1 - p2) / (z * z - Scalar(1));
      const Scalar dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < Scalar(1e-15)) break;
    }
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    const Scalar w = Scalar(2) / ((Scalar(1) - z * z) * pp * pp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

/// Build the product grid.  Requires n_t >= 2 and n_p >= 4.
template <typename Scalar = double>
SphereGrid<Scalar> build_grid(int n_t, int n_p) {
  if (n_t < 2 || n_p < 4) {
    throw std::invalid_argument("build_grid: need n_t >= 2 and n_p >= 4");
  }
  using ArrayX = typename SphereGrid<Scalar>::ArrayX;
  SphereGrid<Scalar> grid;

  ArrayX mu, mu_w;
  gauss_legendre<Scalar>(n_t, mu, mu_w);

  grid.thetas.resize(n_t);
  grid.mu_weights.resize(n_t);
  for (int k = 0; k < n_t; ++k) {
    // mu descending <-> theta ascending
    grid.thetas[k] = std::acos(mu[n_t - 1 - k]);
    grid.mu_weights[k] = mu_w[n_t - 1 - k];
  }

  grid.phis.resize(n_p);
  const Scalar dphi = Scalar(2) * Scalar(M_PI) / Scalar(n_p);
  for (int l = 0; l < n_p; ++l) grid.phis[l] = dphi * Scalar(l);

  const int nn = n_t * n_p;
  grid.weights.resize(nn);
  grid.sin_thetas.resize(nn);
  grid.cos_thetas.resize(nn);
  for (int k = 0; k < n_t; ++k) {
    const Scalar st = std::sin(grid.thetas[k]);
    const Scalar ct = std::cos(grid.thetas[k]);
    const Scalar w = grid.mu_weights[k] * dphi;
    grid.weights.segment(k * n_p, n_p).setConstant(w);
    grid.sin_thetas.segment(k * n_p, n_p).setConstant(st);
    grid.cos_thetas.segment(k * n_p, n_p).setConstant(ct);
  }
  return grid;
}

/// Weighted sum of per-node values: approximates the solid-angle integral
/// iint f sin(theta) dtheta dphi of the sampled integrand.
template <typename Scalar, typename Derived>
Scalar integrate(const SphereGrid<Scalar>& grid, const Eigen::ArrayBase<Derived>& values) {
  if (values.size() != grid.weights.size()) {
    throw std::invalid_argument("integrate: values not dimensioned to grid");
  }
  return (grid.weights * values).sum();
}

}  // namespace vesicle
