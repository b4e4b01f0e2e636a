#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "vesicle/energy.hpp"
#include "vesicle/errors.hpp"
#include "vesicle/geometry.hpp"
#include "vesicle/quadrature.hpp"

namespace vesicle {

template <typename Scalar = double>
struct NcgConfig {
  Scalar eps_g = 1e-6;         // stop when ||g_{k+1} - g_k|| drops below
  Scalar eps_a = 1e-6;         // stop when ||a_{k+1} - a_k|| drops below
  int max_iters = 5000;
  int ls_max_iters = 60;
  Scalar ls_eps = 1e-6;        // bracket width tolerance
  bool beta_floor_at_zero = true;  // clamp Hestenes-Stiefel beta at 0 (restart)
};

enum class StopReason {
  GradientChange,
  StepSize,
  MaxIterations,
  LineSearchFailure,
};

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::GradientChange: return "gradient_change";
    case StopReason::StepSize: return "step_size";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::LineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

template <typename Scalar = double>
struct IterationRecord {
  int k = 0;
  Scalar energy = 0;
  Scalar grad_norm = 0;
  Scalar alpha = 0;
  Scalar beta = 0;
  Scalar area = 0;
  Scalar volume = 0;
  Scalar reduced_v = 0;
};

template <typename Scalar = double>
using IterationTrace = std::vector<IterationRecord<Scalar>>;

template <typename Scalar = double>
struct LineSearchResult {
  bool success = false;
  Scalar alpha = 0;
  Scalar energy = 0;
  int energy_evals = 0;
  int gradient_evals = 0;
};

/// Bracketing/bisection line search on [0, 1].  `energy_at(alpha)` may
/// return +inf for infeasible trial geometry; `slope_at(alpha)` is the
/// directional derivative g(a + alpha d)^T d.  The bracket ends are labeled
/// by energy (alpha_l holds the lowest energy seen), the midpoint is tested,
/// and the directional derivative picks the sub-bracket, including the swap
/// branch that can reorder the ends.  Only a strict decrease from energy0 is
/// accepted: the final midpoint if it decreases, otherwise the low end.
template <typename Scalar, typename EnergyFn, typename SlopeFn>
LineSearchResult<Scalar> line_search_bisect(EnergyFn&& energy_at, SlopeFn&& slope_at,
                                            Scalar energy0, const NcgConfig<Scalar>& cfg) {
  LineSearchResult<Scalar> res;
  Scalar alpha_low = 0, e_low = energy0;
  Scalar alpha_other = 1;
  {
    const Scalar e1 = energy_at(Scalar(1));
    ++res.energy_evals;
    if (!(energy0 < e1)) {
      alpha_low = 1;
      e_low = e1;
      alpha_other = 0;
    }
  }

  Scalar alpha_t = alpha_low, e_t = e_low;
  for (int it = 0; it < cfg.ls_max_iters; ++it) {
    alpha_t = Scalar(0.5) * (alpha_low + alpha_other);
    e_t = energy_at(alpha_t);
    ++res.energy_evals;
    if (e_t > e_low) {
      alpha_other = alpha_t;
    } else {
      const Scalar slope = slope_at(alpha_t);
      ++res.gradient_evals;
      if (slope * (alpha_low - alpha_t) > Scalar(0)) {
        alpha_low = alpha_t;
      } else {
        alpha_other = alpha_low;
        alpha_low = alpha_t;
      }
      e_low = e_t;
    }
    if (std::abs(alpha_other - alpha_low) < cfg.ls_eps) break;
  }

  if (e_t < energy0) {
    res.success = true;
    res.alpha = alpha_t;
    res.energy = e_t;
  } else if (e_low < energy0) {
    // final midpoint was rejected; the low bracket end still decreases
    res.success = true;
    res.alpha = alpha_low;
    res.energy = e_low;
  }
  return res;
}

/// Objective wrapper binding the penalized energy to a fixed grid, basis
/// table, and parameter set.  Infeasible geometry maps to +inf energy, so
/// the line search backs away from it instead of aborting.
template <typename Scalar = double>
class VesicleObjective {
public:
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  VesicleObjective(const SphereGrid<Scalar>& grid, const BasisTable<Scalar>& table,
                   const EnergyParams<Scalar>& params)
      : grid_(grid), table_(table), params_(params) {}

  int degree() const { return table_.degree; }
  const EnergyParams<Scalar>& params() const { return params_; }

  struct Breakdown {
    Scalar total = 0;
    Scalar bending = 0;
    Scalar area = 0;
    Scalar volume = 0;
    Scalar reduced_v = 0;
    bool feasible = false;
  };

  Breakdown breakdown(const VectorX& a) const {
    Breakdown b;
    try {
      const SurfaceCoefficients<Scalar> coeffs{table_.degree, a};
      const auto rf = eval_radius_field(coeffs, table_);
      const auto gf = eval_geometry_field(rf, grid_);
      b.area = surface_area(gf, grid_);
      b.volume = enclosed_volume(rf, grid_);
      b.reduced_v = reduced_volume(b.area, b.volume);
      b.bending = bending_energy(gf, grid_, params_);
      b.total = b.bending + penalty_energy(b.area, b.volume, params_);
      b.feasible = true;
    } catch (const GeometryError&) {
      b.total = std::numeric_limits<Scalar>::infinity();
    }
    return b;
  }

  Scalar energy(const VectorX& a) const { return breakdown(a).total; }

  /// Penalized energy and gradient; requires feasible geometry.
  Scalar energy_and_gradient(const VectorX& a, VectorX& grad) const {
    const SurfaceCoefficients<Scalar> coeffs{table_.degree, a};
    const auto rf = eval_radius_field(coeffs, table_);
    const auto gf = eval_geometry_field(rf, grid_);
    const Scalar area = surface_area(gf, grid_);
    const Scalar volume = enclosed_volume(rf, grid_);
    grad = detail::energy_gradient_impl(rf, gf, table_, grid_, params_, area, volume);
    return bending_energy(gf, grid_, params_) + penalty_energy(area, volume, params_);
  }

private:
  const SphereGrid<Scalar>& grid_;
  const BasisTable<Scalar>& table_;
  EnergyParams<Scalar> params_;
};

/// Line search along `direction` from `coeffs` for the penalized energy.
template <typename Scalar>
LineSearchResult<Scalar> line_search(const SurfaceCoefficients<Scalar>& coeffs,
                                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& direction,
                                     const SphereGrid<Scalar>& grid,
                                     const EnergyParams<Scalar>& params,
                                     const NcgConfig<Scalar>& cfg) {
  const auto table = build_basis_table(grid, coeffs.degree);
  const VesicleObjective<Scalar> obj(grid, table, params);
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  VectorX grad_buf(coeffs.size());
  const Scalar e0 = obj.energy(coeffs.a);
  auto energy_at = [&](Scalar alpha) { return obj.energy(coeffs.a + alpha * direction); };
  auto slope_at = [&](Scalar alpha) {
    obj.energy_and_gradient(coeffs.a + alpha * direction, grad_buf);
    return grad_buf.dot(direction);
  };
  return line_search_bisect<Scalar>(energy_at, slope_at, e0, cfg);
}

template <typename Scalar = double>
struct NcgResult {
  SurfaceCoefficients<Scalar> coeffs;   // best-seen iterate
  EnergyReport<Scalar> report;          // evaluated at the best iterate
  IterationTrace<Scalar> trace;
  StopReason stop = StopReason::MaxIterations;
  int iterations = 0;
};

/// Nonlinear conjugate gradient with the Hestenes-Stiefel beta and the
/// bisection line search.  Iterates a_{k+1} = a_k + alpha_k d_k with
/// d_0 = -g_0 and d_{k+1} = -g_{k+1} + beta_k d_k; stops on the change in
/// gradient, the change in modes, the iteration cap, or a failed line
/// search.  Returns the best-seen iterate.
template <typename Scalar>
NcgResult<Scalar> ncg_minimize(const SurfaceCoefficients<Scalar>& coeffs0,
                               const SphereGrid<Scalar>& grid, const EnergyParams<Scalar>& params,
                               const NcgConfig<Scalar>& cfg) {
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto table = build_basis_table(grid, coeffs0.degree);
  const VesicleObjective<Scalar> obj(grid, table, params);

  NcgResult<Scalar> result;
  result.coeffs = coeffs0;

  VectorX a = coeffs0.a;
  VectorX grad(a.size()), grad_next(a.size()), grad_buf(a.size());
  Scalar energy = obj.energy_and_gradient(a, grad);
  VectorX dir = -grad;

  Scalar best_energy = energy;
  VectorX best_a = a;

  {
    const auto b = obj.breakdown(a);
    result.trace.push_back(IterationRecord<Scalar>{0, energy, grad.norm(), Scalar(0), Scalar(0),
                                                   b.area, b.volume, b.reduced_v});
  }

  result.stop = StopReason::MaxIterations;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    auto energy_at = [&](Scalar alpha) { return obj.energy(a + alpha * dir); };
    auto slope_at = [&](Scalar alpha) {
      obj.energy_and_gradient(a + alpha * dir, grad_buf);
      return grad_buf.dot(dir);
    };
    auto ls = line_search_bisect<Scalar>(energy_at, slope_at, energy, cfg);
    if (!ls.success && cfg.beta_floor_at_zero && (dir + grad).norm() != Scalar(0)) {
      // safeguarded mode: a conjugate direction found no decrease; restart
      // from steepest descent before giving up
      dir = -grad;
      ls = line_search_bisect<Scalar>(energy_at, slope_at, energy, cfg);
    }
    if (!ls.success) {
      result.stop = StopReason::LineSearchFailure;
      break;
    }

    const VectorX a_next = a + ls.alpha * dir;
    const Scalar energy_next = obj.energy_and_gradient(a_next, grad_next);
    result.iterations = k;

    if (energy_next < best_energy) {
      best_energy = energy_next;
      best_a = a_next;
    }

    Scalar beta = 0;
    const VectorX dg = grad_next - grad;
    const Scalar dg_norm = dg.norm();
    bool stop_gradient = dg_norm < cfg.eps_g;
    if (!stop_gradient) {
      const Scalar denom = dg.dot(dir);
      beta = grad_next.dot(dg) / denom;
      if (!std::isfinite(beta)) beta = 0;
      if (cfg.beta_floor_at_zero) beta = std::max(beta, Scalar(0));
    }

    {
      const auto b = obj.breakdown(a_next);
      result.trace.push_back(IterationRecord<Scalar>{k, energy_next, grad_next.norm(), ls.alpha,
                                                     beta, b.area, b.volume, b.reduced_v});
    }

    if (stop_gradient) {
      result.stop = StopReason::GradientChange;
      break;
    }
    dir = -grad_next + beta * dir;
    if (cfg.beta_floor_at_zero && grad_next.dot(dir) >= Scalar(0)) {
      dir = -grad_next;  // keep a descent direction
    }
    const bool stop_step = (a_next - a).norm() < cfg.eps_a;
    a = a_next;
    grad = grad_next;
    energy = energy_next;
    if (stop_step) {
      result.stop = StopReason::StepSize;
      break;
    }
  }

  result.coeffs = SurfaceCoefficients<Scalar>{coeffs0.degree, best_a};
  result.report = total_energy(result.coeffs, table, grid, params);
  return result;
}

/// Central-difference check of the analytic gradient.  Per-component steps
/// are scaled by the coefficient magnitude.
template <typename Scalar = double>
struct GradientCheck {
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  VectorX analytic;
  VectorX finite_diff;
  ArrayX abs_err;
  ArrayX rel_err;  // |fd - analytic| / max(|fd|, |analytic|)

  Scalar max_rel() const { return rel_err.size() ? rel_err.maxCoeff() : Scalar(0); }

  /// Componentwise acceptance: relative error below rel_tol, except that
  /// components smaller than `small` in both routes only need abs_tol.
  bool passes(Scalar rel_tol = Scalar(1e-6), Scalar abs_tol = Scalar(1e-8),
              Scalar small = Scalar(1e-4)) const {
    for (int i = 0; i < abs_err.size(); ++i) {
      const Scalar mag = std::max(std::abs(analytic[i]), std::abs(finite_diff[i]));
      if (mag < small) {
        if (!(abs_err[i] < abs_tol)) return false;
      } else {
        if (!(rel_err[i] < rel_tol)) return false;
      }
    }
    return true;
  }
};

template <typename Scalar>
GradientCheck<Scalar> fd_gradient_check(const SurfaceCoefficients<Scalar>& coeffs,
                                        const SphereGrid<Scalar>& grid,
                                        const EnergyParams<Scalar>& params, Scalar step) {
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto table = build_basis_table(grid, coeffs.degree);
  const VesicleObjective<Scalar> obj(grid, table, params);

  GradientCheck<Scalar> check;
  const int n = coeffs.size();
  check.finite_diff.resize(n);
  obj.energy_and_gradient(coeffs.a, check.analytic);

  VectorX x = coeffs.a;
  for (int i = 0; i < n; ++i) {
    const Scalar h = step * std::max(Scalar(1), std::abs(coeffs.a[i]));
    const Scalar saved = x[i];
    x[i] = saved + h;
    const Scalar ep = obj.energy(x);
    x[i] = saved - h;
    const Scalar em = obj.energy(x);
    x[i] = saved;
    check.finite_diff[i] = (ep - em) / (Scalar(2) * h);
  }

  check.abs_err = (check.finite_diff - check.analytic).array().abs();
  check.rel_err.resize(n);
  for (int i = 0; i < n; ++i) {
    const Scalar mag = std::max(std::abs(check.analytic[i]), std::abs(check.finite_diff[i]));
    check.rel_err[i] = (mag > Scalar(0)) ? check.abs_err[i] / mag : Scalar(0);
  }
  return check;
}

}  // namespace vesicle
