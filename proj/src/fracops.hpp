#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "expr.hpp"
#include "quadrature.hpp"

namespace hilferstab::fracops {

/// Vector-valued function sampled on a strictly increasing mesh, optionally
/// carrying a monotone weight psi (default psi(t) = t). Values are immutable
/// snapshots; operators return new objects.
struct SampledFunction {
  std::vector<double> mesh;
  std::vector<Eigen::VectorXd> values;
  std::optional<expr::Expression> psi;  // monotone in t; identity when absent

  // end cells of a derivative result carry one-sided stencils
  int low_accuracy_lo = 0;  // number of low-accuracy nodes at the start
  int low_accuracy_hi = 0;  // ... and at the end

  /// psi evaluated on the mesh; validates monotonicity (NonMonotonePsi).
  std::vector<double> psi_values() const;

  Eigen::Index dim() const { return values.empty() ? 0 : values.front().size(); }
};

/// Left-sided fractional integral of order alpha > 0 with respect to psi,
/// by product integration: the data is piecewise-linear in psi(s) and the
/// singular kernel (psi(x)-psi(s))^{alpha-1} is integrated exactly.
/// alpha == 0 returns the identity.
SampledFunction frac_integral_psi(const SampledFunction& f, double alpha);

/// Hilfer derivative of order alpha in (0,1] and type beta in [0,1]:
/// I^{beta(1-alpha)} d/dt I^{(1-beta)(1-alpha)} f. Requires psi(t)=t and a
/// mesh of at least 8 cells (GridTooCoarse). End nodes use one-sided
/// differences and are flagged low-accuracy.
SampledFunction hilfer_derivative(const SampledFunction& f, double alpha,
                                  double beta);

/// Plain first derivative on the mesh (centered interior, one-sided ends).
/// Shared by the Hilfer sandwich and the alpha = 1 residual path.
SampledFunction mesh_derivative(const SampledFunction& f);

/// Integral over [p, q] of (target - s)^{alpha-1} coeff s^rho ds for the
/// singular-layer power cell model (rho in (-1, 0)); gl and jac_end are a
/// 16-point Gauss-Legendre rule and a gauss_jacobi01(16, 0, alpha-1) rule.
double power_cell_integral(double p, double q, double target, double alpha,
                           double rho, double coeff, const quad::Rule& gl,
                           const quad::Rule& jac_end);

/// Exponent of c s^rho fitted through (t_lo, f_lo), (t_hi, f_hi); NaN when the
/// pair cannot carry a power model (zero or sign change).
double fit_power_exponent(double t_lo, double f_lo, double t_hi, double f_hi);

}  // namespace hilferstab::fracops
