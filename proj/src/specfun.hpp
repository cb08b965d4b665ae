#pragma once

#include <Eigen/Dense>

namespace hilferstab::specfun {

/// 1/Gamma(x). Entire on the real line: returns 0 at the poles of Gamma
/// (x = 0, -1, -2, ...) instead of evaluating them.
double rgamma(double x);

/// log|1/Gamma(x)| with the sign in *sign (0 at poles). Used to assemble
/// series terms in log space so very large n never overflows.
double log_abs_rgamma(double x, int* sign);

/// sin(pi*x) with argument reduction (accurate for large |x|).
double sinpi(double x);

struct WrightSpec {
  double alpha;            // strictly inside (0,1)
  double tol = 1e-13;      // series truncation tolerance on |term|/|sum|
  int max_terms = 512;
  double guard_ratio = 1e6;  // cancellation guard: max|term| vs |sum|
};

/// Mainardi/Wright function M_alpha(theta) for theta >= 0.
///
/// Alternating power series with pole terms skipped; when the cancellation
/// guard trips the value is recovered from a steepest-descent contour
/// integral with the dominant exponential scale factored out analytically.
/// Throws SeriesDivergence only if both routes fail.
double wright_m(const WrightSpec& spec, double theta);

/// int_0^infty theta^deltabar M_alpha(theta) dtheta by truncated adaptive
/// quadrature. The closed form Gamma(1+d)/Gamma(1+alpha d) is a test oracle,
/// not used here.
double wright_moment(const WrightSpec& spec, double deltabar);

/// Two-parameter Mittag-Leffler E_{alpha,beta}(z) for real z,
/// 0 < alpha <= 1, beta > 0. Series with a term-ratio stop; for z < -5 a
/// Hankel-collapsed integral representation plus the downward beta recursion.
double mittag_leffler(double alpha, double beta, double z);

/// Matrix Mittag-Leffler: sum_k M^k / Gamma(alpha k + beta) with norm-based
/// truncation. Agrees with the scalar routine on 1x1 input.
Eigen::MatrixXd ml_matrix(double alpha, double beta, const Eigen::MatrixXd& m);

struct PowerKernel {
  double mu;  // > 0
};

/// g_mu(t) = t^{mu-1} / Gamma(mu), t > 0.
double g_kernel(const PowerKernel& k, double t);

/// A^mu - B^mu for A >= B >= 0 without cancellation when A-B is small.
double power_diff(double a, double b, double mu);

}  // namespace hilferstab::specfun
