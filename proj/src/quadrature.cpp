#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "errors.hpp"

namespace hilferstab::quad {

namespace {

// (G7,K15) pair, QUADPACK dqk15 abscissae/weights (80-digit Fullerton values).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Gk15Result {
  double value;
  double error;
};

Gk15Result gk15_eval(const std::function<double(double)>& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  double resabs = std::abs(resk);
  double fv1[7], fv2[7];
  for (int j = 0; j < 7; ++j) {
    const double absc = half * kXgk[j];
    fv1[j] = f(centre - absc);
    fv2[j] = f(centre + absc);
    const double fsum = fv1[j] + fv2[j];
    if (j % 2 == 1) resg += kWg[j / 2] * fsum;
    resk += kWgk[j] * fsum;
    resabs += kWgk[j] * (std::abs(fv1[j]) + std::abs(fv2[j]));
  }
  const double reskh = resk * 0.5;
  double resasc = kWgk[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j)
    resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
  resasc *= std::abs(half);
  resabs *= std::abs(half);
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  return {resk * half, err};
}

void adapt(const std::function<double(double)>& f, double a, double b,
           double tol, int depth, const AdaptiveOptions& opt, double& acc) {
  const Gk15Result r = gk15_eval(f, a, b);
  // width at rounding resolution: no further bisection is meaningful
  const bool exhausted = (b - a) <= 8.0 * std::numeric_limits<double>::epsilon() *
                                       std::max(std::abs(a), std::abs(b));
  if (r.error <= tol || r.error <= opt.abs_tol || exhausted) {
    acc += r.value;
    return;
  }
  if (depth >= opt.max_depth)
    throw Error(ErrorCode::QuadratureFailure,
                "adaptive quadrature stalled at depth " + std::to_string(depth) +
                    " on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  const double mid = 0.5 * (a + b);
  adapt(f, a, mid, 0.5 * tol, depth + 1, opt, acc);
  adapt(f, mid, b, 0.5 * tol, depth + 1, opt, acc);
}

}  // namespace

double gk15(const std::function<double(double)>& f, double a, double b,
            double* err_estimate) {
  const Gk15Result r = gk15_eval(f, a, b);
  if (err_estimate) *err_estimate = r.error;
  return r.value;
}

double adaptive_gk(const std::function<double(double)>& f, double a, double b,
                   const AdaptiveOptions& opt) {
  if (a == b) return 0.0;
  const Gk15Result probe = gk15_eval(f, a, b);
  const double scale = std::max(std::abs(probe.value), opt.abs_tol);
  double acc = 0.0;
  adapt(f, a, b, std::max(opt.abs_tol, opt.rel_tol * scale), 0, opt, acc);
  return acc;
}

Rule gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "gauss_legendre: n < 1");
  Rule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev initial guess, then Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.x[i] = -x;
    rule.x[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.w[i] = w;
    rule.w[n - 1 - i] = w;
  }
  return rule;
}

Rule mapped(const Rule& base, double a, double b) {
  Rule out = base;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < out.x.size(); ++i) {
    out.x[i] = mid + half * base.x[i];
    out.w[i] = half * base.w[i];
  }
  return out;
}

Rule gauss_jacobi01(int n, double p, double q) {
  if (!(p > -1.0) || !(q > -1.0))
    throw Error(ErrorCode::InvalidArgument, "gauss_jacobi01: exponents must be > -1");
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "gauss_jacobi01: n < 1");
  // Jacobi weight (1-x)^p (1+x)^q on [-1,1]; Golub-Welsch on the symmetric
  // tridiagonal recurrence matrix, then an affine map to [0,1] so that the
  // returned rule integrates (1-s)^p s^q f(s) over [0,1].
  const double a = p, b = q;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  auto diag = [&](int k) -> double {
    if (k == 0) return (b - a) / (a + b + 2.0);
    const double den = (2.0 * k + a + b) * (2.0 * k + a + b + 2.0);
    return (b * b - a * a) / den;
  };
  auto offsq = [&](int k) -> double {  // squared off-diagonal, k >= 1
    const double s = 2.0 * k + a + b;
    if (k == 1)
      return 4.0 * (1.0 + a) * (1.0 + b) /
             ((2.0 + a + b) * (2.0 + a + b) * (3.0 + a + b));
    return 4.0 * k * (k + a) * (k + b) * (k + a + b) /
           (s * s * (s + 1.0) * (s - 1.0));
  };
  for (int k = 0; k < n; ++k) {
    J(k, k) = diag(k);
    if (k >= 1) {
      const double e = std::sqrt(offsq(k));
      J(k, k - 1) = e;
      J(k - 1, k) = e;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::QuadratureFailure, "gauss_jacobi01: eigensolver failed");
  // mu0 = int_{-1}^{1} (1-x)^a (1+x)^b dx = 2^{a+b+1} B(a+1, b+1)
  const double log_mu0 = (a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) +
                         std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0);
  const double mu0 = std::exp(log_mu0);
  Rule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    const double xi = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.x[i] = 0.5 * (1.0 + xi);                 // map [-1,1] -> [0,1]
    rule.w[i] = mu0 * v0 * v0 / std::pow(2.0, a + b + 1.0);
  }
  return rule;
}

}  // namespace hilferstab::quad
