#include "specfun.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "errors.hpp"
#include "quadrature.hpp"

namespace hilferstab::specfun {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_nonpositive_integer(double x) {
  return x <= 0.0 && x == std::floor(x);
}

}  // namespace

double sinpi(double x) {
  const double r = x - std::round(x);
  const double s = std::sin(kPi * r);
  const long long n = static_cast<long long>(std::llround(x - r)) & 1;
  return n ? -s : s;
}

double log_abs_rgamma(double x, int* sign) {
  if (is_nonpositive_integer(x)) {
    *sign = 0;
    return -std::numeric_limits<double>::infinity();
  }
  if (x >= 0.5) {
    *sign = 1;
    return -std::lgamma(x);
  }
  // Reflection: 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi, with 1-x >= 0.5.
  const double s = sinpi(x);
  *sign = (s > 0.0) ? 1 : -1;
  return std::log(std::abs(s) / kPi) + std::lgamma(1.0 - x);
}

double rgamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  if (x >= 0.5) {
    if (x < 170.0) return 1.0 / std::tgamma(x);
    return std::exp(-std::lgamma(x));
  }
  int sign = 0;
  const double lg = log_abs_rgamma(x, &sign);
  return sign * std::exp(lg);
}

double power_diff(double a, double b, double mu) {
  if (b <= 0.0) return std::pow(a, mu);
  if (a == b) return 0.0;
  const double d = (a - b) / b;
  if (d < 0.25) return std::pow(b, mu) * std::expm1(mu * std::log1p(d));
  return std::pow(a, mu) - std::pow(b, mu);
}

double g_kernel(const PowerKernel& k, double t) {
  if (!(k.mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "g_kernel: mu must be > 0");
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "g_kernel: t must be > 0");
  return std::pow(t, k.mu - 1.0) * rgamma(k.mu);
}

namespace {

struct SeriesResult {
  double sum = 0.0;
  double max_term = 0.0;
  int terms = 0;
  bool converged = false;

  // The sum is meaningless once it sinks near the rounding floor of the
  // largest intermediate term; reject it well above that floor.
  bool trustworthy(double guard_ratio) const {
    if (!converged || !std::isfinite(sum)) return false;
    const double scale = std::max(std::abs(sum), 1e-300);
    if (max_term > guard_ratio * scale) return false;
    const double floor = max_term * std::numeric_limits<double>::epsilon() *
                         std::max(terms, 1);
    return std::abs(sum) > 1e3 * floor;
  }
};

// M_alpha(theta) = sum_{m>=0} (-theta)^m / (m! Gamma(1 - alpha(m+1))).
// Terms at Gamma poles are exactly zero and skipped.
SeriesResult wright_series(const WrightSpec& spec, double theta) {
  SeriesResult r;
  const double log_theta = std::log(theta);
  double prev_abs = std::numeric_limits<double>::infinity();
  int small_run = 0;  // consecutive small decreasing terms
  for (int m = 0; m < spec.max_terms; ++m) {
    int sign = 0;
    const double lr = log_abs_rgamma(1.0 - spec.alpha * (m + 1), &sign);
    if (sign == 0) continue;  // Gamma pole: the term is exactly zero
    const double abs_term = std::exp(m * log_theta - std::lgamma(m + 1.0) + lr);
    r.sum += ((m % 2 == 0) ? 1.0 : -1.0) * sign * abs_term;
    r.max_term = std::max(r.max_term, abs_term);
    ++r.terms;
    const double scale = std::max(std::abs(r.sum), 1e-300);
    // A single freak-small term is not convergence: near-integer alpha*(m+1)
    // makes sin(pi x) in the reflection nearly vanish mid-climb. Demand a run
    // of small, decreasing terms.
    if (abs_term <= spec.tol * scale && abs_term < prev_abs)
      ++small_run;
    else
      small_run = 0;
    prev_abs = abs_term;
    if (small_run >= 3 && m >= 6) {
      r.converged = true;
      break;
    }
  }
  return r;
}

// Steepest-descent evaluation for large theta. The Hankel representation
//   M_a(t) = (1/2 pi i) int_Ha exp(sigma - t sigma^a) sigma^{a-1} dsigma
// is collapsed onto the vertical line through the real saddle
// sigma* = (a t)^{1/(1-a)}; exp(h(sigma*)) is the exponential scale and is
// factored out before quadrature, so the remaining integral is O(1).
double wright_contour(double alpha, double theta) {
  using cplx = std::complex<double>;
  const double a = alpha;
  const double sigma = std::pow(a * theta, 1.0 / (1.0 - a));
  const double h_saddle = sigma - theta * std::pow(sigma, a);  // < 0
  if (h_saddle < -745.0) return 0.0;  // exp underflow: the value is subnormal-zero
  const double hpp = theta * a * (1.0 - a) * std::pow(sigma, a - 2.0);
  const double width = 1.0 / std::sqrt(std::max(hpp, 1e-300));

  auto log_amplitude = [&](double y) -> double {  // Re h(sigma + iy) - h_saddle
    const cplx s(sigma, y);
    return sigma - theta * std::pow(s, a).real() - h_saddle;
  };
  auto integrand = [&](double y) -> double {
    const cplx s(sigma, y);
    const cplx h = s - theta * std::pow(s, a);
    const cplx val = std::exp(h - h_saddle) * std::pow(s, a - 1.0);
    return val.real();
  };

  // Along the vertical line Re h only decreases away from the saddle; march
  // out until the amplitude is negligible.
  double ymax = 8.0 * width;
  while (log_amplitude(ymax) > -45.0) ymax *= 1.5;

  quad::AdaptiveOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-16;
  double integral = quad::adaptive_gk(integrand, 0.0, std::min(ymax, 12.0 * width), opt);
  if (ymax > 12.0 * width)
    integral += quad::adaptive_gk(integrand, 12.0 * width, ymax, opt);
  const double value = std::exp(h_saddle) * integral / kPi;
  if (!std::isfinite(value))
    throw SeriesDivergenceError("wright_m: contour evaluation not finite", theta);
  return value;
}

}  // namespace

double wright_m(const WrightSpec& spec, double theta) {
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "wright_m: alpha must lie in (0,1)");
  if (!(theta >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "wright_m: theta must be >= 0");
  if (theta == 0.0) return rgamma(1.0 - spec.alpha);

  const SeriesResult r = wright_series(spec, theta);
  if (r.trustworthy(spec.guard_ratio)) return r.sum;
  // Cancellation guard tripped (or series did not settle): asymptotic fallback.
  return wright_contour(spec.alpha, theta);
}

double wright_moment(const WrightSpec& spec, double deltabar) {
  if (!(deltabar >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "wright_moment: deltabar must be >= 0");
  auto f = [&](double theta) {
    const double m = wright_m(spec, theta);
    return deltabar == 0.0 ? m : std::pow(theta, deltabar) * m;
  };
  quad::AdaptiveOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-13;

  double total = 0.0;
  double lo = 0.0, hi = 1.0;
  int quiet = 0;
  for (int panel = 0; panel < 64; ++panel) {
    const double piece = quad::adaptive_gk(f, lo, hi, opt);
    total += piece;
    const double tail_sample = std::abs(f(hi));
    if (std::abs(piece) < 1e-13 * std::max(1.0, std::abs(total)) &&
        tail_sample < 1e-15 * std::max(1.0, std::abs(total))) {
      if (++quiet >= 2) return total;
    } else {
      quiet = 0;
    }
    lo = hi;
    hi = lo + std::min(4.0, 1.0 + 0.25 * lo);
    if (lo > 400.0)
      throw Error(ErrorCode::QuadratureFailure,
                  "wright_moment: integrand tail did not decay by theta=400");
  }
  throw Error(ErrorCode::QuadratureFailure, "wright_moment: panel budget exhausted");
}

namespace {

struct MlSeriesResult {
  double sum = 0.0;
  double max_term = 0.0;
  int terms = 0;
  bool converged = false;

  bool trustworthy(double guard_ratio) const {
    if (!converged || !std::isfinite(sum)) return false;
    const double scale = std::max(std::abs(sum), 1e-300);
    if (max_term > guard_ratio * scale) return false;
    const double floor = max_term * std::numeric_limits<double>::epsilon() *
                         std::max(terms, 1);
    return std::abs(sum) > 1e3 * floor;
  }
};

MlSeriesResult ml_series(double alpha, double beta, double z, int max_terms = 800) {
  MlSeriesResult r;
  const double log_abs_z = std::log(std::abs(z));
  double prev_abs = std::numeric_limits<double>::infinity();
  bool decreasing = false;
  for (int k = 0; k < max_terms; ++k) {
    int sign = 0;
    const double lr = log_abs_rgamma(alpha * k + beta, &sign);
    double term = 0.0, abs_term = 0.0;
    if (sign != 0) {
      const double lt = k * log_abs_z + lr;
      if (lt > 700.0) return r;  // would overflow; caller decides
      abs_term = std::exp(lt);
      term = abs_term * sign * ((z < 0.0 && k % 2 == 1) ? -1.0 : 1.0);
    }
    r.sum += term;
    r.max_term = std::max(r.max_term, abs_term);
    ++r.terms;
    if (abs_term > prev_abs) decreasing = false;
    else if (abs_term < prev_abs) decreasing = true;
    if (abs_term > 0.0) prev_abs = abs_term;
    if (decreasing && abs_term <= 1e-16 * std::max(std::abs(r.sum), 1e-300) && k >= 4) {
      r.converged = true;
      return r;
    }
  }
  return r;
}

// E_{a,b}(z) for z < 0, 0 < a < 1, 0 < b < 1 + a, via the Hankel contour
// collapsed onto the branch cut:
//   (1/pi) int_0^inf r^{a-b} e^{-r}
//          [ r^a sin(pi(1-b)) - z sin(pi(1-b+a)) ]
//          / ( r^{2a} - 2 r^a z cos(pi a) + z^2 ) dr
double ml_integral_negative(double a, double b, double z) {
  const double s1 = sinpi(1.0 - b);
  const double s2 = sinpi(1.0 - b + a);
  const double c = std::cos(kPi * a);
  auto f = [&](double r) -> double {
    if (r <= 0.0) return 0.0;
    const double ra = std::pow(r, a);
    const double den = ra * ra - 2.0 * ra * z * c + z * z;
    const double num = ra * s1 - z * s2;
    return std::pow(r, a - b) * std::exp(-r) * num / den;
  };
  quad::AdaptiveOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-16;
  // First panel [0,1]: substitute r = u^m so the fractional power r^{a-b}
  // becomes u^{m(a-b)+m-1} with exponent >= 3 (smooth enough for GK).
  double total = 0.0;
  const int m = std::max(1, static_cast<int>(std::ceil(4.0 / (a - b + 1.0))));
  if (m > 1) {
    auto g = [&](double u) { return f(std::pow(u, m)) * m * std::pow(u, m - 1); };
    total += quad::adaptive_gk(g, 0.0, 1.0, opt);
  } else {
    total += quad::adaptive_gk(f, 0.0, 1.0, opt);
  }
  // Denominator is smallest near r^a = |z cos(pi a)| when cos < 0; make that
  // point a panel boundary.
  std::vector<double> knots = {1.0, 4.0, 12.0, 45.0};
  if (c < 0.0) {
    const double peak = std::pow(std::abs(z * c), 1.0 / a);
    if (peak > 1.0 && peak < 45.0) knots.push_back(peak);
  }
  std::sort(knots.begin(), knots.end());
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    total += quad::adaptive_gk(f, knots[i], knots[i + 1], opt);
  return total / kPi;
}

// alpha = 1, z < 0: Kummer's transformation turns the alternating series into
//   E_{1,b}(z) = e^z / Gamma(b) * sum_k (b-1)_k (-z)^k / ((b)_k k!)
// whose terms carry a single fixed sign after k = 0; no cancellation.
double ml_alpha1_kummer(double beta, double z) {
  const double x = -z;
  double term = 1.0, sum = 1.0;
  for (int k = 0; k < 4000; ++k) {
    term *= (beta - 1.0 + k) * x / ((beta + k) * (k + 1.0));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && k > 4) break;
  }
  return std::exp(z) * rgamma(beta) * sum;
}

// alpha = 1, very negative z: algebraic asymptotic series (the e^z part is
// below double precision); truncated at its smallest term.
double ml_alpha1_asymptotic(double beta, double z) {
  double sum = 0.0;
  double p = 1.0 / z;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 40; ++k) {
    const double term = p * rgamma(beta - k);
    if (std::abs(term) > prev) break;
    sum -= term;
    prev = std::abs(term) > 0.0 ? std::abs(term) : prev;
    p /= z;
  }
  return sum;
}

}  // namespace

double mittag_leffler(double alpha, double beta, double z) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "mittag_leffler: alpha must lie in (0,1]");
  if (!(beta > 0.0))
    throw Error(ErrorCode::InvalidArgument, "mittag_leffler: beta must be > 0");
  if (z == 0.0) return rgamma(beta);
  if (alpha == 1.0 && beta == 1.0) return std::exp(z);

  if (z > -5.0) {
    const MlSeriesResult r = ml_series(alpha, beta, z);
    if (z >= 0.0) {
      // positive series has no cancellation: converged means usable
      if (r.converged) return r.sum;
      throw SeriesDivergenceError("mittag_leffler: series overflow at z", z);
    }
    if (r.trustworthy(1e6)) return r.sum;
    // fall through: negative z handled by the stable routes below
  }

  if (alpha < 1.0) {
    // Reduce the order below 1 with E_{a,b}(z) = rgamma(b) + z E_{a,b+a}(z),
    // i.e. E at order b+a is recovered as (E at order b - rgamma(b)) / z.
    double b = beta;
    int steps = 0;
    while (b >= 1.0 + 1e-12) {  // exits with b in (1-alpha, 1], so b > 0
      b -= alpha;
      ++steps;
    }
    double value = ml_integral_negative(alpha, b, z);
    for (int i = 0; i < steps; ++i) {
      value = (value - rgamma(b)) / z;
      b += alpha;
    }
    return value;
  }

  // alpha == 1.
  if (z <= -50.0) return ml_alpha1_asymptotic(beta, z);
  return ml_alpha1_kummer(beta, z);
}

Eigen::MatrixXd ml_matrix(double alpha, double beta, const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw Error(ErrorCode::InvalidArgument, "ml_matrix: matrix must be square");
  if (!m.allFinite())
    throw Error(ErrorCode::NonFinite, "ml_matrix: matrix has non-finite entries");
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  double sum_scale = 0.0;
  for (int k = 0; k < 600; ++k) {
    const double coeff = rgamma(alpha * k + beta);
    sum.noalias() += coeff * power;
    sum_scale = std::max(sum_scale, sum.norm());
    power = power * m;
    const double tail = power.norm() * std::abs(rgamma(alpha * (k + 1) + beta));
    if (!std::isfinite(power.norm()))
      throw Error(ErrorCode::NonFinite, "ml_matrix: series overflow");
    if (k > 4 && tail <= 1e-16 * std::max(sum_scale, 1e-300)) {
      // one more term for the road, then stop
      sum.noalias() += rgamma(alpha * (k + 1) + beta) * power;
      return sum;
    }
  }
  throw SeriesDivergenceError("ml_matrix: series did not converge in 600 terms",
                              m.norm());
}

}  // namespace hilferstab::specfun
