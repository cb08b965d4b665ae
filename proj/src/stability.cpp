#include "stability.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "errors.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace hilferstab::stability {

namespace {

constexpr double kEssSupInflation = 1e-6;
constexpr double kTrendWindow = 0.10;   // last 10% of nodes
constexpr double kTrendGrowth = 0.02;   // relative sup growth that withholds

// deterministic scalar RNG (fully specified, byte-stable across platforms)
struct SplitMix {
  std::uint64_t state;
  explicit SplitMix(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() {  // in (0, 1)
    return (next() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }
  double normal() {  // Box-Muller, one value per call
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
};

struct ScalarFns {
  expr::BoundExpression u;
  expr::BoundExpression ell;
  explicit ScalarFns(const solver::ProblemSpec& p)
      : u(p.u, {"t"}), ell(p.ell, {"t"}) {}
  double mod_u_ell(double t) const { return std::abs(u(&t)) * ell(&t); }
};

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().maxCoeff();
}

std::string certificate_note() {
  return "exponential envelope fitted on the bounded factor ||G_alpha(t)||; "
         "the literal ||T_alpha|| <= delta e^{wt} is unattainable near t=0 for "
         "alpha < 1, so the sampled-perturbation verifier is the ground truth";
}

}  // namespace

UHCertificate uh_certify_finite(const solver::ProblemSpec& p,
                                const resolvent::ExpBound& bound) {
  const ScalarFns fns(p);
  const double t_end = p.horizon;
  quad::AdaptiveOptions opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-14;
  const double integral = quad::adaptive_gk(
      [&](double s) { return std::exp(bound.w * (t_end - s)) * fns.mod_u_ell(s); },
      0.0, t_end, opt);

  UHCertificate cert;
  cert.regime = Regime::Finite;
  cert.delta = bound.delta;
  cert.w = bound.w;
  cert.horizon = t_end;
  cert.gamma = p.gamma();
  cert.lambda_tilde =
      bound.delta * std::pow(t_end, 1.0 - cert.gamma) * integral;
  cert.stable = cert.lambda_tilde < 1.0;
  if (cert.stable) cert.c = 1.0 / (1.0 - cert.lambda_tilde);
  cert.note = certificate_note();
  return cert;
}

UHCertificate uh_certify_infinite(const solver::ProblemSpec& p,
                                  const resolvent::ResolventTable& table) {
  const ScalarFns fns(p);
  const std::vector<double>& mesh = table.mesh();
  const std::size_t nodes = mesh.size();
  const double alpha = table.alpha();
  const double gamma = table.gamma();
  table.ensure_midpoints();

  // g(s) = ell(s)|u(s)| sampled; the convolution against ||T_alpha(t-s)||
  // mirrors the solver quadrature with matrix norms in place of matrices.
  std::vector<double> g(nodes);
  for (std::size_t i = 0; i < nodes; ++i) g[i] = fns.mod_u_ell(mesh[i]);

  const double norm_g0 = spectral_norm(table.g_alpha(0.0));
  std::vector<double> running(nodes, 0.0);
  double sup = 0.0;
  std::size_t sup_at = 0;
  for (std::size_t j = 1; j < nodes; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < j; ++i) {
      const double big = mesh[j] - mesh[i];
      const double small = mesh[j] - mesh[i + 1];
      const double m0 = specfun::power_diff(big, small, alpha) / alpha;
      const double m1 = big * m0 -
                        specfun::power_diff(big, small, alpha + 1.0) / (alpha + 1.0);
      const double slope = m1 / (mesh[i + 1] - mesh[i]);
      acc += spectral_norm(table.g_mid(j, i)) *
             (g[i] * (m0 - slope) + g[i + 1] * slope);
    }
    {  // end cell: ||G|| interpolated linearly in lag^alpha
      const std::size_t i = j - 1;
      const double h = mesh[j] - mesh[i];
      const double h_pow = std::pow(h, alpha);
      const double ng_end = spectral_norm(table.g_end(j));
      const double dg = ng_end - norm_g0;
      const double df = g[i] - g[j];
      acc += h_pow * (norm_g0 * (g[j] / alpha + df / (alpha + 1.0)) +
                      dg * (g[j] / (2.0 * alpha) + df / (2.0 * alpha + 1.0)));
    }
    running[j] = std::pow(mesh[j], 1.0 - gamma) * acc;
    if (running[j] > sup) {
      sup = running[j];
      sup_at = j;
    }
  }

  UHCertificate cert;
  cert.regime = Regime::Infinite;
  cert.horizon = mesh.back();
  cert.gamma = gamma;
  cert.delta = 1.0;
  cert.w = 0.0;
  cert.truncated_sup = true;
  cert.lambda_tilde = sup;
  cert.note = "truncated-sup certificate on [0, T_max]";

  if (sup > 0.0) {
    // trend over the last 10% of nodes: a still-growing running sup means the
    // truncation horizon has not captured it
    const std::size_t window = std::max<std::size_t>(2, nodes / 10);
    const std::size_t j0 = nodes - window;
    double w_max = 0.0, w_start = running[j0];
    for (std::size_t j = j0; j < nodes; ++j) w_max = std::max(w_max, running[j]);
    const bool sup_in_tail = sup_at >= j0;
    const double growth = (running[nodes - 1] - w_start) / std::max(sup, 1e-300);
    if (sup_in_tail && growth > kTrendGrowth)
      throw Error(ErrorCode::TruncationInconclusive,
                  "uh_certify_infinite: running sup still grows at T_max (" +
                      std::to_string(100.0 * growth) + "% over the last window)");
  }
  cert.stable = cert.lambda_tilde < 1.0;
  if (cert.stable) cert.c = 1.0 / (1.0 - cert.lambda_tilde);
  return cert;
}

double uhr_constant(double delta, double rho, double k, double horizon,
                    double gamma, double alpha_g, double beta_g) {
  const double q = delta * rho * k * std::pow(horizon, 1.0 - gamma);
  return beta_g / ((1.0 - q) * alpha_g);
}

UHRCertificate uhr_certify(const solver::ProblemSpec& p,
                           const resolvent::ExpBound& bound,
                           const expr::Expression& g, const expr::Expression& phi,
                           double k, Regime regime,
                           const std::vector<double>& mesh) {
  if (!(k > 0.0))
    throw Error(ErrorCode::InvalidArgument, "uhr_certify: K must be positive");
  const ScalarFns fns(p);
  expr::BoundExpression gf(g, {"t"});
  expr::BoundExpression phif(phi, {"t"});
  const double t_end = mesh.back();

  // Eq-style envelope condition int_0^t phi <= K phi(t), checked node-wise
  quad::AdaptiveOptions opt;
  opt.rel_tol = 1e-11;
  opt.abs_tol = 1e-14;
  double cumulative = 0.0;
  for (std::size_t j = 1; j < mesh.size(); ++j) {
    cumulative += quad::adaptive_gk([&](double s) { return phif(&s); },
                                    mesh[j - 1], mesh[j], opt);
    const double phi_j = phif(&mesh[j]);
    if (!(phi_j > 0.0))
      throw Error(ErrorCode::InvalidArgument,
                  "uhr_certify: phi must be positive on (0,T] (node " +
                      std::to_string(j) + ")");
    if (cumulative > k * phi_j * (1.0 + 1e-9) + 1e-14)
      throw PhiConditionError(j, mesh[j], cumulative, k * phi_j);
  }

  UHRCertificate cert;
  cert.regime = regime;
  cert.k = k;
  cert.delta = bound.delta;
  cert.w = bound.w;
  cert.horizon = t_end;
  cert.gamma = p.gamma();

  // ess-sup of ell|u|e^{w(T-s)} over the mesh, ties kept at the smallest t
  double rho = 0.0;
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    const double val =
        fns.mod_u_ell(mesh[j]) * std::exp(bound.w * (t_end - mesh[j]));
    if (val > rho) rho = val;
  }
  cert.rho = rho * (1.0 + kEssSupInflation);

  double a_g = std::numeric_limits<double>::infinity();
  double b_g = 0.0;
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    double t = mesh[j];
    const double phi_j = phif(&t);
    const double g_j = gf(&t);
    if (!(phi_j > 0.0) || !(g_j > 0.0))
      throw Error(ErrorCode::InvalidArgument,
                  "uhr_certify: G and phi must be positive (node " +
                      std::to_string(j) + ")");
    const double ratio = g_j / phi_j;
    a_g = std::min(a_g, ratio);
    b_g = std::max(b_g, ratio);
  }
  cert.alpha_g = a_g;
  cert.beta_g = b_g;

  const double t_pow = std::pow(t_end, 1.0 - cert.gamma);
  if (regime == Regime::Finite) {
    cert.contraction = cert.delta * cert.rho * cert.k * t_pow;
    cert.stable = cert.contraction < 1.0;
    if (cert.stable)
      cert.c_g = uhr_constant(cert.delta, cert.rho, cert.k, t_end, cert.gamma,
                              cert.alpha_g, cert.beta_g);
    cert.note = certificate_note();
  } else {
    cert.truncated = true;
    cert.contraction = cert.rho * cert.k * t_pow;
    // the bound constant 1/(1 - K rho) needs K rho < 1 as well
    cert.stable = cert.contraction < 1.0 && cert.k * cert.rho < 1.0;
    if (cert.stable) cert.c_g = 1.0 / (1.0 - cert.k * cert.rho);
    cert.note = "truncation-dependent certificate on [0, T_max]; " +
                certificate_note();
  }
  return cert;
}

double weighted_residual(const solver::ProblemSpec& p,
                         const solver::WeightedTrajectory& theta,
                         const resolvent::ResolventTable& table) {
  return solver::weighted_distance(theta, solver::apply_lambda(p, theta, table));
}

namespace {

// node-wise weighted residual, for envelope checks
std::vector<double> residual_profile(const solver::ProblemSpec& p,
                                     const solver::WeightedTrajectory& theta,
                                     const resolvent::ResolventTable& table) {
  const solver::WeightedTrajectory image = solver::apply_lambda(p, theta, table);
  std::vector<double> out(theta.w.size());
  for (std::size_t j = 0; j < theta.w.size(); ++j)
    out[j] = (theta.w[j] - image.w[j]).norm();
  return out;
}

// smooth random field in weighted coordinates, sup-normalized to 1
std::vector<Eigen::VectorXd> random_bump(const std::vector<double>& mesh,
                                         Eigen::Index dim, SplitMix& rng) {
  const int harmonics = 3;
  std::vector<Eigen::VectorXd> bump(mesh.size(), Eigen::VectorXd::Zero(dim));
  const double t_end = mesh.back();
  for (Eigen::Index c = 0; c < dim; ++c) {
    const double c0 = rng.normal();
    const double c1 = rng.normal();
    const double c2 = rng.normal();
    double a[harmonics], b[harmonics];
    for (int m = 0; m < harmonics; ++m) {
      a[m] = rng.normal() / (1.0 + m);
      b[m] = rng.normal() / (1.0 + m);
    }
    for (std::size_t j = 0; j < mesh.size(); ++j) {
      const double tau = mesh[j] / t_end;
      double val = c0 + c1 * (2.0 * tau - 1.0) + c2 * (2.0 * tau - 1.0) * (2.0 * tau - 1.0);
      for (int m = 0; m < harmonics; ++m)
        val += a[m] * std::sin((m + 1) * M_PI * tau) +
               b[m] * std::cos((m + 1) * M_PI * tau);
      bump[j](c) = val;
    }
  }
  double sup = 0.0;
  for (const auto& v : bump) sup = std::max(sup, v.norm());
  for (auto& v : bump) v /= sup;
  return bump;
}

solver::WeightedTrajectory shifted(const solver::WeightedTrajectory& v,
                                   const std::vector<Eigen::VectorXd>& bump,
                                   double scale) {
  solver::WeightedTrajectory theta = v;
  for (std::size_t j = 0; j < theta.w.size(); ++j)
    theta.w[j] += scale * bump[j];
  return theta;
}

}  // namespace

std::vector<solver::WeightedTrajectory> sample_perturbations(
    const solver::ProblemSpec& p, const solver::WeightedTrajectory& v,
    const resolvent::ResolventTable& table, double epsilon, int count,
    std::uint64_t seed) {
  if (epsilon < 0.0)
    throw Error(ErrorCode::InvalidArgument, "sample_perturbations: epsilon >= 0");
  std::vector<solver::WeightedTrajectory> out;
  out.reserve(count);
  if (epsilon == 0.0) {
    for (int i = 0; i < count; ++i) out.push_back(v);
    return out;
  }
  const double floor = weighted_residual(p, v, table);
  if (floor > 0.4 * epsilon)
    throw Error(ErrorCode::RescaleFailure,
                "sample_perturbations: the fixed point's own residual (" +
                    std::to_string(floor) + ") leaves no room below epsilon");

  for (int index = 0; index < count; ++index) {
    SplitMix rng(seed ^ (0x5851f42d4c957f2dULL * (index + 1)));
    const auto bump = random_bump(v.mesh, v.w.front().size(), rng);
    double scale = 0.75 * epsilon;
    bool placed = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      const double res = weighted_residual(p, shifted(v, bump, scale), table);
      if (res >= 0.5 * epsilon && res <= epsilon) {
        out.push_back(shifted(v, bump, scale));
        placed = true;
        break;
      }
      if (!(res > 0.0) || !std::isfinite(res))
        throw Error(ErrorCode::RescaleFailure,
                    "sample_perturbations: degenerate residual response");
      scale *= 0.75 * epsilon / res;
    }
    if (!placed)
      throw Error(ErrorCode::RescaleFailure,
                  "sample_perturbations: could not land the residual in "
                  "[eps/2, eps] for sample " +
                      std::to_string(index));
  }
  return out;
}

std::vector<solver::WeightedTrajectory> sample_perturbations_enveloped(
    const solver::ProblemSpec& p, const solver::WeightedTrajectory& v,
    const resolvent::ResolventTable& table, const expr::Expression& g, int count,
    std::uint64_t seed) {
  expr::BoundExpression gf(g, {"t"});
  std::vector<double> envelope(v.mesh.size());
  for (std::size_t j = 0; j < v.mesh.size(); ++j) {
    double t = v.mesh[j];
    envelope[j] = gf(&t);
    if (!(envelope[j] > 0.0))
      throw Error(ErrorCode::InvalidArgument,
                  "sample_perturbations_enveloped: G must be positive");
  }
  auto margin = [&](const solver::WeightedTrajectory& theta) {
    const auto profile = residual_profile(p, theta, table);
    double worst = 0.0;
    for (std::size_t j = 0; j < profile.size(); ++j)
      worst = std::max(worst, profile[j] / envelope[j]);
    return worst;  // must land in [0.5, 0.9]
  };

  std::vector<solver::WeightedTrajectory> out;
  out.reserve(count);
  const double floor = margin(v);
  if (floor > 0.4)
    throw Error(ErrorCode::RescaleFailure,
                "sample_perturbations_enveloped: fixed-point residual already "
                "fills the envelope");
  for (int index = 0; index < count; ++index) {
    SplitMix rng(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    const auto bump = random_bump(v.mesh, v.w.front().size(), rng);
    double scale = 0.7 * envelope.back();
    bool placed = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      const double m = margin(shifted(v, bump, scale));
      if (m >= 0.5 && m <= 0.9) {
        out.push_back(shifted(v, bump, scale));
        placed = true;
        break;
      }
      if (!(m > 0.0) || !std::isfinite(m))
        throw Error(ErrorCode::RescaleFailure,
                    "sample_perturbations_enveloped: degenerate response");
      scale *= 0.7 / m;
    }
    if (!placed)
      throw Error(ErrorCode::RescaleFailure,
                  "sample_perturbations_enveloped: could not shape sample " +
                      std::to_string(index));
  }
  return out;
}

PerturbationReport verify_uh(const solver::ProblemSpec& p,
                             const UHCertificate& cert,
                             const std::vector<solver::WeightedTrajectory>& samples,
                             const solver::WeightedTrajectory& v,
                             const resolvent::ResolventTable& table,
                             double tol_verify) {
  if (!cert.stable)
    throw Error(ErrorCode::InvalidArgument,
                "verify_uh: certificate is not stable (lambda_tilde >= 1)");
  PerturbationReport report;
  const double c = *cert.c;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    ReportRow row;
    row.index = static_cast<int>(s);
    row.eps_hat = weighted_residual(p, samples[s], table);
    row.distance = solver::weighted_distance(samples[s], v);
    row.bound = c * row.eps_hat;
    row.pass = row.distance <= row.bound * (1.0 + tol_verify);
    if (row.bound > 0.0)
      report.max_slack = std::max(report.max_slack, row.distance / row.bound);
    if (!row.pass) {
      ++report.violations;
      char buf[128];
      std::snprintf(buf, sizeof(buf), "distance %.6e exceeds bound %.6e",
                    row.distance, row.bound);
      row.note = buf;
    }
    report.rows.push_back(std::move(row));
  }
  report.pass_rate = samples.empty()
                         ? 1.0
                         : 1.0 - double(report.violations) / samples.size();
  return report;
}

PerturbationReport verify_uhr(const solver::ProblemSpec& p,
                              const UHRCertificate& cert,
                              const std::vector<solver::WeightedTrajectory>& samples,
                              const solver::WeightedTrajectory& v,
                              const resolvent::ResolventTable& table,
                              const expr::Expression& g, double tol_verify) {
  if (!cert.stable)
    throw Error(ErrorCode::InvalidArgument,
                "verify_uhr: certificate is not stable");
  expr::BoundExpression gf(g, {"t"});
  std::vector<double> envelope(v.mesh.size());
  for (std::size_t j = 0; j < v.mesh.size(); ++j) {
    double t = v.mesh[j];
    envelope[j] = gf(&t);
  }

  PerturbationReport report;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto profile = residual_profile(p, samples[s], table);
    double premise = 0.0;
    std::size_t premise_at = 0;
    for (std::size_t j = 0; j < profile.size(); ++j) {
      if (profile[j] / envelope[j] > premise) {
        premise = profile[j] / envelope[j];
        premise_at = j;
      }
    }
    if (premise > 1.0 + 1e-9)
      throw Error(ErrorCode::SampleNotGBounded,
                  "verify_uhr: sample " + std::to_string(s) +
                      " violates the envelope premise at node " +
                      std::to_string(premise_at));

    ReportRow row;
    row.index = static_cast<int>(s);
    row.eps_hat = premise;  // G-relative residual
    row.bound = cert.c_g;
    double worst = 0.0;
    std::size_t worst_at = 0;
    for (std::size_t j = 0; j < profile.size(); ++j) {
      const double ratio = (samples[s].w[j] - v.w[j]).norm() / envelope[j];
      if (ratio > worst) {
        worst = ratio;
        worst_at = j;
      }
    }
    row.distance = worst;  // max_j ||t^{1-gamma}(theta - v)|| / G(t_j)
    row.pass = worst <= cert.c_g * (1.0 + tol_verify);
    if (cert.c_g > 0.0)
      report.max_slack = std::max(report.max_slack, worst / cert.c_g);
    if (!row.pass) {
      ++report.violations;
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "node %zu (t=%.6g): G-relative distance %.6e exceeds C_G %.6e",
                    worst_at, v.mesh[worst_at], worst, cert.c_g);
      row.note = buf;
    }
    report.rows.push_back(std::move(row));
  }
  report.pass_rate = samples.empty()
                         ? 1.0
                         : 1.0 - double(report.violations) / samples.size();
  return report;
}

std::string PerturbationReport::csv() const {
  std::string out = "index,eps_hat,distance,bound,pass\n";
  char buf[192];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%d\n", row.index,
                  row.eps_hat, row.distance, row.bound, row.pass ? 1 : 0);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "# summary: samples=%zu violations=%d pass_rate=%.6f max_slack=%.17g\n",
                rows.size(), violations, pass_rate, max_slack);
  out += buf;
  return out;
}

LipschitzEstimate estimate_lipschitz(const solver::ProblemSpec& p,
                                     const std::vector<double>& mesh,
                                     const Eigen::VectorXd& box_lo,
                                     const Eigen::VectorXd& box_hi, int samples,
                                     std::uint64_t seed) {
  const Eigen::Index n = p.dim();
  if (box_lo.size() != n || box_hi.size() != n)
    throw Error(ErrorCode::InvalidArgument,
                "estimate_lipschitz: box dimensions do not match the state");
  for (Eigen::Index c = 0; c < n; ++c)
    if (!(box_hi(c) > box_lo(c)))
      throw Error(ErrorCode::InvalidArgument, "estimate_lipschitz: empty box");

  std::vector<std::string> scope{"t"};
  for (Eigen::Index c = 0; c < n; ++c) scope.push_back("x" + std::to_string(c + 1));
  std::vector<expr::BoundExpression> h;
  for (const auto& comp : p.h) h.emplace_back(comp, scope);
  expr::BoundExpression ell(p.ell, {"t"});

  auto eval_h = [&](double t, const Eigen::VectorXd& x) {
    std::vector<double> vals(1 + n);
    vals[0] = t;
    for (Eigen::Index c = 0; c < n; ++c) vals[1 + c] = x(c);
    Eigen::VectorXd out(n);
    for (Eigen::Index c = 0; c < n; ++c) out(c) = h[c](vals.data());
    return out;
  };

  LipschitzEstimate est;
  est.lhat.resize(mesh.size(), 0.0);
  SplitMix rng(seed);
  Eigen::VectorXd x(n), y(n);
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      for (Eigen::Index c = 0; c < n; ++c) {
        x(c) = box_lo(c) + (box_hi(c) - box_lo(c)) * rng.uniform();
        y(c) = box_lo(c) + (box_hi(c) - box_lo(c)) * rng.uniform();
      }
      const double dist = (x - y).norm();
      if (dist < 1e-12) continue;
      worst = std::max(worst,
                       (eval_h(mesh[j], x) - eval_h(mesh[j], y)).norm() / dist);
    }
    est.lhat[j] = worst;
    double t = mesh[j];
    const double declared = ell(&t);
    if (worst > declared * (1.0 + 1e-9) &&
        worst - declared > est.worst_excess) {
      est.exceeds_declared = true;
      est.worst_node = j;
      est.worst_excess = worst - declared;
    }
  }
  return est;
}

}  // namespace hilferstab::stability
