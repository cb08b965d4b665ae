#include "resolvent.hpp"

#include <cmath>

#include "errors.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace hilferstab::resolvent {

Eigen::MatrixXd expm(const Eigen::MatrixXd& m) {
  // Pade-13 with scaling and squaring (Higham's coefficients).
  static const double b[] = {64764752532480000.0, 32382376266240000.0,
                             7771770303897600.0,  1187353796428800.0,
                             129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,
                             1323241920.0,        40840800.0,
                             960960.0,            16380.0,
                             182.0,               1.0};
  const Eigen::Index n = m.rows();
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
  int squarings = 0;
  Eigen::MatrixXd a = m;
  const double theta13 = 5.371920351148152;
  if (norm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    a /= std::pow(2.0, squarings);
  }
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a2 * a4;
  Eigen::MatrixXd u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
           b[3] * a2 + b[1] * ident);
  Eigen::MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                      b[4] * a4 + b[2] * a2 + b[0] * ident;
  Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

namespace {

constexpr int kPanelNodes = 16;

double wright_density(const specfun::WrightSpec& spec, double theta) {
  return spec.alpha * theta * specfun::wright_m(spec, theta);
}

}  // namespace

WrightRule WrightRule::build(double alpha, double zeta_pos, double zeta_neg,
                             double tol) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "WrightRule: alpha must lie in (0,1)");
  specfun::WrightSpec spec{alpha};
  zeta_pos = std::max(0.0, zeta_pos);
  zeta_neg = std::max(0.0, zeta_neg);

  // Truncation point: the positive-exponential envelope of the neglected
  // tail must fall below tol.
  double theta_max = 1.0;
  auto envelope = [&](double th) {
    return wright_density(spec, th) * std::exp(std::min(zeta_pos * th, 680.0));
  };
  while (envelope(theta_max) > 1e-3 * tol && theta_max < 600.0) theta_max *= 1.25;

  // Panel refinement against the stiffest integrands the rule will face.
  auto driver = [&](double th) {
    const double density = wright_density(spec, th);
    return density * (std::exp(std::min(zeta_pos * th, 680.0)) +
                      std::exp(-zeta_neg * th));
  };
  std::vector<std::pair<double, double>> panels{{0.0, theta_max}};
  const double global_scale =
      std::max(std::abs(quad::gk15(driver, 0.0, theta_max, nullptr)), 1e-30);
  for (int round = 0; round < 40; ++round) {
    std::vector<std::pair<double, double>> next;
    bool split_any = false;
    for (const auto& [lo, hi] : panels) {
      double err = 0.0;
      quad::gk15(driver, lo, hi, &err);
      if (err > 0.02 * tol * global_scale && (hi - lo) > 1e-12 * theta_max) {
        next.emplace_back(lo, 0.5 * (lo + hi));
        next.emplace_back(0.5 * (lo + hi), hi);
        split_any = true;
      } else {
        next.emplace_back(lo, hi);
      }
    }
    panels.swap(next);
    if (!split_any) break;
  }

  const quad::Rule gl = quad::gauss_legendre(kPanelNodes);
  WrightRule rule;
  rule.alpha = alpha;
  for (const auto& [lo, hi] : panels) {
    const quad::Rule mapped = quad::mapped(gl, lo, hi);
    for (int k = 0; k < kPanelNodes; ++k) {
      rule.theta.push_back(mapped.x[k]);
      rule.weight.push_back(mapped.w[k] * wright_density(spec, mapped.x[k]));
    }
  }

  // Self-check: the rule must reproduce the exact first moment 1/Gamma(alpha).
  const double total = rule.kernel_real(0.0);
  const double want = specfun::rgamma(alpha);
  if (std::abs(total - want) > 100.0 * tol * std::abs(want))
    throw Error(ErrorCode::QuadratureFailure,
                "WrightRule: moment self-check failed (got " +
                    std::to_string(total) + ", want " + std::to_string(want) + ")");
  return rule;
}

std::complex<double> WrightRule::kernel(std::complex<double> z) const {
  std::complex<double> acc = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k)
    acc += weight[k] * std::exp(z * theta[k]);
  return acc;
}

double WrightRule::kernel_real(double z) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k)
    acc += weight[k] * std::exp(z * theta[k]);
  return acc;
}

ResolventTable::ResolventTable(const MatrixGenerator& gen, double alpha,
                               double beta, std::vector<double> mesh,
                               double quad_tol)
    : gen_(gen),
      alpha_(alpha),
      beta_(beta),
      gamma_(alpha + beta - alpha * beta),
      quad_tol_(quad_tol),
      mesh_(std::move(mesh)) {
  if (!(alpha_ > 0.0 && alpha_ <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "ResolventTable: alpha in (0,1]");
  if (!(beta_ >= 0.0 && beta_ <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "ResolventTable: beta in [0,1]");
  if (mesh_.size() < 2 || mesh_.front() != 0.0)
    throw Error(ErrorCode::InvalidArgument, "ResolventTable: mesh must start at 0");
  for (std::size_t i = 0; i + 1 < mesh_.size(); ++i)
    if (!(mesh_[i + 1] > mesh_[i]))
      throw Error(ErrorCode::InvalidArgument,
                  "ResolventTable: mesh not strictly increasing");
  if (gen_.a.rows() != gen_.a.cols() || gen_.dim() < 1)
    throw Error(ErrorCode::InvalidArgument, "ResolventTable: generator not square");
  if (!gen_.a.allFinite())
    throw Error(ErrorCode::NonFinite, "ResolventTable: generator has NaN/inf");

  // Spectral factorization: the quadrature kernel then acts on eigenvalues.
  Eigen::EigenSolver<Eigen::MatrixXd> es(gen_.a);
  if (es.info() == Eigen::Success && gen_.dim() >= 1) {
    Eigen::MatrixXcd v = es.eigenvectors();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin > 0.0 && smax / smin < 1e6) {
      diagonalizable_ = true;
      v_ = v;
      v_inv_ = v.inverse();
      eig_ = es.eigenvalues();
    }
  }

  if (alpha_ < 1.0) {
    const double t_max_pow = std::pow(mesh_.back(), alpha_);
    double re_max = 0.0, re_min = 0.0;
    if (diagonalizable_) {
      re_max = eig_.real().maxCoeff();
      re_min = eig_.real().minCoeff();
    } else {
      const double norm = gen_.a.norm();
      re_max = norm;
      re_min = -norm;
    }
    rule_ = WrightRule::build(alpha_, std::max(0.0, re_max) * t_max_pow,
                              std::max(0.0, -re_min) * t_max_pow, quad_tol_);
  }

  const std::size_t n = mesh_.size();
  g_nodes_.reserve(n);
  for (std::size_t j = 0; j < n; ++j) g_nodes_.push_back(eval_g(mesh_[j]));

  // S_{alpha,beta}(t) = I^{beta(1-alpha)} T_alpha (t)
  //                   = t^{gamma-1}/Gamma(b) * int_0^1 (1-s)^{b-1} s^{alpha-1}
  //                     G_alpha(t s) ds,  b = beta(1-alpha),
  // b = 0 degenerates to S = T_alpha itself.
  const double b = beta_ * (1.0 - alpha_);
  s_nodes_.assign(n, Eigen::MatrixXd());
  if (b == 0.0) {
    for (std::size_t j = 1; j < n; ++j)
      s_nodes_[j] = std::pow(mesh_[j], alpha_ - 1.0) * g_nodes_[j];
  } else {
    // G(t s) is analytic in u = s^alpha, not in s; integrate the left part in
    // u (where s^{alpha-1} ds = du/alpha exactly) over dyadic panels that
    // absorb the weak (1-u^{1/alpha})^{b-1} kink, and the right part in s with
    // the exact (1-s)^{b-1} Jacobi endpoint weight.
    std::vector<double> sig_nodes, sig_weights;  // weights absorb everything
    const double u_split = 0.5;
    const quad::Rule gl = quad::gauss_legendre(12);
    double hi = u_split;
    for (int panel = 0; panel < 15; ++panel) {
      const double lo = (panel == 14) ? 0.0 : hi * 0.5;
      const quad::Rule part = quad::mapped(gl, lo, hi);
      for (std::size_t k = 0; k < part.x.size(); ++k) {
        const double u = part.x[k];
        sig_nodes.push_back(std::pow(u, 1.0 / alpha_));
        sig_weights.push_back(part.w[k] / alpha_ *
                              std::pow(1.0 - std::pow(u, 1.0 / alpha_), b - 1.0));
      }
      hi = lo;
    }
    const double sig_split = std::pow(u_split, 1.0 / alpha_);
    const quad::Rule jac = quad::gauss_jacobi01(20, b - 1.0, 0.0);
    const double span_pow = std::pow(1.0 - sig_split, b);
    for (std::size_t k = 0; k < jac.x.size(); ++k) {
      const double sigma = sig_split + (1.0 - sig_split) * jac.x[k];
      sig_nodes.push_back(sigma);
      sig_weights.push_back(span_pow * jac.w[k] * std::pow(sigma, alpha_ - 1.0));
    }

    const double inv_gamma_b = specfun::rgamma(b);
    for (std::size_t j = 1; j < n; ++j) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim(), dim());
      for (std::size_t k = 0; k < sig_nodes.size(); ++k)
        acc.noalias() += sig_weights[k] * eval_g(mesh_[j] * sig_nodes[k]);
      s_nodes_[j] = std::pow(mesh_[j], gamma_ - 1.0) * inv_gamma_b * acc;
    }
  }
}

Eigen::MatrixXd ResolventTable::eval_g(double lag) const {
  const Eigen::Index n = dim();
  if (alpha_ == 1.0) return expm(lag * gen_.a);
  if (lag == 0.0)
    return specfun::rgamma(alpha_) * Eigen::MatrixXd::Identity(n, n);
  const double lag_pow = std::pow(lag, alpha_);
  if (diagonalizable_) {
    Eigen::VectorXcd f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::complex<double> z = eig_(i) * lag_pow;
      f(i) = (std::abs(z.imag()) < 1e-14) ? std::complex<double>(
                                                rule_.kernel_real(z.real()), 0.0)
                                          : rule_.kernel(z);
    }
    const Eigen::MatrixXcd g = v_ * f.asDiagonal() * v_inv_;
    return g.real();
  }
  // defective generator: quadrature against matrix exponentials
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < rule_.theta.size(); ++k)
    acc.noalias() += rule_.weight[k] * expm((lag_pow * rule_.theta[k]) * gen_.a);
  return acc;
}

Eigen::MatrixXd ResolventTable::g_alpha(double lag) const {
  if (!(lag >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "g_alpha: lag must be >= 0");
  return eval_g(lag);
}

Eigen::MatrixXd ResolventTable::t_alpha(double lag) const {
  if (!(lag > 0.0))
    throw Error(ErrorCode::InvalidArgument, "t_alpha: lag must be > 0");
  return std::pow(lag, alpha_ - 1.0) * eval_g(lag);
}

const Eigen::MatrixXd& ResolventTable::s_at(std::size_t j) const {
  if (j == 0 || j >= s_nodes_.size())
    throw Error(ErrorCode::InvalidArgument,
                "s_at: S is tabulated at nodes t_j > 0 only");
  return s_nodes_[j];
}

const Eigen::MatrixXd& ResolventTable::g_at_node(std::size_t j) const {
  if (j >= g_nodes_.size())
    throw Error(ErrorCode::InvalidArgument, "g_at_node: index out of range");
  return g_nodes_[j];
}

void ResolventTable::ensure_midpoints() const {
  if (!g_mid_.empty()) return;
  const std::size_t n = mesh_.size();
  g_mid_.resize(n * (n - 1) / 2);
  g_end_.resize(n);
  for (std::size_t j = 1; j < n; ++j) {
    const std::size_t row = (j - 1) * j / 2;
    for (std::size_t i = 0; i < j; ++i) {
      const double mid = 0.5 * (mesh_[i] + mesh_[i + 1]);
      g_mid_[row + i] = eval_g(mesh_[j] - mid);
    }
    g_end_[j] = eval_g(mesh_[j] - mesh_[j - 1]);
  }
}

const Eigen::MatrixXd& ResolventTable::g_mid(std::size_t j, std::size_t i) const {
  ensure_midpoints();
  return g_mid_[(j - 1) * j / 2 + i];
}

const Eigen::MatrixXd& ResolventTable::g_end(std::size_t j) const {
  ensure_midpoints();
  if (j == 0 || j >= g_end_.size())
    throw Error(ErrorCode::InvalidArgument, "g_end: node index out of range");
  return g_end_[j];
}

ExpBound fit_exp_bound(const ResolventTable& table) {
  const auto& mesh = table.mesh();
  const std::size_t n = mesh.size();
  std::vector<double> log_norm(n);
  for (std::size_t j = 0; j < n; ++j) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(table.g_at_node(j));
    log_norm[j] = std::log(std::max(svd.singularValues().maxCoeff(), 1e-300));
  }
  // least squares slope, clamped to w >= 0
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    st += mesh[j];
    sl += log_norm[j];
    stt += mesh[j] * mesh[j];
    stl += mesh[j] * log_norm[j];
  }
  const double denom = n * stt - st * st;
  double w = denom > 0.0 ? (n * stl - st * sl) / denom : 0.0;
  w = std::max(0.0, w);
  // smallest delta making the bound hold node-wise, then 5% headroom
  double log_delta = -1e300;
  for (std::size_t j = 0; j < n; ++j)
    log_delta = std::max(log_delta, log_norm[j] - w * mesh[j]);
  ExpBound bound;
  bound.w = w;
  bound.delta = std::max(1.0, 1.05 * std::exp(log_delta));
  return bound;
}

}  // namespace hilferstab::resolvent
