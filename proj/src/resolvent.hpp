#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace hilferstab::resolvent {

struct MatrixGenerator {
  Eigen::MatrixXd a;  // n x n, finite entries
  Eigen::Index dim() const { return a.rows(); }
};

/// Exponential envelope ||G_alpha(t)|| <= delta e^{w t} fitted on mesh nodes.
/// delta >= 1 and w >= 0 as the resolvent bound requires; the bound is fitted
/// on the bounded factor G_alpha, not on the singular T_alpha itself.
struct ExpBound {
  double delta = 1.0;
  double w = 0.0;
};

/// Matrix exponential by Pade-13 scaling and squaring.
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);

/// Fixed quadrature rule for integrals  int_0^inf alpha theta M_alpha(theta)
/// g(theta) dtheta. Weights absorb the Wright density, so applying the rule
/// to g(theta) = exp(z theta) evaluates the resolvent kernel directly.
/// Panels are refined against exp(+zeta_pos theta) and exp(-zeta_neg theta)
/// so the rule stays accurate for the whole spectral range it will meet.
struct WrightRule {
  double alpha = 0.5;
  std::vector<double> theta;
  std::vector<double> weight;

  static WrightRule build(double alpha, double zeta_pos, double zeta_neg,
                          double tol);

  std::complex<double> kernel(std::complex<double> z) const;  // sum w e^{z theta}
  double kernel_real(double z) const;
};

/// Precomputed operator families of the mild-solution formula on a mesh:
/// G_alpha at nodes, S_{alpha,beta} at positive nodes, and (on demand) the
/// midpoint-lag table the convolution quadrature samples. Immutable after
/// construction apart from the lazily built midpoint cache.
class ResolventTable {
 public:
  /// mesh must start at 0 and be strictly increasing.
  ResolventTable(const MatrixGenerator& gen, double alpha, double beta,
                 std::vector<double> mesh, double quad_tol = 1e-9);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double gamma() const { return gamma_; }
  const std::vector<double>& mesh() const { return mesh_; }
  Eigen::Index dim() const { return gen_.dim(); }
  const Eigen::MatrixXd& generator() const { return gen_.a; }
  double quad_tol() const { return quad_tol_; }

  /// G_alpha(lag) for arbitrary lag >= 0 (G_1(lag) = exp(lag A) when alpha=1).
  Eigen::MatrixXd g_alpha(double lag) const;

  /// T_alpha(lag) = lag^{alpha-1} G_alpha(lag), lag > 0.
  Eigen::MatrixXd t_alpha(double lag) const;

  /// S_{alpha,beta}(t_j) for node index j >= 1.
  const Eigen::MatrixXd& s_at(std::size_t j) const;

  /// G_alpha(t_j) for node index j >= 0.
  const Eigen::MatrixXd& g_at_node(std::size_t j) const;

  /// G_alpha(t_j - m_i) with m_i the midpoint of cell i < j; builds the
  /// triangular cache on first use.
  const Eigen::MatrixXd& g_mid(std::size_t j, std::size_t i) const;
  void ensure_midpoints() const;

  /// G_alpha(t_j - t_{j-1}): the end-cell lag sample the convolution needs
  /// for its lag^alpha-linear model next to the kernel singularity.
  const Eigen::MatrixXd& g_end(std::size_t j) const;

  const WrightRule& rule() const { return rule_; }

 private:
  Eigen::MatrixXd eval_g(double lag) const;

  MatrixGenerator gen_;
  double alpha_, beta_, gamma_, quad_tol_;
  std::vector<double> mesh_;
  WrightRule rule_;  // empty for alpha == 1

  // spectral factorization of A (empty V when the defective path is active)
  bool diagonalizable_ = false;
  Eigen::MatrixXcd v_, v_inv_;
  Eigen::VectorXcd eig_;

  std::vector<Eigen::MatrixXd> g_nodes_;
  std::vector<Eigen::MatrixXd> s_nodes_;
  mutable std::vector<Eigen::MatrixXd> g_mid_;  // packed triangular
  mutable std::vector<Eigen::MatrixXd> g_end_;
};

/// Least-squares fit of log||G_alpha(t)|| <= log delta + w t over the table
/// mesh, inflated 5% and clamped to delta >= 1, w >= 0 so the bound holds at
/// every sampled node.
ExpBound fit_exp_bound(const ResolventTable& table);

}  // namespace hilferstab::resolvent
