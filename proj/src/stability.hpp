#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "solver.hpp"

namespace hilferstab::stability {

enum class Regime { Finite, Infinite };

/// Ulam-Hyers certificate: the contraction integral lambda_tilde and, when it
/// is below 1, the stability constant c = 1/(1 - lambda_tilde).
///
/// The exponential envelope (delta, w) feeding the finite-horizon formula is
/// fitted on the bounded factor ||G_alpha(t)||: the literal hypothesis
/// ||T_alpha(t)|| <= delta e^{wt} cannot hold near t = 0 for alpha < 1, where
/// T_alpha carries the t^{alpha-1} prefactor. The certificate is therefore
/// computed under that boundedness reading (recorded in `note`), and the
/// sampled-perturbation verifier is the ground truth for it.
struct UHCertificate {
  double lambda_tilde = 0.0;
  bool stable = false;
  std::optional<double> c;
  Regime regime = Regime::Finite;
  double delta = 1.0;
  double w = 0.0;
  double horizon = 0.0;  // T, or the truncation T_max in the infinite regime
  double gamma = 1.0;
  bool truncated_sup = false;
  std::string note;
};

/// Ulam-Hyers-Rassias certificate (envelope G, comparison function phi).
struct UHRCertificate {
  double rho = 0.0;
  double k = 0.0;
  double alpha_g = 0.0;
  double beta_g = 0.0;
  double contraction = 0.0;  // delta rho K T^{1-gamma} (finite), rho K T^{1-gamma} (infinite)
  bool stable = false;
  double c_g = 0.0;  // bound constant when stable
  Regime regime = Regime::Finite;
  double delta = 1.0;
  double w = 0.0;
  double horizon = 0.0;
  double gamma = 1.0;
  bool truncated = false;
  std::string note;
};

struct ReportRow {
  int index = 0;
  double eps_hat = 0.0;   // measured residual (sup weighted; G-relative for UHR)
  double distance = 0.0;  // weighted distance to the fixed point (G-relative for UHR)
  double bound = 0.0;
  bool pass = true;
  std::string note;  // worst node detail on failure
};

struct PerturbationReport {
  std::vector<ReportRow> rows;
  int violations = 0;
  double pass_rate = 1.0;
  double max_slack = 0.0;  // max distance/bound over samples

  std::string csv() const;  // one row per sample plus a summary line
};

/// Theorem 1: lambda_tilde = delta T^{1-gamma} int_0^T e^{w(T-s)} |u| ell ds
/// by adaptive quadrature (1e-10 relative). lambda_tilde >= 1 is a valid
/// "not certified" outcome, not an error.
UHCertificate uh_certify_finite(const solver::ProblemSpec& p,
                                const resolvent::ExpBound& bound);

/// Theorem 5: sup_{t <= T_max} t^{1-gamma} int_0^t ell |u| ||T_alpha(t-s)|| ds
/// on the table mesh; throws TruncationInconclusive while the running sup is
/// still growing at T_max.
UHCertificate uh_certify_infinite(const solver::ProblemSpec& p,
                                  const resolvent::ResolventTable& table);

/// Theorem 2 / Theorem 6. Verifies int_0^t phi <= K phi(t) on the mesh
/// (PhiConditionViolated otherwise), takes rho as the mesh ess-sup of
/// ell |u| e^{w(T-s)}, envelopes G by phi, and forms C_G.
UHRCertificate uhr_certify(const solver::ProblemSpec& p,
                           const resolvent::ExpBound& bound,
                           const expr::Expression& g, const expr::Expression& phi,
                           double k, Regime regime,
                           const std::vector<double>& mesh);

/// The closed formula beta_G / ((1 - delta rho K T^{1-gamma}) alpha_G).
double uhr_constant(double delta, double rho, double k, double horizon,
                    double gamma, double alpha_g, double beta_g);

/// Smooth random perturbations of the fixed point in weighted coordinates
/// (low-order polynomial + Fourier bumps), rescaled so the measured residual
/// sup ||t^{1-gamma}(theta - Lambda theta)|| lands in [epsilon/2, epsilon].
/// Deterministic per (seed, index). Throws RescaleFailure when the residual
/// floor of the discrete fixed point is in the way.
std::vector<solver::WeightedTrajectory> sample_perturbations(
    const solver::ProblemSpec& p, const solver::WeightedTrajectory& v,
    const resolvent::ResolventTable& table, double epsilon, int count,
    std::uint64_t seed);

/// Same, but the residual is shaped node-wise to satisfy
/// ||t^{1-gamma}(theta - Lambda theta)(t)|| <= G(t) with margin.
std::vector<solver::WeightedTrajectory> sample_perturbations_enveloped(
    const solver::ProblemSpec& p, const solver::WeightedTrajectory& v,
    const resolvent::ResolventTable& table, const expr::Expression& g, int count,
    std::uint64_t seed);

/// Measured weighted residual sup_j ||t^{1-gamma}(theta - Lambda theta)(t_j)||.
double weighted_residual(const solver::ProblemSpec& p,
                         const solver::WeightedTrajectory& theta,
                         const resolvent::ResolventTable& table);

/// Checks d(theta, v) <= eps_hat/(1-lambda_tilde) (1 + tol) per sample.
PerturbationReport verify_uh(const solver::ProblemSpec& p,
                             const UHCertificate& cert,
                             const std::vector<solver::WeightedTrajectory>& samples,
                             const solver::WeightedTrajectory& v,
                             const resolvent::ResolventTable& table,
                             double tol_verify = 1e-3);

/// Node-wise check ||t^{1-gamma}(theta - v)|| <= C_G G(t) (1 + tol); samples
/// must satisfy the node-wise premise (SampleNotGBounded otherwise).
PerturbationReport verify_uhr(const solver::ProblemSpec& p,
                              const UHRCertificate& cert,
                              const std::vector<solver::WeightedTrajectory>& samples,
                              const solver::WeightedTrajectory& v,
                              const resolvent::ResolventTable& table,
                              const expr::Expression& g, double tol_verify = 1e-3);

struct LipschitzEstimate {
  std::vector<double> lhat;  // per mesh node
  bool exceeds_declared = false;
  std::size_t worst_node = 0;
  double worst_excess = 0.0;  // lhat - ell at the worst node
};

/// Monte-Carlo per-node estimate of the Lipschitz modulus of H over a state
/// box; warns (flag) when it exceeds the declared ell anywhere.
LipschitzEstimate estimate_lipschitz(const solver::ProblemSpec& p,
                                     const std::vector<double>& mesh,
                                     const Eigen::VectorXd& box_lo,
                                     const Eigen::VectorXd& box_hi, int samples,
                                     std::uint64_t seed);

}  // namespace hilferstab::stability
