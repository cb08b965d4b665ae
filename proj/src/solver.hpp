#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "expr.hpp"
#include "resolvent.hpp"

namespace hilferstab::solver {

struct MeshParams {
  int cells = 256;
  double grading = 0.0;  // <= 0 requests the default max(2, 1/gamma)
};

/// One Cauchy problem instance: D^{alpha,beta} xi = A xi + u(t) H(t, xi),
/// I^{1-gamma} xi(0) = xi0, on [0, horizon].
struct ProblemSpec {
  double alpha = 0.5;
  double beta = 0.0;
  resolvent::MatrixGenerator gen;
  Eigen::VectorXd xi0;
  expr::Expression u;                // u(t)
  std::vector<expr::Expression> h;   // H components over t, x1..xn
  expr::Expression ell;              // Lipschitz modulus ell(t)
  double horizon = 1.0;
  MeshParams mesh;

  double gamma() const { return alpha + beta - alpha * beta; }
  Eigen::Index dim() const { return gen.dim(); }
  double grading() const;

  /// Dimension consistency, parameter ranges, ell >= 0 on the mesh.
  void validate() const;
};

/// Trajectory stored in weighted form w(t) = t^{1-gamma} xi(t); the singular
/// xi is reconstructed on demand and never stored. w[0] = xi0/Gamma(gamma).
struct WeightedTrajectory {
  std::vector<double> mesh;
  std::vector<Eigen::VectorXd> w;
  double gamma = 1.0;

  /// Unweighted state at node j >= 1 (undefined at t = 0 when gamma < 1).
  Eigen::VectorXd xi_at(std::size_t j) const;
};

/// Graded mesh t_j = T (j/N)^r.
std::vector<double> build_mesh(double T, int N, double r);

struct SolveStats {
  int iterations = 0;
  double final_delta = 0.0;
  std::vector<double> deltas;  // d(xi^k, xi^{k-1}) for k = 1..
  std::vector<double> ratios;  // deltas[k]/deltas[k-1] for k >= 2
};

struct SolveResult {
  WeightedTrajectory trajectory;
  SolveStats stats;
};

/// One application of the fixed-point map
///   (Lambda xi)(t) = S_{alpha,beta}(t) xi0 + int_0^t T_alpha(t-s) u(s)
///                    H(s, xi(s)) ds,
/// convolution by product integration: u H linear per cell, the kernel factor
/// (t-s)^{alpha-1} integrated exactly, G_alpha frozen at cell midpoints.
WeightedTrajectory apply_lambda(const ProblemSpec& p, const WeightedTrajectory& xi,
                                const resolvent::ResolventTable& table);

/// Picard iteration from xi^0 = S xi0 until the weighted sup distance of
/// successive iterates falls below tol. Throws NoConvergence{delta, ratio}.
SolveResult picard_solve(const ProblemSpec& p,
                         const resolvent::ResolventTable& table, double tol,
                         int max_iter);

/// Discrete d_{1-gamma}: max over nodes of the Euclidean norm of weighted
/// value differences. Meshes must match exactly.
double weighted_distance(const WeightedTrajectory& a, const WeightedTrajectory& b);

/// Sup over the interior 80% of nodes of ||D^{alpha,beta} xi - A xi - u H||.
double fde_residual(const ProblemSpec& p, const WeightedTrajectory& xi);

/// CSV with header t,w_1..w_n,xi_1..xi_n; xi columns empty on the t=0 row.
std::string trajectory_csv(const WeightedTrajectory& traj);

}  // namespace hilferstab::solver
