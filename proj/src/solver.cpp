#include "solver.hpp"

#include <cmath>
#include <limits>
#include <cstdio>

#include "errors.hpp"
#include "fracops.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace hilferstab::solver {

double ProblemSpec::grading() const {
  if (mesh.grading > 0.0) return mesh.grading;
  return std::max(2.0, 1.0 / gamma());
}

void ProblemSpec::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "problem: alpha must lie in (0,1]");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "problem: beta must lie in [0,1]");
  if (!(horizon > 0.0))
    throw Error(ErrorCode::InvalidArgument, "problem: horizon must be positive");
  const Eigen::Index n = gen.dim();
  if (n < 1 || gen.a.rows() != gen.a.cols())
    throw Error(ErrorCode::InvalidArgument, "problem: generator must be square");
  if (!gen.a.allFinite())
    throw Error(ErrorCode::NonFinite, "problem: generator has NaN/inf entries");
  if (xi0.size() != n)
    throw Error(ErrorCode::InvalidArgument,
                "problem: xi0 dimension does not match the generator");
  if (static_cast<Eigen::Index>(h.size()) != n)
    throw Error(ErrorCode::InvalidArgument,
                "problem: H needs one component expression per state dimension");
  if (mesh.cells < 8)
    throw Error(ErrorCode::InvalidArgument, "problem: mesh needs at least 8 cells");
  if (mesh.grading > 0.0 && mesh.grading < 1.0)
    throw Error(ErrorCode::InvalidArgument, "problem: mesh grading must be >= 1");

  // scope check: u, ell over t; H over t, x1..xn
  std::vector<std::string> scope{"t"};
  expr::BoundExpression bu(u, scope);
  expr::BoundExpression bell(ell, scope);
  for (Eigen::Index c = 0; c < n; ++c) scope.push_back("x" + std::to_string(c + 1));
  for (const auto& comp : h) expr::BoundExpression bc(comp, scope);

  // ell must be a nonnegative modulus on the solve mesh
  const std::vector<double> nodes = build_mesh(horizon, mesh.cells, grading());
  for (double t : nodes) {
    const double v = bell(&t);
    if (!(v >= 0.0))
      throw Error(ErrorCode::InvalidArgument,
                  "problem: ell(t) must be >= 0 on the mesh (t = " +
                      std::to_string(t) + ")");
  }
}

Eigen::VectorXd WeightedTrajectory::xi_at(std::size_t j) const {
  if (j == 0 || j >= mesh.size())
    throw Error(ErrorCode::InvalidArgument,
                "xi_at: unweighted state is defined for nodes j >= 1");
  return std::pow(mesh[j], gamma - 1.0) * w[j];
}

std::vector<double> build_mesh(double T, int N, double r) {
  if (N < 8) throw Error(ErrorCode::InvalidArgument, "build_mesh: N >= 8 required");
  if (!(r >= 1.0)) throw Error(ErrorCode::InvalidArgument, "build_mesh: r >= 1 required");
  if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "build_mesh: T > 0 required");
  std::vector<double> mesh(N + 1);
  for (int j = 0; j <= N; ++j) mesh[j] = T * std::pow(double(j) / N, r);
  mesh[N] = T;
  return mesh;
}

namespace {

struct Evaluators {
  expr::BoundExpression u;
  expr::BoundExpression ell;
  std::vector<expr::BoundExpression> h;
  Eigen::Index n;

  explicit Evaluators(const ProblemSpec& p) : n(p.dim()) {
    std::vector<std::string> tscope{"t"};
    u = expr::BoundExpression(p.u, tscope);
    ell = expr::BoundExpression(p.ell, tscope);
    std::vector<std::string> scope{"t"};
    for (Eigen::Index c = 0; c < n; ++c) scope.push_back("x" + std::to_string(c + 1));
    for (const auto& comp : p.h) h.emplace_back(comp, scope);
  }

  // u(t) H(t, x)
  Eigen::VectorXd forcing(double t, const Eigen::VectorXd& x) const {
    std::vector<double> vals(1 + n);
    vals[0] = t;
    for (Eigen::Index c = 0; c < n; ++c) vals[1 + c] = x(c);
    Eigen::VectorXd out(n);
    for (Eigen::Index c = 0; c < n; ++c) out(c) = h[c](vals.data());
    return u(&t) * out;
  }
};

void require_same_mesh(const std::vector<double>& a, const std::vector<double>& b) {
  if (a != b)
    throw Error(ErrorCode::MeshMismatch,
                "trajectory mesh does not match the resolvent table mesh");
}

// forcing samples f_i = u(t_i) H(t_i, xi(t_i)) for the convolution
std::vector<Eigen::VectorXd> forcing_samples(const Evaluators& ev,
                                             const WeightedTrajectory& xi) {
  const std::size_t nodes = xi.mesh.size();
  std::vector<Eigen::VectorXd> f(nodes);
  for (std::size_t i = 1; i < nodes; ++i) f[i] = ev.forcing(xi.mesh[i], xi.xi_at(i));
  if (xi.gamma == 1.0) {
    f[0] = ev.forcing(0.0, xi.w[0]);  // xi(0) = w(0) when gamma = 1
  } else {
    f[0] = f.size() > 1 ? f[1] : Eigen::VectorXd::Zero(ev.n);  // singular origin
  }
  return f;
}

// Cells inside the graded origin layer where the forcing itself behaves like
// c s^rho (singular solutions make u H singular too); fitted per component.
struct ForcingModels {
  std::size_t layer_end = 0;
  std::vector<std::vector<double>> rho;    // NaN where the linear default stays
  std::vector<std::vector<double>> coeff;
};

ForcingModels fit_forcing_models(const std::vector<double>& mesh,
                                 const std::vector<Eigen::VectorXd>& f,
                                 Eigen::Index dim, double gamma) {
  ForcingModels models;
  if (gamma >= 1.0) return models;  // forcing is regular at the origin
  const std::size_t n = mesh.size();
  while (models.layer_end + 1 < n &&
         (models.layer_end == 0 ||
          mesh[models.layer_end + 1] > 1.3 * mesh[models.layer_end]))
    ++models.layer_end;
  models.rho.assign(models.layer_end,
                    std::vector<double>(dim, std::numeric_limits<double>::quiet_NaN()));
  models.coeff.assign(models.layer_end, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < models.layer_end; ++i) {
    const std::size_t lo = (i == 0) ? 1 : i;
    const std::size_t hi = lo + 1;
    if (hi >= n) break;
    for (Eigen::Index c = 0; c < dim; ++c) {
      const double rho = fracops::fit_power_exponent(mesh[lo], f[lo](c),
                                                     mesh[hi], f[hi](c));
      if (!(rho >= -0.95 && rho <= -0.02)) continue;
      models.rho[i][c] = rho;
      models.coeff[i][c] = f[lo](c) / std::pow(mesh[lo], rho);
    }
  }
  return models;
}

WeightedTrajectory lambda_of(const ProblemSpec& p, const Evaluators& ev,
                             const WeightedTrajectory& xi,
                             const resolvent::ResolventTable& table) {
  require_same_mesh(xi.mesh, table.mesh());
  const std::vector<double>& mesh = xi.mesh;
  const std::size_t nodes = mesh.size();
  const double alpha = p.alpha;
  const double gamma = p.gamma();

  const std::vector<Eigen::VectorXd> f = forcing_samples(ev, xi);
  table.ensure_midpoints();
  const ForcingModels models = fit_forcing_models(mesh, f, p.dim(), gamma);
  const quad::Rule gl = quad::gauss_legendre(16);
  const quad::Rule jac_end = quad::gauss_jacobi01(16, 0.0, alpha - 1.0);
  const quad::Rule jac_end2 = quad::gauss_jacobi01(16, 0.0, 2.0 * alpha - 1.0);
  const Eigen::MatrixXd g_zero = table.g_alpha(0.0);

  WeightedTrajectory out;
  out.mesh = mesh;
  out.gamma = gamma;
  out.w.assign(nodes, Eigen::VectorXd::Zero(p.dim()));
  out.w[0] = specfun::rgamma(gamma) * p.xi0;

  for (std::size_t j = 1; j < nodes; ++j) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.dim());
    for (std::size_t i = 0; i + 1 < j; ++i) {
      const double big = mesh[j] - mesh[i];
      const double small = mesh[j] - mesh[i + 1];
      const double m0 = specfun::power_diff(big, small, alpha) / alpha;
      const double m1 = big * m0 -
                        specfun::power_diff(big, small, alpha + 1.0) / (alpha + 1.0);
      const double slope_scale = m1 / (mesh[i + 1] - mesh[i]);
      if (i < models.layer_end) {
        Eigen::VectorXd cell = Eigen::VectorXd::Zero(p.dim());
        for (Eigen::Index c = 0; c < p.dim(); ++c) {
          if (std::isnan(models.rho[i][c])) {
            cell(c) = f[i](c) * (m0 - slope_scale) + f[i + 1](c) * slope_scale;
          } else {
            cell(c) = fracops::power_cell_integral(mesh[i], mesh[i + 1], mesh[j],
                                                   alpha, models.rho[i][c],
                                                   models.coeff[i][c], gl, jac_end);
          }
        }
        acc.noalias() += table.g_mid(j, i) * cell;
      } else {
        acc.noalias() += table.g_mid(j, i) *
                         (f[i] * (m0 - slope_scale) + f[i + 1] * slope_scale);
      }
    }
    // End cell: the kernel is singular and G itself still varies like
    // lag^alpha; interpolate G linearly in lag^alpha between G(0) and G(h)
    // and integrate both factors exactly against the forcing model.
    {
      const std::size_t i = j - 1;
      const double h = mesh[j] - mesh[i];
      const double h_pow = std::pow(h, alpha);
      const Eigen::MatrixXd dg = table.g_end(j) - g_zero;
      const Eigen::VectorXd df = f[i] - f[j];
      Eigen::VectorXd v1(p.dim()), v2(p.dim());
      for (Eigen::Index c = 0; c < p.dim(); ++c) {
        if (i < models.layer_end && !std::isnan(models.rho[i][c])) {
          const double rho = models.rho[i][c], coeff = models.coeff[i][c];
          v1(c) = fracops::power_cell_integral(mesh[i], mesh[j], mesh[j], alpha,
                                               rho, coeff, gl, jac_end);
          v2(c) = fracops::power_cell_integral(mesh[i], mesh[j], mesh[j],
                                               2.0 * alpha, rho, coeff, gl,
                                               jac_end2) /
                  h_pow;
        } else {
          v1(c) = h_pow * (f[j](c) / alpha + df(c) / (alpha + 1.0));
          v2(c) = h_pow * (f[j](c) / (2.0 * alpha) + df(c) / (2.0 * alpha + 1.0));
        }
      }
      acc.noalias() += g_zero * v1 + dg * v2;
    }
    const Eigen::VectorXd lambda_j = table.s_at(j) * p.xi0 + acc;
    out.w[j] = std::pow(mesh[j], 1.0 - gamma) * lambda_j;
  }
  return out;
}

}  // namespace

WeightedTrajectory apply_lambda(const ProblemSpec& p, const WeightedTrajectory& xi,
                                const resolvent::ResolventTable& table) {
  return lambda_of(p, Evaluators(p), xi, table);
}

double weighted_distance(const WeightedTrajectory& a, const WeightedTrajectory& b) {
  if (a.mesh != b.mesh)
    throw Error(ErrorCode::MeshMismatch, "weighted_distance: meshes differ");
  double sup = 0.0;
  for (std::size_t j = 0; j < a.w.size(); ++j) {
    const double d = (a.w[j] - b.w[j]).norm();
    if (d > sup || std::isnan(d)) sup = d;  // NaN must propagate, not vanish
  }
  return sup;
}

SolveResult picard_solve(const ProblemSpec& p,
                         const resolvent::ResolventTable& table, double tol,
                         int max_iter) {
  if (!(tol > 0.0))
    throw Error(ErrorCode::InvalidArgument, "picard_solve: tol must be positive");
  if (max_iter < 1)
    throw Error(ErrorCode::InvalidArgument, "picard_solve: max_iter must be >= 1");
  const Evaluators ev(p);
  const std::vector<double>& mesh = table.mesh();
  const double gamma = p.gamma();

  // initial iterate: the homogeneous term S(t) xi0 in weighted form
  WeightedTrajectory current;
  current.mesh = mesh;
  current.gamma = gamma;
  current.w.assign(mesh.size(), Eigen::VectorXd::Zero(p.dim()));
  current.w[0] = specfun::rgamma(gamma) * p.xi0;
  for (std::size_t j = 1; j < mesh.size(); ++j)
    current.w[j] = std::pow(mesh[j], 1.0 - gamma) * (table.s_at(j) * p.xi0);

  SolveStats stats;
  for (int k = 1; k <= max_iter; ++k) {
    WeightedTrajectory next = lambda_of(p, ev, current, table);
    const double delta = weighted_distance(next, current);
    if (!std::isfinite(delta))
      throw Error(ErrorCode::NonFinite,
                  "picard_solve: iterate became non-finite at iteration " +
                      std::to_string(k));
    stats.iterations = k;
    stats.final_delta = delta;
    if (!stats.deltas.empty() && stats.deltas.back() > 0.0)
      stats.ratios.push_back(delta / stats.deltas.back());
    stats.deltas.push_back(delta);
    current = std::move(next);
    if (delta <= tol) return {std::move(current), std::move(stats)};
  }
  const double ratio = stats.ratios.empty() ? 0.0 : stats.ratios.back();
  throw NoConvergenceError(stats.final_delta, ratio, stats.iterations);
}

double fde_residual(const ProblemSpec& p, const WeightedTrajectory& xi) {
  const Evaluators ev(p);
  const std::size_t nodes = xi.mesh.size();
  const double gamma = p.gamma();

  fracops::SampledFunction state;
  state.mesh = xi.mesh;
  state.values.resize(nodes);
  state.values[0] = (gamma == 1.0) ? xi.w[0]
                                   : Eigen::VectorXd::Zero(p.dim()).eval();
  for (std::size_t j = 1; j < nodes; ++j) state.values[j] = xi.xi_at(j);

  const fracops::SampledFunction deriv =
      p.alpha < 1.0 ? fracops::hilfer_derivative(state, p.alpha, p.beta)
                    : fracops::mesh_derivative(state);

  double sup = 0.0;
  const std::size_t lo = nodes / 10;
  const std::size_t hi = nodes - nodes / 10;
  for (std::size_t j = std::max<std::size_t>(lo, 1); j < hi; ++j) {
    const Eigen::VectorXd x = state.values[j];
    const Eigen::VectorXd rhs = p.gen.a * x + ev.forcing(xi.mesh[j], x);
    sup = std::max(sup, (deriv.values[j] - rhs).norm());
  }
  return sup;
}

std::string trajectory_csv(const WeightedTrajectory& traj) {
  const Eigen::Index n = traj.w.empty() ? 0 : traj.w.front().size();
  std::string out = "t";
  for (Eigen::Index c = 0; c < n; ++c) out += ",w_" + std::to_string(c + 1);
  for (Eigen::Index c = 0; c < n; ++c) out += ",xi_" + std::to_string(c + 1);
  out += "\n";
  char buf[64];
  for (std::size_t j = 0; j < traj.mesh.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%.17g", traj.mesh[j]);
    out += buf;
    for (Eigen::Index c = 0; c < n; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", traj.w[j](c));
      out += buf;
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      if (j == 0) {
        out += ",";  // xi undefined at the origin
      } else {
        std::snprintf(buf, sizeof(buf), ",%.17g",
                      std::pow(traj.mesh[j], traj.gamma - 1.0) * traj.w[j](c));
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace hilferstab::solver
