#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "fracops.hpp"
#include "oracle.hpp"
#include "solver.hpp"
#include "specfun.hpp"

using namespace hilferstab;
using resolvent::MatrixGenerator;
using resolvent::ResolventTable;
using solver::ProblemSpec;
using solver::WeightedTrajectory;

namespace {

ProblemSpec scalar_problem(double a, const std::string& u, const std::string& h,
                           const std::string& ell, double alpha, double beta,
                           double T, int N, double r) {
  ProblemSpec p;
  p.alpha = alpha;
  p.beta = beta;
  p.gen.a = Eigen::MatrixXd::Constant(1, 1, a);
  p.xi0 = Eigen::VectorXd::Constant(1, 1.0);
  p.u = expr::parse_expr(u);
  p.h.push_back(expr::parse_expr(h));
  p.ell = expr::parse_expr(ell);
  p.horizon = T;
  p.mesh = {N, r};
  return p;
}

ResolventTable table_for(const ProblemSpec& p) {
  return ResolventTable(p.gen, p.alpha, p.beta,
                        solver::build_mesh(p.horizon, p.mesh.cells, p.grading()));
}

}  // namespace

TEST_CASE("build_mesh: uniform, graded, rejected grading") {
  const auto uniform = solver::build_mesh(1.0, 8, 1.0);
  CHECK(uniform.size() == 9);
  CHECK(uniform[2] == doctest::Approx(0.25).epsilon(1e-15));
  const auto graded = solver::build_mesh(1.0, 8, 2.0);
  CHECK(graded[2] == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  CHECK(graded[6] == doctest::Approx(9.0 / 16.0).epsilon(1e-15));
  CHECK(graded.back() == 1.0);
  CHECK_THROWS_AS(solver::build_mesh(1.0, 8, 0.5), Error);
  CHECK_THROWS_AS(solver::build_mesh(1.0, 4, 1.0), Error);
}

TEST_CASE("H = 0: fixed point is the homogeneous term, one iteration") {
  auto p = scalar_problem(-1.0, "1", "0", "0", 0.5, 0.5, 1.0, 16, 2.0);
  p.validate();
  auto table = table_for(p);
  const auto result = solver::picard_solve(p, table, 1e-12, 10);
  CHECK(result.stats.iterations == 1);
  for (std::size_t j = 1; j < table.mesh().size(); ++j) {
    const double t = table.mesh()[j];
    const double want = std::pow(t, 1.0 - p.gamma()) * table.s_at(j)(0, 0);
    CHECK(result.trajectory.w[j](0) == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("classical Duhamel: A=0, u=1, H=c, alpha=beta=1 gives xi0 + c t") {
  auto p = scalar_problem(0.0, "1", "0.5", "0", 1.0, 1.0, 2.0, 32, 1.0);
  auto table = table_for(p);
  const auto result = solver::picard_solve(p, table, 1e-12, 20);
  for (std::size_t j = 0; j < table.mesh().size(); ++j) {
    const double t = table.mesh()[j];
    CHECK(result.trajectory.w[j](0) == doctest::Approx(1.0 + 0.5 * t).epsilon(1e-10));
  }
}

TEST_CASE("linear scalar solve against the Mittag-Leffler closed form") {
  // D^{0.5,0} xi = -xi + 0.5 xi, c = -0.5, gamma = 0.5
  auto p = scalar_problem(-1.0, "0.5", "x1", "0.5", 0.5, 0.0, 1.0, 256, 2.0);
  p.validate();
  auto table = table_for(p);
  const auto result = solver::picard_solve(p, table, 1e-11, 100);
  const double c = -0.5;
  double sup = 0.0;
  for (std::size_t j = 1; j < table.mesh().size(); ++j) {
    const double t = table.mesh()[j];
    const double want =
        specfun::mittag_leffler(0.5, 0.5, c * std::pow(t, 0.5));
    sup = std::max(sup, std::abs(result.trajectory.w[j](0) - want));
  }
  CHECK(sup <= 3e-4);  // N = 256; the acceptance suite pins 1e-4 at N = 512
}

TEST_CASE("mesh refinement shrinks the weighted error monotonically") {
  double prev = 1e300;
  for (int N : {64, 128, 256}) {
    auto p = scalar_problem(-1.0, "0.5", "x1", "0.5", 0.5, 0.0, 1.0, N, 2.0);
    auto table = table_for(p);
    const auto result = solver::picard_solve(p, table, 1e-11, 100);
    double sup = 0.0;
    for (std::size_t j = 1; j < table.mesh().size(); ++j) {
      const double t = table.mesh()[j];
      const double want = specfun::mittag_leffler(0.5, 0.5, -0.5 * std::sqrt(t));
      sup = std::max(sup, std::abs(result.trajectory.w[j](0) - want));
    }
    CHECK_MESSAGE(sup < prev, "N=", N, " sup=", sup, " prev=", prev);
    prev = sup;
  }
}

TEST_CASE("classical 2x2 rotation with sin nonlinearity matches RK4") {
  ProblemSpec p;
  p.alpha = 1.0;
  p.beta = 1.0;
  p.gen.a = Eigen::MatrixXd::Zero(2, 2);
  p.gen.a(0, 1) = -1.0;
  p.gen.a(1, 0) = 1.0;
  p.xi0 = Eigen::VectorXd::Zero(2);
  p.xi0(0) = 1.0;
  p.u = expr::parse_expr("1");
  p.h.push_back(expr::parse_expr("sin(x2)"));
  p.h.push_back(expr::parse_expr("sin(x1)"));
  p.ell = expr::parse_expr("1");
  p.horizon = 1.0;
  p.mesh = {256, 1.0};
  p.validate();
  auto table = table_for(p);
  const auto result = solver::picard_solve(p, table, 1e-12, 200);

  auto rhs = [&](double, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd v(2);
    v << -x(1) + std::sin(x(1)), x(0) + std::sin(x(0));
    return v;
  };
  const auto reference =
      testing::rk4_at_nodes(rhs, p.xi0, table.mesh(), 8);
  double sup = 0.0;
  for (std::size_t j = 0; j < table.mesh().size(); ++j)
    sup = std::max(sup, (result.trajectory.w[j] - reference[j]).norm());
  CHECK(sup <= 2e-5);  // acceptance pins 1e-6 at N = 2048
}

TEST_CASE("weighted distance: trivial and brute-force scan") {
  auto p = scalar_problem(0.0, "1", "0", "0", 0.6, 0.5, 1.0, 16, 2.0);
  auto table = table_for(p);
  const auto r = solver::picard_solve(p, table, 1e-12, 5);
  CHECK(solver::weighted_distance(r.trajectory, r.trajectory) == 0.0);

  WeightedTrajectory shifted = r.trajectory;
  for (auto& v : shifted.w) v.array() += 0.25;
  CHECK(solver::weighted_distance(r.trajectory, shifted) ==
        doctest::Approx(0.25).epsilon(1e-14));

  WeightedTrajectory noisy = r.trajectory;
  double brute = 0.0;
  for (std::size_t j = 0; j < noisy.w.size(); ++j) {
    const double bump = std::sin(7.0 * j) * 0.1;
    noisy.w[j].array() += bump;
    brute = std::max(brute, std::abs(bump));
  }
  CHECK(solver::weighted_distance(r.trajectory, noisy) ==
        doctest::Approx(brute).epsilon(1e-14));

  WeightedTrajectory wrong = r.trajectory;
  wrong.mesh[3] += 1e-9;
  CHECK_THROWS_AS(solver::weighted_distance(r.trajectory, wrong), Error);
}

TEST_CASE("fde residual: homogeneous power solution is annihilated") {
  // H = 0, A = 0: xi = t^{gamma-1} xi0 / Gamma(gamma); D^{alpha,beta} xi = 0
  auto p = scalar_problem(0.0, "1", "0", "0", 0.6, 0.5, 1.0, 512, 2.5);
  auto table = table_for(p);
  const auto result = solver::picard_solve(p, table, 1e-12, 5);
  CHECK(solver::fde_residual(p, result.trajectory) <= 5e-3);
}

TEST_CASE("fde residual: linear scalar case stays below 5e-2 at N=512") {
  auto p = scalar_problem(-1.0, "0.5", "x1", "0.5", 0.5, 0.0, 1.0, 512, 2.0);
  auto table = table_for(p);
  const auto result = solver::picard_solve(p, table, 1e-11, 100);
  CHECK(solver::fde_residual(p, result.trajectory) <= 5e-2);
}

TEST_CASE("fde residual: classical case is at quadrature level") {
  auto p = scalar_problem(-0.8, "1", "0.2*x1", "0.2", 1.0, 1.0, 1.0, 2048, 1.0);
  auto table = table_for(p);
  const auto result = solver::picard_solve(p, table, 1e-12, 100);
  CHECK(solver::fde_residual(p, result.trajectory) <= 1e-6);
}

TEST_CASE("initial condition is recovered: I^{1-gamma} xi -> xi0 at 0") {
  auto p = scalar_problem(-1.0, "0.5", "x1", "0.5", 0.5, 0.0, 1.0, 512, 2.0);
  auto table = table_for(p);
  const auto result = solver::picard_solve(p, table, 1e-11, 100);

  fracops::SampledFunction state;
  state.mesh = result.trajectory.mesh;
  state.values.resize(state.mesh.size());
  state.values[0] = Eigen::VectorXd::Zero(1);
  for (std::size_t j = 1; j < state.mesh.size(); ++j)
    state.values[j] = result.trajectory.xi_at(j);
  const auto recovered = fracops::frac_integral_psi(state, 1.0 - p.gamma());
  // I^{1-gamma} xi(t) = xi0 + O(t^alpha); t_j ~ j^2 here, so nodes 8 and 16
  // halve the t^{1/2} correction and first-order Richardson removes it
  const double v_in = recovered.values[8](0);
  const double v_out = recovered.values[16](0);
  const double extrap = 2.0 * v_in - v_out;
  CHECK(std::isfinite(extrap));
  CHECK(std::abs(extrap - 1.0) <= 1e-3);
}

TEST_CASE("limit consistency: beta=0 (RL) and beta=1 (Caputo) closed forms") {
  // same linear problem solved in both families
  const double a = -1.0, mu = 0.5, c = a + mu;
  for (double beta : {0.0, 1.0}) {
    auto p = scalar_problem(a, "0.5", "x1", "0.5", 0.5, beta, 1.0, 256, 2.0);
    auto table = table_for(p);
    const auto result = solver::picard_solve(p, table, 1e-11, 100);
    const double gamma = p.gamma();
    double sup = 0.0;
    for (std::size_t j = 1; j < table.mesh().size(); ++j) {
      const double t = table.mesh()[j];
      const double want =
          specfun::mittag_leffler(0.5, gamma, c * std::pow(t, 0.5));
      sup = std::max(sup, std::abs(result.trajectory.w[j](0) - want));
    }
    CHECK_MESSAGE(sup <= 5e-4, "beta=", beta, " sup=", sup);
  }
}

TEST_CASE("divergent Picard reports NoConvergence with the measured ratio") {
  // Lipschitz 4 over [0,1] in the RL family: far beyond contraction
  auto p = scalar_problem(0.0, "1", "4*x1", "4", 0.5, 1.0, 1.0, 64, 2.0);
  auto table = table_for(p);
  CHECK_THROWS_AS(solver::picard_solve(p, table, 1e-12, 25), NoConvergenceError);
  try {
    solver::picard_solve(p, table, 1e-12, 25);
  } catch (const NoConvergenceError& e) {
    CHECK(e.ratio > 1.0);
    CHECK(e.iterations == 25);
  }
}

TEST_CASE("trajectory CSV: header, row count, empty xi at origin, determinism") {
  auto p = scalar_problem(-1.0, "1", "0", "0", 0.5, 0.0, 1.0, 16, 2.0);
  auto table = table_for(p);
  const auto result = solver::picard_solve(p, table, 1e-12, 5);
  const std::string csv = solver::trajectory_csv(result.trajectory);
  const std::string again = solver::trajectory_csv(result.trajectory);
  CHECK(csv == again);

  std::size_t rows = 0;
  for (char ch : csv)
    if (ch == '\n') ++rows;
  CHECK(rows == 18);  // header + N + 1 nodes
  CHECK(csv.rfind("t,w_1,xi_1\n", 0) == 0);
  // first data row ends with an empty xi field
  const auto line_start = csv.find('\n') + 1;
  const auto line_end = csv.find('\n', line_start);
  const std::string first_row = csv.substr(line_start, line_end - line_start);
  CHECK(first_row.back() == ',');
}

TEST_CASE("validation names the offending part") {
  auto p = scalar_problem(-1.0, "1", "x1", "1", 0.5, 0.0, 1.0, 16, 2.0);
  p.h.push_back(expr::parse_expr("x2"));  // dimension mismatch
  CHECK_THROWS_AS(p.validate(), Error);
  auto q = scalar_problem(-1.0, "1", "x3", "1", 0.5, 0.0, 1.0, 16, 2.0);
  CHECK_THROWS_AS(q.validate(), UnboundVariableError);
  auto r = scalar_problem(-1.0, "1", "x1", "0-1", 0.5, 0.0, 1.0, 16, 2.0);
  CHECK_THROWS_AS(r.validate(), Error);  // negative ell
}
