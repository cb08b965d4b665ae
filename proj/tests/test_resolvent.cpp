#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "errors.hpp"
#include "resolvent.hpp"
#include "specfun.hpp"

using namespace hilferstab;
using resolvent::MatrixGenerator;
using resolvent::ResolventTable;

namespace {

std::vector<double> uniform_mesh(double T, int N) {
  std::vector<double> mesh(N + 1);
  for (int j = 0; j <= N; ++j) mesh[j] = T * j / N;
  return mesh;
}

MatrixGenerator scalar_gen(double a) {
  MatrixGenerator g;
  g.a = Eigen::MatrixXd::Constant(1, 1, a);
  return g;
}

}  // namespace

TEST_CASE("matrix exponential: diagonal, rotation, scaling regime") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 0.3;
  d(1, 1) = -1.7;
  const Eigen::MatrixXd ed = resolvent::expm(d);
  CHECK(ed(0, 0) == doctest::Approx(std::exp(0.3)).epsilon(1e-14));
  CHECK(ed(1, 1) == doctest::Approx(std::exp(-1.7)).epsilon(1e-14));
  CHECK(ed(0, 1) == doctest::Approx(0.0));

  Eigen::MatrixXd rot(2, 2);
  rot << 0.0, -2.0, 2.0, 0.0;
  const Eigen::MatrixXd er = resolvent::expm(rot);
  CHECK(er(0, 0) == doctest::Approx(std::cos(2.0)).epsilon(1e-13));
  CHECK(er(1, 0) == doctest::Approx(std::sin(2.0)).epsilon(1e-13));

  // norm above the Pade threshold exercises squaring
  Eigen::MatrixXd big = 40.0 * rot;
  const Eigen::MatrixXd eb = resolvent::expm(big);
  CHECK(eb(0, 0) == doctest::Approx(std::cos(80.0)).epsilon(1e-10));
}

TEST_CASE("wright rule reproduces 1/Gamma(alpha) and the E_{a,a} kernel") {
  for (double alpha : {0.3, 0.5, 0.7, 0.9}) {
    auto rule = resolvent::WrightRule::build(alpha, 2.0, 8.0, 1e-9);
    CHECK(rule.kernel_real(0.0) ==
          doctest::Approx(specfun::rgamma(alpha)).epsilon(1e-9));
    for (double z : {-8.0, -3.0, -1.0, 0.5, 2.0}) {
      const double want = specfun::mittag_leffler(alpha, alpha, z);
      CHECK_MESSAGE(rule.kernel_real(z) == doctest::Approx(want).epsilon(1e-7),
                    "alpha=", alpha, " z=", z);
    }
  }
}

TEST_CASE("zero generator: G, T, S collapse to power kernels") {
  MatrixGenerator gen;
  gen.a = Eigen::MatrixXd::Zero(2, 2);
  const double alpha = 0.6, beta = 0.4;
  const double gamma = alpha + beta - alpha * beta;
  ResolventTable table(gen, alpha, beta, uniform_mesh(2.0, 16));

  const Eigen::MatrixXd g = table.g_alpha(1.3);
  CHECK(g(0, 0) == doctest::Approx(specfun::rgamma(alpha)).epsilon(1e-9));
  CHECK(std::abs(g(0, 1)) <= 1e-12);

  const Eigen::MatrixXd t = table.t_alpha(0.7);
  CHECK(t(1, 1) ==
        doctest::Approx(std::pow(0.7, alpha - 1.0) * specfun::rgamma(alpha))
            .epsilon(1e-9));

  for (std::size_t j : {std::size_t{1}, std::size_t{8}, std::size_t{16}}) {
    const double tj = table.mesh()[j];
    CHECK(table.s_at(j)(0, 0) ==
          doctest::Approx(std::pow(tj, gamma - 1.0) * specfun::rgamma(gamma))
              .epsilon(1e-8));
    CHECK(std::abs(table.s_at(j)(1, 0)) <= 1e-10);
  }
}

TEST_CASE("scalar generator: S(t) = t^{gamma-1} E_{alpha,gamma}(a t^alpha)") {
  const double a = -1.0;
  for (double alpha : {0.4, 0.7}) {
    for (double beta : {0.0, 0.5, 1.0}) {
      const double gamma = alpha + beta - alpha * beta;
      ResolventTable table(scalar_gen(a), alpha, beta, uniform_mesh(2.0, 20));
      for (std::size_t j = 1; j < table.mesh().size(); ++j) {
        const double t = table.mesh()[j];
        if (t < 0.1) continue;
        const double want = std::pow(t, gamma - 1.0) *
                            specfun::mittag_leffler(alpha, gamma,
                                                    a * std::pow(t, alpha));
        CHECK_MESSAGE(table.s_at(j)(0, 0) == doctest::Approx(want).epsilon(1e-7),
                      "alpha=", alpha, " beta=", beta, " t=", t);
      }
    }
  }
}

TEST_CASE("T_alpha scalar: a=1, alpha=0.5, t=1 gives E_{0.5,0.5}(1)") {
  ResolventTable table(scalar_gen(1.0), 0.5, 0.5, uniform_mesh(1.0, 8));
  CHECK(table.t_alpha(1.0)(0, 0) ==
        doctest::Approx(specfun::mittag_leffler(0.5, 0.5, 1.0)).epsilon(1e-8));
}

TEST_CASE("beta=1 (Caputo family): S is continuous at 0 with value 1") {
  ResolventTable table(scalar_gen(-0.8), 0.5, 1.0, uniform_mesh(1.0, 10));
  // gamma = 1; extrapolate S toward 0 via the closed ML form already checked;
  // here sample small t directly through the family
  const double s_small =
      std::pow(0.02, 0.0) * specfun::mittag_leffler(0.5, 1.0, -0.8 * std::sqrt(0.02));
  CHECK(s_small == doctest::Approx(1.0).epsilon(0.15));
  CHECK(table.s_at(1)(0, 0) ==
        doctest::Approx(specfun::mittag_leffler(0.5, 1.0, -0.8 * std::sqrt(0.1)))
            .epsilon(1e-7));
}

TEST_CASE("alpha=1 bypasses the Wright machinery: G_1 = exp(tA)") {
  Eigen::MatrixXd rot(2, 2);
  rot << 0.0, -1.0, 1.0, 0.0;
  MatrixGenerator gen{rot};
  ResolventTable table(gen, 1.0, 1.0, uniform_mesh(1.5, 8));
  const Eigen::MatrixXd g = table.g_alpha(0.9);
  CHECK(g(0, 0) == doctest::Approx(std::cos(0.9)).epsilon(1e-12));
  CHECK(g(1, 0) == doctest::Approx(std::sin(0.9)).epsilon(1e-12));
  // S = T = exp(tA) since gamma = 1, b = 0
  CHECK(table.s_at(4)(0, 1) ==
        doctest::Approx(-std::sin(table.mesh()[4])).epsilon(1e-12));
}

TEST_CASE("random 3x3 oracle equivalence with the ML series route") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    Eigen::MatrixXd m(3, 3);
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = u(rng);
    Eigen::EigenSolver<Eigen::MatrixXd> es(m);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    if (rho > 1e-8) m *= 1.5 / rho;

    const double alpha = (trial % 2 == 0) ? 0.4 : 0.7;
    const double beta = (trial < 2) ? 0.5 : 1.0;
    const double gamma = alpha + beta - alpha * beta;
    ResolventTable table(MatrixGenerator{m}, alpha, beta, uniform_mesh(2.0, 20));
    for (std::size_t j = 1; j < table.mesh().size(); ++j) {
      const double t = table.mesh()[j];
      if (t < 0.1) continue;
      const Eigen::MatrixXd oracle =
          std::pow(t, gamma - 1.0) *
          specfun::ml_matrix(alpha, gamma, std::pow(t, alpha) * m);
      const double rel =
          (table.s_at(j) - oracle).norm() / std::max(oracle.norm(), 1e-300);
      CHECK_MESSAGE(rel <= 1e-6, "trial=", trial, " t=", t, " rel=", rel);
    }
  }
}

TEST_CASE("defective generator falls back to Pade quadrature") {
  Eigen::MatrixXd jordan(2, 2);
  jordan << -0.5, 1.0, 0.0, -0.5;  // non-diagonalizable
  const double alpha = 0.6, beta = 0.5;
  const double gamma = alpha + beta - alpha * beta;
  ResolventTable table(MatrixGenerator{jordan}, alpha, beta, uniform_mesh(1.0, 8));
  for (std::size_t j : {std::size_t{4}, std::size_t{8}}) {
    const double t = table.mesh()[j];
    const Eigen::MatrixXd oracle =
        std::pow(t, gamma - 1.0) *
        specfun::ml_matrix(alpha, gamma, std::pow(t, alpha) * jordan);
    CHECK((table.s_at(j) - oracle).norm() <= 1e-6 * oracle.norm());
  }
}

TEST_CASE("weighted continuity: t^{1-gamma} S(t) xi0 -> xi0/Gamma(gamma)") {
  Eigen::MatrixXd m(2, 2);
  m << -0.3, 0.2, 0.1, -0.6;
  const double alpha = 0.5, beta = 0.4;
  const double gamma = alpha + beta - alpha * beta;
  ResolventTable table(MatrixGenerator{m}, alpha, beta, uniform_mesh(1.0, 8));
  Eigen::VectorXd xi0(2);
  xi0 << 1.0, -2.0;
  (void)table;
  // Richardson extrapolation of w(t) = t^{1-gamma} S(t) xi0 toward t = 0
  auto s_of = [&](double t) -> Eigen::VectorXd {
    // direct family evaluation off-mesh through a tiny dedicated table
    ResolventTable tiny(MatrixGenerator{m}, alpha, beta, {0.0, t});
    return std::pow(t, 1.0 - gamma) * (tiny.s_at(1) * xi0);
  };
  const Eigen::VectorXd w1 = s_of(1e-4);
  const Eigen::VectorXd w2 = s_of(5e-5);
  // leading correction is O(t^alpha): Richardson with that exponent
  const Eigen::VectorXd extrap =
      w2 + (w2 - w1) / (std::pow(2.0, alpha) - 1.0);
  const Eigen::VectorXd want = xi0 * specfun::rgamma(gamma);
  CHECK((extrap - want).norm() <= 1e-4 * want.norm());
}

TEST_CASE("S commutes with the generator") {
  Eigen::MatrixXd m(3, 3);
  m << -0.2, 0.5, 0.0, -0.5, -0.2, 0.3, 0.1, 0.0, -0.7;
  ResolventTable table(MatrixGenerator{m}, 0.6, 0.7, uniform_mesh(1.0, 10));
  for (std::size_t j : {std::size_t{2}, std::size_t{10}}) {
    const Eigen::MatrixXd s = table.s_at(j);
    const double comm = (s * m - m * s).norm();
    CHECK(comm <= 1e-8 * m.norm() * s.norm());
  }
}

TEST_CASE("exp-bound fit: constant, decreasing, growing") {
  const double alpha = 0.5;
  {
    MatrixGenerator zero;
    zero.a = Eigen::MatrixXd::Zero(2, 2);
    ResolventTable table(zero, alpha, 0.5, uniform_mesh(2.0, 16));
    const auto bound = resolvent::fit_exp_bound(table);
    CHECK(bound.w == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(bound.delta ==
          doctest::Approx(std::max(1.0, 1.05 * specfun::rgamma(alpha))).epsilon(1e-6));
  }
  {
    ResolventTable table(scalar_gen(-1.0), alpha, 0.5, uniform_mesh(2.0, 16));
    const auto bound = resolvent::fit_exp_bound(table);
    CHECK(bound.w == doctest::Approx(0.0));  // norms decreasing
    CHECK(bound.delta >= 1.0);
  }
  {
    ResolventTable table(scalar_gen(1.0), alpha, 0.5, uniform_mesh(2.0, 16));
    const auto bound = resolvent::fit_exp_bound(table);
    CHECK(bound.w > 0.0);
    for (std::size_t j = 0; j < table.mesh().size(); ++j) {
      const double norm = table.g_at_node(j).norm();  // 1x1: same as 2-norm
      CHECK(norm <= bound.delta * std::exp(bound.w * table.mesh()[j]) * (1 + 1e-12));
    }
  }
}

TEST_CASE("midpoint cache matches direct evaluation") {
  ResolventTable table(scalar_gen(-0.4), 0.7, 0.3, uniform_mesh(1.0, 6));
  table.ensure_midpoints();
  for (std::size_t j = 1; j < table.mesh().size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const double mid = 0.5 * (table.mesh()[i] + table.mesh()[i + 1]);
      CHECK(table.g_mid(j, i)(0, 0) ==
            doctest::Approx(table.g_alpha(table.mesh()[j] - mid)(0, 0))
                .epsilon(1e-13));
    }
  }
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(ResolventTable(scalar_gen(1.0), 0.5, 0.5, {0.5, 1.0}), Error);
  CHECK_THROWS_AS(ResolventTable(scalar_gen(1.0), 1.5, 0.5, uniform_mesh(1.0, 4)),
                  Error);
  Eigen::MatrixXd nan2 = Eigen::MatrixXd::Constant(2, 2, std::nan(""));
  CHECK_THROWS_AS(ResolventTable(MatrixGenerator{nan2}, 0.5, 0.5,
                                 uniform_mesh(1.0, 4)),
                  Error);
  ResolventTable table(scalar_gen(0.0), 0.5, 0.5, uniform_mesh(1.0, 4));
  CHECK_THROWS_AS(table.s_at(0), Error);
  CHECK_THROWS_AS(table.t_alpha(0.0), Error);
}
