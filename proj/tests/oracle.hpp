// Test-only reference integrators and closed forms, independent of the
// production solver path.
#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace hilferstab::testing {

/// Classic fixed-step RK4 for xi' = f(t, xi); returns the state at each
/// requested node, taking `substeps` equal RK4 steps per node interval.
inline std::vector<Eigen::VectorXd> rk4_at_nodes(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, const std::vector<double>& nodes, int substeps) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(nodes.size());
  Eigen::VectorXd x = x0;
  out.push_back(x);
  for (std::size_t j = 1; j < nodes.size(); ++j) {
    const double span = nodes[j] - nodes[j - 1];
    const double h = span / substeps;
    double t = nodes[j - 1];
    for (int s = 0; s < substeps; ++s) {
      const Eigen::VectorXd k1 = f(t, x);
      const Eigen::VectorXd k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
      const Eigen::VectorXd k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
      const Eigen::VectorXd k4 = f(t + h, x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
    }
    out.push_back(x);
  }
  return out;
}

}  // namespace hilferstab::testing
