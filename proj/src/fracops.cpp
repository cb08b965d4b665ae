#include "fracops.hpp"

#include <cmath>
#include <limits>

#include "errors.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace hilferstab::fracops {

std::vector<double> SampledFunction::psi_values() const {
  std::vector<double> out(mesh.size());
  if (!psi) {
    out = mesh;
  } else {
    for (std::size_t i = 0; i < mesh.size(); ++i)
      out[i] = psi->eval({{"t", mesh[i]}});
  }
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    if (!(out[i + 1] > out[i]))
      throw Error(ErrorCode::NonMonotonePsi,
                  "psi is not strictly increasing on cell " + std::to_string(i) +
                      " [" + std::to_string(mesh[i]) + ", " +
                      std::to_string(mesh[i + 1]) + "]");
  }
  return out;
}

namespace {

void check_mesh(const SampledFunction& f) {
  if (f.mesh.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "sampled function needs >= 2 nodes");
  if (f.mesh.size() != f.values.size())
    throw Error(ErrorCode::MeshMismatch, "mesh/value size mismatch");
  for (std::size_t i = 0; i + 1 < f.mesh.size(); ++i)
    if (!(f.mesh[i + 1] > f.mesh[i]))
      throw Error(ErrorCode::InvalidArgument, "mesh is not strictly increasing");
}

}  // namespace

namespace {

// Data model for one cell: either the piecewise-linear default or a fitted
// power law c*s^rho. The power model is used only inside the graded layer
// next to a t=0 origin, where linear interpolation of t^{gamma-1}-type data
// has O(1) relative error per cell.
struct CellModel {
  bool power = false;
  double rho = 0.0;
  double coeff = 0.0;
};

constexpr double kRhoMin = -0.95;
constexpr double kRhoMax = -0.02;

}  // namespace

double fit_power_exponent(double t_lo, double f_lo, double t_hi, double f_hi) {
  if (f_lo == 0.0 || f_hi == 0.0 || (f_lo > 0.0) != (f_hi > 0.0) || !(t_lo > 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  return std::log(std::abs(f_hi / f_lo)) / std::log(t_hi / t_lo);
}

// integral over the cell [p,q] of (target - s)^{alpha-1} * coeff * s^rho ds
double power_cell_integral(double p, double q, double target, double alpha,
                           double rho, double coeff, const quad::Rule& gl,
                           const quad::Rule& jac_end) {
  if (p == 0.0 && target == q) {
    // both endpoints singular: exact Beta moment
    const double log_b = std::lgamma(rho + 1.0) + std::lgamma(alpha) -
                         std::lgamma(rho + 1.0 + alpha);
    return coeff * std::pow(q, alpha + rho) * std::exp(log_b);
  }
  if (p == 0.0) {
    // kernel smooth on the cell; flatten s^rho with s = q*u^k
    const int k = static_cast<int>(std::ceil(3.0 / (1.0 + rho)));
    double acc = 0.0;
    for (std::size_t m = 0; m < gl.x.size(); ++m) {
      const double u = 0.5 * (1.0 + gl.x[m]);  // map [-1,1] -> [0,1]
      const double s = q * std::pow(u, k);
      acc += 0.5 * gl.w[m] * std::pow(target - s, alpha - 1.0) *
             std::pow(s, rho) * k * std::pow(u, k - 1);
    }
    return coeff * q * acc;
  }
  if (target == q) {
    // kernel endpoint singularity: s = q - (q-p)v with Jacobi weight v^{alpha-1}
    double acc = 0.0;
    for (std::size_t m = 0; m < jac_end.x.size(); ++m) {
      const double v = jac_end.x[m];
      acc += jac_end.w[m] * std::pow(q - (q - p) * v, rho);
    }
    return coeff * std::pow(q - p, alpha) * acc;
  }
  // interior cell, smooth integrand
  double acc = 0.0;
  const double half = 0.5 * (q - p), mid = 0.5 * (q + p);
  for (std::size_t m = 0; m < gl.x.size(); ++m) {
    const double s = mid + half * gl.x[m];
    acc += half * gl.w[m] * std::pow(target - s, alpha - 1.0) * std::pow(s, rho);
  }
  return coeff * acc;
}

SampledFunction frac_integral_psi(const SampledFunction& f, double alpha) {
  check_mesh(f);
  if (alpha < 0.0)
    throw Error(ErrorCode::InvalidArgument, "frac_integral_psi: alpha must be >= 0");
  if (alpha == 0.0) return f;  // identity operator

  const std::vector<double> psi = f.psi_values();
  const std::size_t n = f.mesh.size();
  const Eigen::Index dim = f.dim();
  const double inv_gamma = specfun::rgamma(alpha);

  // Power-law cell models apply only with identity psi and a mesh rooted at 0.
  // They are exact for t^{gamma-1}-type data, where linear interpolation keeps
  // an O(1) relative error near the origin and a slowly decaying one after it.
  const bool singular_mode = !f.psi && f.mesh.front() == 0.0;
  std::vector<std::vector<CellModel>> models;
  std::size_t layer_end = 0;
  if (singular_mode) {
    layer_end = n - 1;
    models.assign(layer_end, std::vector<CellModel>(dim));
    for (std::size_t i = 0; i < layer_end; ++i) {
      // fit from the cell's own endpoints; cell 0 uses nodes 1 and 2 since
      // node 0 cannot represent singular data
      const std::size_t lo = (i == 0) ? 1 : i;
      const std::size_t hi = lo + 1;
      if (hi >= n) break;
      for (Eigen::Index c = 0; c < dim; ++c) {
        // power modelling is reserved for data that is singular at the
        // origin: node 0 holds the placeholder 0 while the fit comes out
        // with a negative exponent. Anything else keeps the linear default.
        if (f.values[0](c) != 0.0) continue;
        if (i > 0 && !models[0][c].power) continue;
        const double a = f.values[lo](c), b = f.values[hi](c);
        if (a == 0.0 || b == 0.0 || (a > 0.0) != (b > 0.0)) continue;
        if (!(f.mesh[lo] > 0.0)) continue;
        const double rho =
            std::log(std::abs(b / a)) / std::log(f.mesh[hi] / f.mesh[lo]);
        if (rho < kRhoMin || rho > kRhoMax) continue;
        models[i][c] = {true, rho, a / std::pow(f.mesh[lo], rho)};
      }
    }
  }

  const quad::Rule gl = quad::gauss_legendre(16);
  const quad::Rule jac_end = quad::gauss_jacobi01(16, 0.0, alpha - 1.0);

  SampledFunction out;
  out.mesh = f.mesh;
  out.psi = f.psi;
  out.values.assign(n, Eigen::VectorXd::Zero(dim));

  for (std::size_t j = 1; j < n; ++j) {
    const double target = psi[j];
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < j; ++i) {
      const double p = psi[i], q = psi[i + 1];
      const double big = target - p, small = target - q;  // big >= small >= 0
      // exact moments of (target - tau)^{alpha-1} against 1 and (tau - p)
      const double m0 = specfun::power_diff(big, small, alpha) / alpha;
      const double m1 =
          big * m0 - specfun::power_diff(big, small, alpha + 1.0) / (alpha + 1.0);
      const double slope_scale = m1 / (q - p);
      if (i < layer_end) {
        for (Eigen::Index c = 0; c < dim; ++c) {
          const CellModel& cm = models[i][c];
          if (cm.power)
            acc(c) += power_cell_integral(p, q, target, alpha, cm.rho, cm.coeff,
                                          gl, jac_end);
          else
            acc(c) += f.values[i](c) * (m0 - slope_scale) +
                      f.values[i + 1](c) * slope_scale;
        }
      } else {
        acc.noalias() += f.values[i] * (m0 - slope_scale);
        acc.noalias() += f.values[i + 1] * slope_scale;
      }
    }
    out.values[j] = acc * inv_gamma;
  }
  return out;
}

SampledFunction mesh_derivative(const SampledFunction& f) {
  check_mesh(f);
  const std::size_t n = f.mesh.size();
  SampledFunction out;
  out.mesh = f.mesh;
  out.psi = f.psi;
  out.values.assign(n, Eigen::VectorXd::Zero(f.dim()));
  out.low_accuracy_lo = 1;
  out.low_accuracy_hi = 1;

  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hl = f.mesh[i] - f.mesh[i - 1];
    const double hr = f.mesh[i + 1] - f.mesh[i];
    // second-order three-point stencil on a nonuniform mesh
    out.values[i] = (-hr / (hl * (hl + hr))) * f.values[i - 1] +
                    ((hr - hl) / (hl * hr)) * f.values[i] +
                    (hl / (hr * (hl + hr))) * f.values[i + 1];
  }
  out.values[0] = (f.values[1] - f.values[0]) / (f.mesh[1] - f.mesh[0]);
  out.values[n - 1] =
      (f.values[n - 1] - f.values[n - 2]) / (f.mesh[n - 1] - f.mesh[n - 2]);
  return out;
}

SampledFunction hilfer_derivative(const SampledFunction& f, double alpha,
                                  double beta) {
  check_mesh(f);
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "hilfer_derivative: alpha in (0,1]");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "hilfer_derivative: beta in [0,1]");
  if (f.psi)
    throw Error(ErrorCode::InvalidArgument,
                "hilfer_derivative: only psi(t)=t is supported");
  if (f.mesh.size() < 9)
    throw Error(ErrorCode::GridTooCoarse,
                "hilfer_derivative: need at least 8 cells, got " +
                    std::to_string(f.mesh.size() - 1));

  const double inner = (1.0 - beta) * (1.0 - alpha);
  const double outer = beta * (1.0 - alpha);
  const SampledFunction integrated = inner > 0.0 ? frac_integral_psi(f, inner) : f;
  SampledFunction derivative = mesh_derivative(integrated);

  // Singular data (xi ~ t^{gamma-1}) makes the inner integral jump between
  // the conventional F(0)=0 and its t->0+ limit. That jump belongs to t=0,
  // not to d/dt on (0,T]; differencing across it would smear a spurious
  // kernel-shaped term over the whole interval. Detect it and keep the first
  // two stencils away from node 0.
  if (f.mesh.front() == 0.0 && integrated.values.size() >= 4) {
    const auto& fv = integrated.values;
    const double jump = (fv[1] - fv[0]).norm();
    const double scale = (fv[2] - fv[1]).norm() + (fv[3] - fv[2]).norm();
    if (jump > 10.0 * scale + 1e-300) {
      derivative.values[1] =
          (fv[2] - fv[1]) / (integrated.mesh[2] - integrated.mesh[1]);
      derivative.values[0] = derivative.values[1];
      derivative.low_accuracy_lo = 2;
    }
  }

  if (outer == 0.0) return derivative;
  SampledFunction result = frac_integral_psi(derivative, outer);
  result.low_accuracy_lo = derivative.low_accuracy_lo;
  result.low_accuracy_hi = derivative.low_accuracy_hi;
  return result;
}

}  // namespace hilferstab::fracops
