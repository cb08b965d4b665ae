#pragma once

#include <functional>
#include <vector>

namespace hilferstab::quad {

/// Nodes and weights of a one-dimensional rule; integral(f) = sum w_k f(x_k).
struct Rule {
  std::vector<double> x;
  std::vector<double> w;
};

/// n-point Gauss-Legendre rule on [-1, 1], computed by Newton iteration on
/// the Legendre recurrence (machine precision for n up to a few hundred).
Rule gauss_legendre(int n);

/// Maps a [-1,1] rule onto [a, b].
Rule mapped(const Rule& base, double a, double b);

/// n-point Gauss-Jacobi rule for int_0^1 (1-s)^p s^q f(s) ds with p, q > -1.
/// The singular weight is built into the returned weights (Golub-Welsch).
Rule gauss_jacobi01(int n, double p, double q);

struct AdaptiveOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-14;
  int max_depth = 32;
};

/// Adaptive Gauss-Kronrod (G7,K15) on [a, b]. Throws QuadratureFailure when
/// bisection hits max_depth before the local error estimate meets tolerance.
double adaptive_gk(const std::function<double(double)>& f, double a, double b,
                   const AdaptiveOptions& opt = {});

/// Non-adaptive K15 evaluation, returning the embedded error estimate.
double gk15(const std::function<double(double)>& f, double a, double b,
            double* err_estimate);

}  // namespace hilferstab::quad
