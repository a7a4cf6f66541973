#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace qsf::numerics {

/// Adaptive Gauss-Kronrod quadrature of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10);

/// Integral of a smooth `period`-periodic f over one period by the trapezoidal rule,
/// doubling the node count until successive values agree to `rel_tol`.
double periodic_integral(const std::function<double(double)>& f, double period,
                         double rel_tol = 1e-13);

/// Running integral of uniformly spaced samples, fourth-order accurate.
/// out[0] = 0, out[k] = integral from x_0 to x_k. Needs >= 4 samples.
std::vector<double> cumulative_integral(std::span<const double> y, double h);
std::vector<std::complex<double>> cumulative_integral(std::span<const std::complex<double>> y,
                                                      double h);
std::complex<double> sample_integral(std::span<const std::complex<double>> y, double h);

/// Four-point Lagrange interpolation on a uniform grid starting at x0.
double interpolate_uniform(std::span<const double> y, double x0, double h, double x);

struct Minimum1D {
  double x;
  double fx;
};

/// Brent's method on [lo, hi].
Minimum1D brent_minimize(const std::function<double(double)>& f, double lo, double hi);

/// Evaluates f on `seeds` evenly spaced points in [lo, hi], then refines the best
/// seed with Brent's method on its neighbouring bracket.
Minimum1D scan_minimize(const std::function<double(double)>& f, double lo, double hi,
                        int seeds = 200);

struct MinimumND {
  std::vector<double> x;
  double fx;
  bool converged;
  int iterations;
};

/// Nelder-Mead simplex minimization.
MinimumND nelder_mead(const std::function<double(std::span<const double>)>& f,
                      std::vector<double> x0, double step = 0.25, double size_tol = 1e-9,
                      int max_iterations = 20000);

/// Scalar ODE y' = rhs(t, y) from (0, y0). Integrates with an adaptive
/// Dormand-Prince 5(4) stepper until y first reaches `target` and returns that time.
/// Throws NumericalError if the target is not reached before t_max.
double arrival_time(const std::function<double(double, double)>& rhs, double y0, double target,
                    double t_max, double rel_tol = 1e-10, double abs_tol = 1e-12);

using OdeRhs = std::function<void(const std::vector<double>& y, std::vector<double>& dydt, double t)>;

/// Samples the solution of y' = rhs(y, t) at the (increasing) `times`, starting from
/// y0 at times[0]. Adaptive Dormand-Prince 5(4) stepping onto every sample time.
std::vector<std::vector<double>> ode_sample(const OdeRhs& rhs, std::vector<double> y0,
                                            std::span<const double> times,
                                            double rel_tol = 1e-10, double abs_tol = 1e-12);

}  // namespace qsf::numerics
