#include "qsf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "qsf/errors.hpp"

namespace qsf::numerics {

namespace odeint = boost::numeric::odeint;

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  double err = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-14, &err);
  if (!std::isfinite(value)) throw NumericalError("quadrature produced a non-finite value");
  if (err > std::max(abs_tol, 1e-12 * std::abs(value)))
    throw NumericalError("quadrature did not reach the requested tolerance");
  return value;
}

double periodic_integral(const std::function<double(double)>& f, double period, double rel_tol) {
  std::size_t n = 32;
  double h = period / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) sum += f(h * static_cast<double>(k));
  double value = sum * h;
  for (int level = 0; level < 14; ++level) {
    // The refined grid adds the midpoints of the current one.
    double mid = 0.0;
    for (std::size_t k = 0; k < n; ++k) mid += f(h * (static_cast<double>(k) + 0.5));
    sum += mid;
    n *= 2;
    h *= 0.5;
    const double refined = sum * h;
    if (!std::isfinite(refined)) throw NumericalError("periodic quadrature produced a non-finite value");
    if (std::abs(refined - value) <= rel_tol * std::abs(refined)) return refined;
    value = refined;
  }
  throw NumericalError("periodic quadrature did not converge");
}

namespace {

template <class T>
std::vector<T> cumulative_impl(std::span<const T> y, double h) {
  const std::size_t n = y.size();
  if (n < 4) throw DomainError("cumulative_integral needs at least 4 samples");
  std::vector<T> out(n, T{});
  const double w = h / 24.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    T piece;
    if (k == 0)
      piece = w * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3]);
    else if (k + 2 == n)
      piece = w * (y[n - 4] - 5.0 * y[n - 3] + 19.0 * y[n - 2] + 9.0 * y[n - 1]);
    else
      piece = w * (-y[k - 1] + 13.0 * y[k] + 13.0 * y[k + 1] - y[k + 2]);
    out[k + 1] = out[k] + piece;
  }
  return out;
}

}  // namespace

std::vector<double> cumulative_integral(std::span<const double> y, double h) {
  return cumulative_impl(y, h);
}

std::vector<std::complex<double>> cumulative_integral(std::span<const std::complex<double>> y,
                                                      double h) {
  return cumulative_impl(y, h);
}

std::complex<double> sample_integral(std::span<const std::complex<double>> y, double h) {
  return cumulative_impl(y, h).back();
}

double interpolate_uniform(std::span<const double> y, double x0, double h, double x) {
  const std::size_t n = y.size();
  if (n == 0) throw DomainError("interpolate_uniform on empty samples");
  if (n < 4) {
    const double u = std::clamp((x - x0) / h, 0.0, static_cast<double>(n - 1));
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(u), n > 1 ? n - 2 : 0);
    if (n == 1) return y[0];
    const double f = u - static_cast<double>(i);
    return (1.0 - f) * y[i] + f * y[i + 1];
  }
  const double u = (x - x0) / h;
  const long last = static_cast<long>(n) - 1;
  long i = static_cast<long>(std::floor(u));
  long start = std::clamp(i - 1, 0L, last - 3);
  double result = 0.0;
  for (long a = start; a < start + 4; ++a) {
    double basis = 1.0;
    for (long b = start; b < start + 4; ++b)
      if (b != a) basis *= (u - static_cast<double>(b)) / static_cast<double>(a - b);
    result += basis * y[static_cast<std::size_t>(a)];
  }
  return result;
}

Minimum1D brent_minimize(const std::function<double(double)>& f, double lo, double hi) {
  std::uintmax_t iters = 500;
  auto r = boost::math::tools::brent_find_minima(f, lo, hi, std::numeric_limits<double>::digits,
                                                 iters);
  return {r.first, r.second};
}

Minimum1D scan_minimize(const std::function<double(double)>& f, double lo, double hi, int seeds) {
  if (seeds < 3) throw DomainError("scan_minimize needs at least 3 seeds");
  const double step = (hi - lo) / static_cast<double>(seeds - 1);
  int best = 0;
  double best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i < seeds; ++i) {
    const double v = f(lo + step * i);
    if (v < best_f) {
      best_f = v;
      best = i;
    }
  }
  const double a = lo + step * std::max(best - 1, 0);
  const double b = lo + step * std::min(best + 1, seeds - 1);
  Minimum1D refined = brent_minimize(f, a, b);
  if (refined.fx <= best_f) return refined;
  return {lo + step * best, best_f};
}

namespace {

using NdObjective = std::function<double(std::span<const double>)>;

double gsl_trampoline(const gsl_vector* v, void* params) {
  const auto& f = *static_cast<const NdObjective*>(params);
  const double value = f(std::span<const double>(v->data, v->size));
  return std::isfinite(value) ? value : std::numeric_limits<double>::max();
}

}  // namespace

MinimumND nelder_mead(const std::function<double(std::span<const double>)>& f,
                      std::vector<double> x0, double step, double size_tol, int max_iterations) {
  const std::size_t n = x0.size();
  if (n == 0) return {x0, f(x0), true, 0};

  gsl_multimin_function fn;
  fn.n = n;
  fn.f = &gsl_trampoline;
  fn.params = const_cast<NdObjective*>(&f);

  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, x0[i]);
  gsl_vector_set_all(ss, step);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, ss);

  bool converged = false;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), size_tol) == GSL_SUCCESS) {
      converged = true;
      break;
    }
  }
  MinimumND out{std::vector<double>(n), s->fval, converged, iter};
  for (std::size_t i = 0; i < n; ++i) out.x[i] = gsl_vector_get(s->x, i);
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(ss);
  gsl_vector_free(x);
  return out;
}

namespace {

using State = std::vector<double>;

auto make_stepper(double rel_tol, double abs_tol) {
  return odeint::make_dense_output(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>());
}

}  // namespace

double arrival_time(const std::function<double(double, double)>& rhs, double y0, double target,
                    double t_max, double rel_tol, double abs_tol) {
  auto sys = [&](const State& y, State& dy, double t) { dy[0] = rhs(t, y[0]); };
  auto stepper = make_stepper(rel_tol, abs_tol);
  stepper.initialize(State{y0}, 0.0, std::min(1e-3 * t_max, 1e-2));
  const bool rising = target >= y0;
  auto reached = [&](double y) { return rising ? y >= target : y <= target; };
  if (reached(y0)) return 0.0;
  while (stepper.current_time() < t_max) {
    stepper.do_step(sys);
    if (!std::isfinite(stepper.current_state()[0]))
      throw NumericalError("ODE state became non-finite");
    if (reached(stepper.current_state()[0])) {
      double lo = stepper.previous_time();
      double hi = stepper.current_time();
      State tmp(1);
      for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        stepper.calc_state(mid, tmp);
        (reached(tmp[0]) ? hi : lo) = mid;
      }
      // Newton polish on states integrated from the last accepted step rather than the
      // dense-output interpolant.
      const double t0 = stepper.previous_time();
      const State s0 = stepper.previous_state();
      auto controlled =
          odeint::make_controlled(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>());
      double t = 0.5 * (lo + hi);
      for (int i = 0; i < 3; ++i) {
        State y = s0;
        if (t > t0) odeint::integrate_adaptive(controlled, sys, y, t0, t, (t - t0) / 4.0);
        const double slope = rhs(t, y[0]);
        if (!(std::abs(slope) > 0.0)) break;
        const double next = t + (target - y[0]) / slope;
        if (!(next > t0 && next <= hi + (hi - lo) + 1e-12 * hi)) break;
        t = next;
      }
      return t;
    }
  }
  throw NumericalError("ODE did not reach its target before t_max");
}

std::vector<std::vector<double>> ode_sample(const OdeRhs& rhs, std::vector<double> y0,
                                            std::span<const double> times, double rel_tol,
                                            double abs_tol) {
  std::vector<std::vector<double>> out;
  out.reserve(times.size());
  if (times.empty()) return out;
  auto observer = [&](const State& y, double) { out.push_back(y); };
  auto stepper = odeint::make_controlled(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>());
  const double dt0 = times.size() > 1 ? (times[1] - times[0]) : 1e-3;
  try {
    odeint::integrate_times(stepper, rhs, y0, times.begin(), times.end(), dt0, observer,
                            odeint::max_step_checker(200000));
  } catch (const odeint::step_adjustment_error& e) {
    throw NumericalError(std::string("ODE step size collapsed: ") + e.what());
  } catch (const odeint::no_progress_error& e) {
    throw NumericalError(std::string("ODE made no progress: ") + e.what());
  }
  if (out.size() != times.size()) throw NumericalError("ODE sampling returned too few points");
  return out;
}

}  // namespace qsf::numerics
