#include "qsf/sta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qsf/errors.hpp"
#include "qsf/numerics.hpp"

namespace qsf {

namespace {

using std::numbers::pi;
constexpr double kPi2 = pi * pi;

void require_samples(std::size_t n, std::size_t min) {
  require(n >= min, "trajectory needs at least " + std::to_string(min) + " samples");
}

// sin(x) - x without cancellation for small x.
double sin_minus_x(double x) {
  if (std::abs(x) > 0.1) return std::sin(x) - x;
  const double x2 = x * x;
  double term = -x * x2 / 6.0;
  double sum = term;
  for (int k = 2; k < 8; ++k) {
    term *= -x2 / static_cast<double>((2 * k) * (2 * k + 1));
    sum += term;
  }
  return sum;
}

// Ansatz pieces in reduced time s = t/T on [0, 1/2]; the other half follows
// from theta(1-s) = pi - theta(s).
struct AnsatzShape {
  double a;
  double omega_t;  // Omega T

  // a s + pi^2 s^2/2 - pi^2 s^3/3 - 2 sin^2(pi s/2), the bracket with constants folded in.
  double core(double s) const {
    const double h = std::sin(0.5 * pi * s);
    return a * s + 0.5 * kPi2 * s * s - kPi2 * s * s * s / 3.0 - 2.0 * h * h;
  }
  // g = pi sin(pi s) - pi^2 s (1-s), theta_dot / Omega = 1 - g/a.
  double g(double s) const {
    const double u = std::min(s, 1.0 - s);
    return pi * sin_minus_x(pi * u) + kPi2 * u * u;
  }
  double theta(double s) const {
    if (s <= 0.5) return omega_t / a * core(s);
    return pi - omega_t / a * core(1.0 - s);
  }
  double theta_dot_rel(double s) const { return 1.0 - g(s) / a; }
  // theta_ddot / Omega^2.
  double theta_ddot_rel(double s) const {
    const double u = std::min(s, 1.0 - s);
    const double h = std::sin(0.5 * pi * u);
    const double v = kPi2 / (a * omega_t) * (2.0 * h * h - 2.0 * u);
    return s <= 0.5 ? v : -v;
  }
  // cos beta on the branch cos beta >= 0.
  double cos_beta(double s) const {
    const double q = g(s) / a;
    return std::sqrt(std::max(0.0, q * (2.0 - q)));
  }
  // d eta / d(Omega t) = -cos beta / sin theta, with its finite limit at the ends.
  double eta_rate(double s) const {
    const double u = std::min(s, 1.0 - s);
    if (u < 1e-7) return -pi / omega_t * std::sqrt(2.0 / a);
    const double th = theta(u);
    return -cos_beta(u) / std::sin(th);
  }
};

double ansatz_omega_t(double a) { return pi * a / (a - kAnsatzMinA); }

std::vector<double> uniform_times(double duration, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k)
    t[k] = duration * static_cast<double>(k) / static_cast<double>(n - 1);
  t.back() = duration;
  return t;
}

// Quadratic extrapolation to both ends from the three nearest interior samples.
void extrapolate_ends(std::vector<double>& v) {
  const std::size_t n = v.size();
  v[0] = 3.0 * v[1] - 3.0 * v[2] + v[3];
  v[n - 1] = 3.0 * v[n - 2] - 3.0 * v[n - 3] + v[n - 4];
}

std::vector<std::complex<double>> phased(const AngleTrajectory& traj,
                                         const std::function<std::complex<double>(std::size_t)>& w) {
  std::vector<std::complex<double>> y(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) y[k] = std::polar(1.0, traj.eta[k]) * w(k);
  return y;
}

}  // namespace

AnsatzParameter::AnsatzParameter(double a) : a_(a) {
  std::ostringstream msg;
  msg << "ansatz parameter a must be finite and exceed 2 - pi^2/6 (" << kAnsatzMinA << "), got "
      << a;
  require(std::isfinite(a) && a > kAnsatzMinA, msg.str());
}

double SeriesCoefficients::m(double theta) const {
  double v = 1.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    v += n * alphas[i] * std::cos(2.0 * n * theta);
  }
  return v;
}

double SeriesCoefficients::m_prime(double theta) const {
  double v = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    v -= 2.0 * n * n * alphas[i] * std::sin(2.0 * n * theta);
  }
  return v;
}

double SeriesCoefficients::eta(double theta) const {
  double v = 2.0 * theta;
  for (std::size_t i = 0; i < alphas.size(); ++i)
    v += alphas[i] * std::sin(2.0 * static_cast<double>(i + 1) * theta);
  return v;
}

std::string to_string(SensitivityTarget t) {
  return t == SensitivityTarget::DetuningError ? "detuning-error" : "rabi-error";
}

std::string to_string(SynthesisRoute r) { return r == SynthesisRoute::Ansatz ? "ansatz" : "series"; }

double ContinuousPulse::max_abs() const {
  double m = 0.0;
  for (double d : delta) m = std::max(m, std::abs(d));
  return m;
}

double ContinuousPulse::at(double t) const {
  const double h = duration / static_cast<double>(delta.size() - 1);
  return numerics::interpolate_uniform(delta, 0.0, h, t);
}

double ansatz_duration(AnsatzParameter a, const ControlField& field) {
  return ansatz_omega_t(a.value()) / field.omega();
}

AngleTrajectory ansatz_theta(AnsatzParameter a, const ControlField& field, std::size_t n_samples) {
  require_samples(n_samples, 100);
  const double omega = field.omega();
  const AnsatzShape shape{a.value(), ansatz_omega_t(a.value())};
  require(a.value() >= kAnsatzMinValidA,
          "ansatz theta leaves [0, pi] for a = " + std::to_string(a.value()) + " (needs a >= " +
              std::to_string(kAnsatzMinValidA) + ")");

  AngleTrajectory traj;
  traj.field = field;
  traj.duration = shape.omega_t / omega;
  traj.times = uniform_times(traj.duration, n_samples);

  const std::size_t n = n_samples;
  traj.theta.resize(n);
  traj.theta_dot.resize(n);
  traj.theta_ddot.resize(n);
  traj.beta.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(n - 1);
    const double rel = shape.theta_dot_rel(s);
    if (std::abs(rel) > 1.0 + 1e-12)
      throw DomainError("ansatz invalid for this a: |theta_dot| exceeds Omega");
    traj.theta[k] = shape.theta(s);
    traj.theta_dot[k] = omega * rel;
    traj.theta_ddot[k] = omega * omega * shape.theta_ddot_rel(s);
    traj.beta[k] = std::atan2(-rel, shape.cos_beta(s));
  }
  traj.theta.front() = 0.0;
  traj.theta.back() = pi;

  // eta in reduced time tau = Omega t.
  std::vector<double> taus(n);
  for (std::size_t k = 0; k < n; ++k) taus[k] = traj.times[k] * omega;
  taus.back() = shape.omega_t;
  auto rhs = [&](const std::vector<double>&, std::vector<double>& dy, double tau) {
    dy[0] = shape.eta_rate(std::clamp(tau / shape.omega_t, 0.0, 1.0));
  };
  const auto sol = numerics::ode_sample(rhs, {0.0}, taus);
  traj.eta.resize(n);
  traj.gamma_plus.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    traj.eta[k] = sol[k][0];
    traj.gamma_plus[k] = 0.5 * sol[k][0];
  }
  return traj;
}

double ansatz_arrival_time(AnsatzParameter a, const ControlField& field) {
  const AnsatzShape shape{a.value(), ansatz_omega_t(a.value())};
  auto rhs = [&](double tau, double) {
    return shape.theta_dot_rel(std::clamp(tau / shape.omega_t, 0.0, 1.0));
  };
  return numerics::arrival_time(rhs, 0.0, pi, 2.0 * shape.omega_t) / field.omega();
}

AngleTrajectory series_theta(const SeriesCoefficients& c, const ControlField& field,
                             std::size_t n_samples) {
  require_samples(n_samples, 100);
  for (double x : c.alphas) require(std::isfinite(x), "series coefficients must be finite");
  const double omega = field.omega();

  auto rate = [&](double th) {
    const double x = 2.0 * c.m(th) * std::sin(th);
    return 1.0 / std::sqrt(1.0 + x * x);
  };
  const double qsl = qsl_time(c);
  const double tau_end = numerics::arrival_time([&](double, double th) { return rate(th); }, 0.0,
                                                pi, 4.0 * qsl + 10.0, 1e-12, 1e-14);

  AngleTrajectory traj;
  traj.field = field;
  traj.series = c;
  traj.duration = tau_end / omega;
  traj.times = uniform_times(traj.duration, n_samples);

  std::vector<double> taus(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) taus[k] = traj.times[k] * omega;
  taus.back() = tau_end;
  auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy, double) {
    const double r = rate(y[0]);
    dy[0] = r;
    dy[1] = r * c.m(y[0]);
  };
  const auto sol = numerics::ode_sample(rhs, {0.0, 0.0}, taus, 1e-12, 1e-14);

  const std::size_t n = n_samples;
  traj.theta.resize(n);
  traj.theta_dot.resize(n);
  traj.theta_ddot.resize(n);
  traj.beta.resize(n);
  traj.eta.resize(n);
  traj.gamma_plus.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double th = k + 1 == n ? pi : sol[k][0];
    const double m = c.m(th);
    const double x = 2.0 * m * std::sin(th);
    const double dx = 2.0 * c.m_prime(th) * std::sin(th) + 2.0 * m * std::cos(th);
    const double q = 1.0 + x * x;
    traj.theta[k] = th;
    traj.theta_dot[k] = omega / std::sqrt(q);
    traj.theta_ddot[k] = -omega * omega * x * dx / (q * q);
    // sin beta = -1/sqrt(q), cot beta = 2 M sin theta.
    traj.beta[k] = std::atan2(-1.0, -x);
    traj.eta[k] = c.eta(th);
    traj.gamma_plus[k] = sol[k][1];
  }
  return traj;
}

AngleTrajectory flat_pulse_trajectory(const ControlField& field, std::size_t n_samples) {
  require_samples(n_samples, 4);
  AngleTrajectory traj;
  traj.field = field;
  traj.duration = pi / field.omega();
  traj.times = uniform_times(traj.duration, n_samples);
  traj.theta.resize(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) traj.theta[k] = field.omega() * traj.times[k];
  traj.theta.back() = pi;
  traj.theta_dot.assign(n_samples, field.omega());
  traj.theta_ddot.assign(n_samples, 0.0);
  traj.beta.assign(n_samples, -0.5 * pi);
  traj.eta.assign(n_samples, 0.0);
  traj.gamma_plus.assign(n_samples, 0.0);
  return traj;
}

double qsl_time(const SeriesCoefficients& c) {
  for (double x : c.alphas) require(std::isfinite(x), "series coefficients must be finite");
  // The integrand is smooth and pi-periodic in theta.
  return numerics::periodic_integral(
      [&](double th) {
        const double x = 2.0 * c.m(th) * std::sin(th);
        return std::sqrt(1.0 + x * x);
      },
      pi);
}

std::vector<QslMinimum> minimize_qsl_sequence(int order) {
  require(order >= 1 && order <= 10, "QSL minimization order must be in [1, 10]");
  std::vector<double> x;
  std::vector<QslMinimum> table;
  auto objective = [](std::span<const double> v) {
    try {
      return qsl_time(SeriesCoefficients{std::vector<double>(v.begin(), v.end())});
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  for (int n = 1; n <= order; ++n) {
    x.push_back(0.0);
    numerics::MinimumND r = numerics::nelder_mead(objective, x, 0.25, 1e-9);
    // Restart until a fresh simplex stops finding improvements.
    bool settled = false;
    for (int restart = 0; restart < 8 && !settled; ++restart) {
      numerics::MinimumND again = numerics::nelder_mead(objective, r.x, 0.05, 1e-9);
      settled = again.fx > r.fx - 1e-12;
      if (again.fx <= r.fx) r = again;
    }
    r.converged = settled;
    x = r.x;
    table.push_back({SeriesCoefficients{x}, r.fx, r.converged});
  }
  return table;
}

QslMinimum minimize_qsl(int order) { return minimize_qsl_sequence(order).back(); }

ContinuousPulse detuning_from_theta(const AngleTrajectory& traj) {
  require_samples(traj.size(), 5);
  const double omega = traj.field.omega();
  for (double td : traj.theta_dot)
    if (std::abs(td) > omega * (1.0 + 1e-9))
      throw DomainError("|theta_dot| exceeds Omega: no real beta exists");

  const std::size_t n = traj.size();
  ContinuousPulse out;
  out.times = traj.times;
  out.duration = traj.duration;
  out.delta.resize(n);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double cb = std::cos(traj.beta[k]);
    const double th = traj.theta[k];
    out.delta[k] = -traj.theta_ddot[k] / (omega * cb) + omega * cb * std::cos(th) / std::sin(th);
  }
  extrapolate_ends(out.delta);
  for (double d : out.delta)
    if (!std::isfinite(d)) throw NumericalError("inverse-engineered detuning is not finite");
  out.field = ControlField(omega, out.max_abs());
  return out;
}

ContinuousPulse detuning_series_closed_form(const AngleTrajectory& traj,
                                            const SeriesCoefficients& c) {
  require(traj.series.has_value() && *traj.series == c,
          "trajectory was not synthesized from these series coefficients");
  const double omega = traj.field.omega();
  ContinuousPulse out;
  out.times = traj.times;
  out.duration = traj.duration;
  out.delta.resize(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double th = traj.theta[k];
    const double td = traj.theta_dot[k];
    const double m = c.m(th);
    double harmonic = 0.0;
    for (std::size_t i = 0; i < c.alphas.size(); ++i) {
      const double nn = static_cast<double>(i + 1);
      harmonic += nn * nn * c.alphas[i] * std::sin(2.0 * nn * th);
    }
    const double q = 1.0 + 4.0 * m * m * std::sin(th) * std::sin(th);
    const double beta_dot =
        (-4.0 * td * std::sin(th) * harmonic + 2.0 * m * td * std::cos(th)) / q;
    // Branch with cot beta = 2 M sin theta: Delta = -(beta_dot' + 2 M Omega cos theta / sqrt(q)),
    // where beta_dot' is the rate of arccot(2 M sin theta).
    out.delta[k] = -(beta_dot + 2.0 * m * omega * std::cos(th) / std::sqrt(q));
  }
  out.field = ControlField(omega, out.max_abs());
  return out;
}

std::vector<double> lr_phase(const AngleTrajectory& traj) {
  require_samples(traj.size(), 5);
  const std::size_t n = traj.size();
  std::vector<double> rate(n);
  if (traj.series) {
    for (std::size_t k = 0; k < n; ++k) rate[k] = traj.theta_dot[k] * traj.series->m(traj.theta[k]);
  } else {
    // theta_dot cot beta / sin theta with theta_dot = -Omega sin beta.
    const double omega = traj.field.omega();
    for (std::size_t k = 1; k + 1 < n; ++k)
      rate[k] = -0.5 * omega * std::cos(traj.beta[k]) / std::sin(traj.theta[k]);
    extrapolate_ends(rate);
  }
  return numerics::cumulative_integral(rate, traj.step());
}

double error_integral(const AngleTrajectory& traj, SensitivityTarget target) {
  require_samples(traj.size(), 5);
  std::vector<std::complex<double>> y;
  if (target == SensitivityTarget::DetuningError)
    y = phased(traj, [&](std::size_t k) { return std::complex<double>(std::sin(traj.theta[k])); });
  else
    y = phased(traj, [&](std::size_t k) {
      const double s = std::sin(traj.theta[k]);
      return std::complex<double>(2.0 * traj.theta_dot[k] * s * s);
    });
  return std::abs(numerics::sample_integral(y, traj.step()));
}

double flat_error_integral(const ControlField& field, SensitivityTarget target) {
  return target == SensitivityTarget::DetuningError ? 2.0 / field.omega() : pi;
}

SensitivityOptimum optimize_sensitivity(SynthesisRoute route, SensitivityTarget target,
                                        const ControlField& field, std::size_t n_samples) {
  SensitivityOptimum out{route, target};
  out.baseline = flat_error_integral(field, target);
  numerics::Minimum1D m{};
  if (route == SynthesisRoute::Ansatz) {
    auto f = [&](double a) {
      return error_integral(ansatz_theta(AnsatzParameter(a), field, n_samples), target);
    };
    m = numerics::scan_minimize(f, 0.43, 2.0, 158);
    out.duration = ansatz_duration(AnsatzParameter(m.x), field);
  } else {
    auto f = [&](double alpha) {
      return error_integral(series_theta(SeriesCoefficients{{alpha}}, field, n_samples), target);
    };
    m = numerics::scan_minimize(f, -3.0, 3.0, 200);
    out.duration = qsl_time(SeriesCoefficients{{m.x}}) / field.omega();
  }
  out.parameter = m.x;
  out.residual = m.fx;
  out.qsl_omega_t = out.duration * field.omega();
  out.ok = out.residual <= 0.1 * out.baseline;
  return out;
}

double perturbative_transition(const AngleTrajectory& traj, const ErrorPair& err) {
  require_samples(traj.size(), 5);
  const auto y = phased(traj, [&](std::size_t k) {
    const double s = std::sin(traj.theta[k]);
    return std::complex<double>(err.delta_delta * s, -2.0 * err.delta_omega * traj.theta_dot[k] * s * s);
  });
  return 0.25 * std::norm(numerics::sample_integral(y, traj.step()));
}

namespace {

double overlap_sum(Complex i0, Complex i1, Complex f0, Complex f1) {
  auto normalized = [](Complex a, Complex b) { return std::abs(std::norm(a) + std::norm(b) - 1.0) <= 1e-12; };
  require(normalized(i0, i1), "initial state amplitudes must be normalized");
  require(normalized(f0, f1), "final state amplitudes must be normalized");
  return std::min(1.0, std::abs(f0) * std::abs(i0) + std::abs(f1) * std::abs(i1));
}

}  // namespace

double bang_off_bang_qsl(Complex i0, Complex i1, Complex f0, Complex f1) {
  // Polar-angle distance on the Bloch sphere, twice the Hilbert-space angle.
  return 2.0 * std::acos(overlap_sum(i0, i1, f0, f1));
}

double bang_off_bang_raw_arccos(Complex i0, Complex i1, Complex f0, Complex f1) {
  return std::acos(overlap_sum(i0, i1, f0, f1));
}

PulseSequence discretize(const ContinuousPulse& pulse, std::size_t n_steps) {
  require(n_steps >= 1, "discretize needs at least one step");
  require(pulse.delta.size() >= 2, "continuous pulse needs at least two samples");
  const double dt = pulse.duration / static_cast<double>(n_steps);
  std::vector<double> values(n_steps);
  double peak = pulse.field.delta_max();
  for (std::size_t k = 0; k < n_steps; ++k) {
    values[k] = pulse.at((static_cast<double>(k) + 0.5) * dt);
    peak = std::max(peak, std::abs(values[k]));
  }
  return PulseSequence(ControlField(pulse.field.omega(), peak), dt, std::move(values));
}

}  // namespace qsf
