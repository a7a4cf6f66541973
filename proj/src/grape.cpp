#include "qsf/grape.hpp"

#include <algorithm>
#include <cmath>

#include "qsf/errors.hpp"

namespace qsf {

namespace {

using Vec2 = Eigen::Vector2cd;

// dU/du for U = exp(-i dt (omega sx + u sz)/2).
Matrix2c step_unitary_derivative(double omega, double u, double dt) {
  const double w = std::hypot(omega, u);
  const double phi = 0.5 * w * dt;
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double dphi = 0.5 * dt * u / w;
  const double nx = omega / w;
  const double nz = u / w;
  const double dnx = -omega * u / (w * w * w);
  const double dnz = omega * omega / (w * w * w);
  const Complex I(0.0, 1.0);
  // U = c - i s (nx sx + nz sz)
  Matrix2c d;
  d(0, 0) = -s * dphi - I * (c * dphi * nz + s * dnz);
  d(1, 1) = -s * dphi + I * (c * dphi * nz + s * dnz);
  d(0, 1) = -I * (c * dphi * nx + s * dnx);
  d(1, 0) = d(0, 1);
  return d;
}

void check_amplitudes(std::span<const double> amps, const GrapeConfig& cfg) {
  require(amps.size() == cfg.m_steps, "GRAPE amplitude count must equal m_steps");
  for (double a : amps) require(std::isfinite(a), "GRAPE amplitudes must be finite");
}

double scaled_norm(std::span<const double> g, double omega) {
  double s = 0.0;
  for (double x : g) s += (x * omega) * (x * omega);
  return std::sqrt(s);
}

}  // namespace

void GrapeConfig::validate() const {
  require(m_steps >= 1, "GRAPE needs m_steps >= 1");
  require(std::isfinite(total_time) && total_time > 0.0, "GRAPE total_time must be > 0");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, "GRAPE learning rate must be > 0");
  require(max_iterations >= 0, "GRAPE max_iterations must be >= 0");
  require(target_fidelity > 0.0 && target_fidelity <= 1.0, "GRAPE target fidelity must be in (0, 1]");
  if (init.kind == GrapeInit::Kind::Custom)
    require(init.custom.size() == m_steps, "custom GRAPE init must have m_steps values");
}

double grape_fidelity(std::span<const double> amplitudes, const GrapeConfig& cfg,
                      const ControlField& field) {
  check_amplitudes(amplitudes, cfg);
  const double dt = cfg.total_time / static_cast<double>(cfg.m_steps);
  DensityMatrix rho = DensityMatrix::ground();
  for (double u : amplitudes) rho = conjugate(rho, step_unitary(field.omega(), u, dt));
  return population_excited(rho);
}

std::vector<double> grape_gradient(std::span<const double> amplitudes, const GrapeConfig& cfg,
                                   const ControlField& field) {
  check_amplitudes(amplitudes, cfg);
  const std::size_t m = cfg.m_steps;
  const double dt = cfg.total_time / static_cast<double>(m);
  const double omega = field.omega();

  // psi[k] = U_k ... U_1 |0>, chi[k] = <1| U_M ... U_{k+1}.
  std::vector<Matrix2c> u(m);
  for (std::size_t k = 0; k < m; ++k) u[k] = step_unitary(omega, amplitudes[k], dt);
  std::vector<Vec2> psi(m + 1);
  psi[0] = Vec2(1.0, 0.0);
  for (std::size_t k = 0; k < m; ++k) psi[k + 1] = u[k] * psi[k];
  std::vector<Eigen::RowVector2cd> chi(m + 1);
  chi[m] = Eigen::RowVector2cd(0.0, 1.0);
  for (std::size_t k = m; k-- > 0;) chi[k] = chi[k + 1] * u[k];

  const Complex amp = psi[m](1);
  std::vector<double> grad(m);
  for (std::size_t k = 0; k < m; ++k) {
    const Complex d = (chi[k + 1] * step_unitary_derivative(omega, amplitudes[k], dt) * psi[k])(0);
    grad[k] = 2.0 * (std::conj(amp) * d).real();
  }
  return grad;
}

std::vector<double> grape_initial_amplitudes(const GrapeConfig& cfg, const ControlField& field) {
  cfg.validate();
  std::vector<double> u(cfg.m_steps, 0.0);
  switch (cfg.init.kind) {
    case GrapeInit::Kind::LinearRamp:
      for (std::size_t k = 0; k < cfg.m_steps; ++k)
        u[k] = cfg.m_steps == 1 ? 0.0
                                : cfg.init.value * (-1.0 + 2.0 * static_cast<double>(k) /
                                                               static_cast<double>(cfg.m_steps - 1));
      break;
    case GrapeInit::Kind::Constant:
      std::fill(u.begin(), u.end(), cfg.init.value);
      break;
    case GrapeInit::Kind::Custom:
      u = cfg.init.custom;
      break;
  }
  for (double& x : u) x = std::clamp(x, -field.delta_max(), field.delta_max());
  return u;
}

GrapeResult grape_optimize(const GrapeConfig& cfg, const ControlField& field) {
  cfg.validate();
  const double omega = field.omega();
  const double bound = field.delta_max();
  GrapeResult res;
  res.amplitudes = grape_initial_amplitudes(cfg, field);
  double f = grape_fidelity(res.amplitudes, cfg, field);
  res.history.push_back(f);
  double eps = cfg.learning_rate;

  auto step_from = [&](const std::vector<double>& g, double rate) {
    std::vector<double> next(res.amplitudes);
    for (std::size_t k = 0; k < next.size(); ++k)
      next[k] = std::clamp(next[k] + rate * omega * omega * g[k], -bound, bound);
    return next;
  };

  while (f <= cfg.target_fidelity && res.iterations < cfg.max_iterations) {
    const std::vector<double> g = grape_gradient(res.amplitudes, cfg, field);
    if (scaled_norm(g, omega) < 1e-10) {
      res.stagnated = true;
      res.message = "gradient vanished below the target fidelity (local optimum)";
      break;
    }
    std::vector<double> next = step_from(g, eps);
    double fn = grape_fidelity(next, cfg, field);
    if (cfg.line_search) {
      int halvings = 0;
      while (fn < f && halvings < 60) {
        eps *= 0.5;
        next = step_from(g, eps);
        fn = grape_fidelity(next, cfg, field);
        ++halvings;
      }
      if (fn < f) {
        res.stagnated = true;
        res.message = "line search found no ascent step (local optimum)";
        break;
      }
      eps = std::min(eps * 1.2, 64.0 * cfg.learning_rate);
    }
    if (!std::isfinite(fn)) throw NumericalError("GRAPE fidelity became non-finite");
    res.amplitudes = std::move(next);
    f = fn;
    res.history.push_back(f);
    ++res.iterations;
  }
  res.reached_target = f > cfg.target_fidelity;
  if (res.reached_target) res.message = "target fidelity reached";
  else if (res.message.empty()) res.message = "iteration limit reached";
  return res;
}

PulseSequence grape_pulse(const GrapeResult& result, const GrapeConfig& cfg,
                          const ControlField& field) {
  return PulseSequence(field, cfg.total_time / static_cast<double>(cfg.m_steps), result.amplitudes);
}

}  // namespace qsf
