#include "qsf/qubit.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "qsf/errors.hpp"

namespace qsf {

namespace {

constexpr double kStateTol = 1e-12;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

DensityMatrix DensityMatrix::ground() {
  Matrix2c m = Matrix2c::Zero();
  m(0, 0) = 1.0;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::excited() {
  Matrix2c m = Matrix2c::Zero();
  m(1, 1) = 1.0;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::maximally_mixed() {
  return DensityMatrix(Matrix2c::Identity() * 0.5);
}

DensityMatrix DensityMatrix::from_pure(Complex a0, Complex a1) {
  const double norm = std::norm(a0) + std::norm(a1);
  require(std::isfinite(norm), "state amplitudes must be finite");
  require(std::abs(norm - 1.0) <= kStateTol, "state amplitudes must be normalized");
  Eigen::Vector2cd psi(a0, a1);
  return DensityMatrix(psi * psi.adjoint());
}

DensityMatrix DensityMatrix::from_matrix(const Matrix2c& m) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      require(finite(m(i, j).real()) && finite(m(i, j).imag()), "density matrix must be finite");
  require((m - m.adjoint()).cwiseAbs().maxCoeff() <= kStateTol, "density matrix must be Hermitian");
  require(std::abs(m.trace() - Complex(1.0)) <= kStateTol, "density matrix must have unit trace");
  // For a Hermitian 2x2 the smaller eigenvalue is tr/2 - sqrt((a-d)^2/4 + |b|^2).
  const double a = m(0, 0).real();
  const double d = m(1, 1).real();
  const double lo = 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + std::norm(m(0, 1)));
  require(lo >= -kStateTol, "density matrix must be positive semidefinite");
  return DensityMatrix(m);
}

ControlField::ControlField(double omega, double delta_max) : omega_(omega), delta_max_(delta_max) {
  require(finite(omega) && omega > 0.0, "Rabi frequency must be finite and > 0");
  require(finite(delta_max) && delta_max >= 0.0, "delta_max must be finite and >= 0");
}

PulseSequence::PulseSequence(ControlField field, double dt, std::vector<double> deltas)
    : field_(field), dt_(dt), deltas_(std::move(deltas)) {
  require(finite(dt) && dt > 0.0, "pulse step dt must be finite and > 0");
  require(!deltas_.empty(), "pulse must contain at least one step");
  for (std::size_t k = 0; k < deltas_.size(); ++k) {
    const double d = deltas_[k];
    require(finite(d), "pulse detuning must be finite (step " + std::to_string(k) + ")");
    require(std::abs(d) <= field_.delta_max(),
            "pulse detuning exceeds delta_max at step " + std::to_string(k));
  }
}

Matrix2c step_unitary(double omega, double delta, double dt) {
  const double w = std::hypot(omega, delta);
  Matrix2c u;
  if (w == 0.0) {
    u.setIdentity();
    return u;
  }
  const double phi = 0.5 * w * dt;
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double nx = omega / w;
  const double nz = delta / w;
  u(0, 0) = Complex(c, -s * nz);
  u(0, 1) = Complex(0.0, -s * nx);
  u(1, 0) = Complex(0.0, -s * nx);
  u(1, 1) = Complex(c, s * nz);
  return u;
}

DensityMatrix conjugate(const DensityMatrix& rho, const Matrix2c& u) {
  Matrix2c out = u * rho.m_ * u.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(out);
}

DensityMatrix propagate_step(const DensityMatrix& rho, const ControlField& field, double delta,
                             double dt, const ErrorPair& err) {
  require(finite(delta) && finite(dt) && finite(err.delta_omega) && finite(err.delta_delta),
          "propagate_step inputs must be finite");
  require(dt > 0.0, "propagate_step requires dt > 0");
  const double omega = field.omega() * (1.0 + err.delta_omega);
  return conjugate(rho, step_unitary(omega, delta + err.delta_delta, dt));
}

std::vector<DensityMatrix> evolve_pulse(const DensityMatrix& rho0, const PulseSequence& pulse,
                                        const ErrorPair& err) {
  std::vector<DensityMatrix> out;
  out.reserve(pulse.size() + 1);
  out.push_back(rho0);
  for (double d : pulse.deltas())
    out.push_back(propagate_step(out.back(), pulse.field(), d, pulse.dt(), err));
  return out;
}

DensityMatrix final_state(const DensityMatrix& rho0, const PulseSequence& pulse,
                          const ErrorPair& err) {
  DensityMatrix rho = rho0;
  for (double d : pulse.deltas()) rho = propagate_step(rho, pulse.field(), d, pulse.dt(), err);
  return rho;
}

double population_excited(const DensityMatrix& rho) {
  return std::clamp(rho(1, 1).real(), 0.0, 1.0);
}

BlochVector bloch_vector(const DensityMatrix& rho) {
  // <sx> = 2 Re rho01, <sy> = -2 Im rho01 with rho01 = <0|rho|1>.
  const Complex r01 = rho(0, 1);
  return {2.0 * r01.real(), -2.0 * r01.imag(), (rho(0, 0) - rho(1, 1)).real()};
}

ScanTable scan_robustness(const PulseSequence& pulse, std::span<const ErrorPair> grid,
                          unsigned threads) {
  require(!grid.empty(), "robustness scan grid must be nonempty");
  ScanTable table(grid.size());
  const double dmax = pulse.field().delta_max();
  auto eval = [&](std::size_t i) {
    const ErrorPair& e = grid[i];
    const double pop = population_excited(final_state(DensityMatrix::ground(), pulse, e));
    table[i] = {e.delta_delta, e.delta_omega, dmax > 0.0 ? e.delta_delta / dmax : 0.0, pop};
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, grid.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) eval(i);
    return table;
  }
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < grid.size(); i += workers) eval(i);
      });
  }
  return table;
}

std::vector<double> AxisSpec::values() const {
  require(count >= 1, "grid axis needs at least one point");
  require(finite(min) && finite(max), "grid axis bounds must be finite");
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = min;
    return v;
  }
  const double step = (max - min) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) v[i] = min + step * static_cast<double>(i);
  v.back() = max;
  return v;
}

std::vector<ErrorPair> relative_error_grid(double delta_max, const AxisSpec& delta_rel,
                                           const AxisSpec& omega_rel) {
  const auto dv = delta_rel.values();
  const auto ov = omega_rel.values();
  const bool any_delta = std::any_of(dv.begin(), dv.end(), [](double x) { return x != 0.0; });
  require(!any_delta || delta_max > 0.0,
          "relative detuning errors need a pulse with delta_max > 0");
  std::vector<ErrorPair> grid;
  grid.reserve(dv.size() * ov.size());
  for (double d : dv)
    for (double o : ov) grid.push_back({o, d * delta_max});
  return grid;
}

}  // namespace qsf
