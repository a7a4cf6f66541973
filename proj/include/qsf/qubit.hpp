#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qsf {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;

/// 2x2 Hermitian, unit-trace, positive semidefinite qubit state.
///
/// Basis convention: |0> = (1, 0)^T with sigma_z|0> = +|0>; entry (1,1) is the
/// population of the target state |1>.
class DensityMatrix {
 public:
  static DensityMatrix ground();
  static DensityMatrix excited();
  static DensityMatrix maximally_mixed();
  /// Pure state a0|0> + a1|1>; amplitudes must be normalized to 1e-12.
  static DensityMatrix from_pure(Complex a0, Complex a1);
  /// Validates Hermiticity, trace, and positivity before accepting `m`.
  static DensityMatrix from_matrix(const Matrix2c& m);

  const Matrix2c& matrix() const { return m_; }
  Complex operator()(int row, int col) const { return m_(row, col); }
  double trace() const { return m_.trace().real(); }
  double purity() const { return (m_ * m_).trace().real(); }

 private:
  explicit DensityMatrix(const Matrix2c& m) : m_(m) {}
  friend DensityMatrix conjugate(const DensityMatrix&, const Matrix2c&);

  Matrix2c m_;
};

/// Fixed Rabi frequency and the detuning bound, both in rad/s.
class ControlField {
 public:
  ControlField(double omega, double delta_max);

  double omega() const { return omega_; }
  double delta_max() const { return delta_max_; }

  friend bool operator==(const ControlField&, const ControlField&) = default;

 private:
  double omega_;
  double delta_max_;
};

/// Systematic errors: Omega -> Omega (1 + delta_omega), Delta -> Delta + delta_delta.
struct ErrorPair {
  double delta_omega = 0.0;  // relative
  double delta_delta = 0.0;  // rad/s
};

/// Piecewise-constant detuning waveform. Immutable once constructed.
class PulseSequence {
 public:
  PulseSequence(ControlField field, double dt, std::vector<double> deltas);

  const ControlField& field() const { return field_; }
  double dt() const { return dt_; }
  std::span<const double> deltas() const { return deltas_; }
  std::size_t size() const { return deltas_.size(); }
  double duration() const { return dt_ * static_cast<double>(deltas_.size()); }

  friend bool operator==(const PulseSequence&, const PulseSequence&) = default;

 private:
  ControlField field_;
  double dt_;
  std::vector<double> deltas_;
};

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// exp(-i dt (omega sx + delta sz) / 2) in closed form.
Matrix2c step_unitary(double omega, double delta, double dt);

/// Returns U rho U^dagger, re-Hermitized.
DensityMatrix conjugate(const DensityMatrix& rho, const Matrix2c& u);

DensityMatrix propagate_step(const DensityMatrix& rho, const ControlField& field, double delta,
                             double dt, const ErrorPair& err = {});

/// Full trajectory; element 0 is rho0, element k is the state after k steps.
std::vector<DensityMatrix> evolve_pulse(const DensityMatrix& rho0, const PulseSequence& pulse,
                                        const ErrorPair& err = {});

/// Same as evolve_pulse(...).back() without storing the trajectory.
DensityMatrix final_state(const DensityMatrix& rho0, const PulseSequence& pulse,
                          const ErrorPair& err = {});

double population_excited(const DensityMatrix& rho);

BlochVector bloch_vector(const DensityMatrix& rho);

struct ScanRow {
  double delta_delta;    // rad/s
  double delta_omega;    // relative
  double delta_err_rel;  // delta_delta / delta_max, 0 when delta_max == 0
  double population;
};

using ScanTable = std::vector<ScanRow>;

/// Final |1> population from |0> for every grid point, in grid order.
/// Grid points are independent; `threads` > 1 splits them across workers.
ScanTable scan_robustness(const PulseSequence& pulse, std::span<const ErrorPair> grid,
                          unsigned threads = 1);

/// Inclusive linear axis: `count` points from `min` to `max` (count == 1 gives min).
struct AxisSpec {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;

  std::vector<double> values() const;
};

/// Cartesian grid with delta_delta given relative to `delta_max` and
/// delta_omega relative; row-major over (delta, omega).
std::vector<ErrorPair> relative_error_grid(double delta_max, const AxisSpec& delta_rel,
                                           const AxisSpec& omega_rel);

}  // namespace qsf
