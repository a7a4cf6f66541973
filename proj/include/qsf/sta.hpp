#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qsf/qubit.hpp"

namespace qsf {

/// Smallest admissible ansatz parameter, 2 - pi^2/6. Durations diverge as a approaches it.
inline constexpr double kAnsatzMinA = 2.0 - 3.14159265358979323846 * 3.14159265358979323846 / 6.0;

/// Below this value theta(t) overshoots pi inside the pulse, so the trajectory is not a
/// valid Bloch path; it is the root of max_t theta = pi.
inline constexpr double kAnsatzMinValidA = 0.42661665164573825;

/// Free parameter of the smooth polynomial-trigonometric theta(t) ansatz.
class AnsatzParameter {
 public:
  explicit AnsatzParameter(double a);
  double value() const { return a_; }

 private:
  double a_;
};

/// Coefficients alpha_1..alpha_n of the global-phase expansion
/// eta(theta) = 2 theta + sum_n alpha_n sin(2 n theta). Empty means eta = 2 theta.
struct SeriesCoefficients {
  std::vector<double> alphas;

  /// M(theta) = 1 + sum_n n alpha_n cos(2 n theta), so that d eta / d theta = 2 M.
  double m(double theta) const;
  /// dM/dtheta.
  double m_prime(double theta) const;
  double eta(double theta) const;

  friend bool operator==(const SeriesCoefficients&, const SeriesCoefficients&) = default;
};

enum class SensitivityTarget { DetuningError, RabiError };
enum class SynthesisRoute { Ansatz, Series };

std::string to_string(SensitivityTarget t);
std::string to_string(SynthesisRoute r);

/// Sampled Bloch-sphere trajectory (theta, beta) of the invariant eigenstate
/// together with its Lewis-Riesenfeld phase. Samples are uniform in time over [0, duration].
struct AngleTrajectory {
  std::vector<double> times;       // s
  std::vector<double> theta;       // rad
  std::vector<double> theta_dot;   // rad/s
  std::vector<double> theta_ddot;  // rad/s^2
  std::vector<double> beta;        // rad, continuous branch from -pi/2
  std::vector<double> eta;         // rad
  std::vector<double> gamma_plus;  // rad
  double duration = 0.0;           // s
  ControlField field{1.0, 0.0};
  /// Set when the trajectory came from the series route.
  std::optional<SeriesCoefficients> series;

  std::size_t size() const { return times.size(); }
  double step() const { return duration / static_cast<double>(times.size() - 1); }
};

/// Detuning sampled on a uniform time grid over [0, duration].
struct ContinuousPulse {
  std::vector<double> times;  // s
  std::vector<double> delta;  // rad/s
  double duration = 0.0;
  ControlField field{1.0, 0.0};

  double max_abs() const;
  /// Cubic interpolation between samples.
  double at(double t) const;
};

/// T = pi a / (Omega (a - 2 + pi^2/6)).
double ansatz_duration(AnsatzParameter a, const ControlField& field);

AngleTrajectory ansatz_theta(AnsatzParameter a, const ControlField& field,
                             std::size_t n_samples = 2000);

/// Integrates the ansatz theta_dot(t) from theta = 0 and returns the time theta reaches pi.
double ansatz_arrival_time(AnsatzParameter a, const ControlField& field);

/// Series route: theta_dot = Omega / sqrt(1 + 4 M^2 sin^2 theta) integrated from 0 to pi.
AngleTrajectory series_theta(const SeriesCoefficients& c, const ControlField& field,
                             std::size_t n_samples = 2000);

/// Resonant flat pi pulse, theta = Omega t, beta = -pi/2.
AngleTrajectory flat_pulse_trajectory(const ControlField& field, std::size_t n_samples = 2000);

/// Dimensionless Omega T = integral_0^pi sqrt(1 + 4 M^2 sin^2 theta) d theta.
double qsl_time(const SeriesCoefficients& c);

struct QslMinimum {
  SeriesCoefficients coefficients;
  double omega_t = 0.0;
  bool converged = false;
};

/// Minimizes qsl_time over alpha_1..alpha_order, 1 <= order <= 10.
QslMinimum minimize_qsl(int order);

/// Minima for orders 1..order; each order starts from the previous optimum padded with 0.
std::vector<QslMinimum> minimize_qsl_sequence(int order);

/// Inverse engineering: Delta = -theta_ddot / (Omega cos beta) + Omega cot theta cos beta.
ContinuousPulse detuning_from_theta(const AngleTrajectory& traj);

/// Closed-form detuning for a series-route trajectory.
ContinuousPulse detuning_series_closed_form(const AngleTrajectory& traj,
                                            const SeriesCoefficients& c);

/// gamma_+(t) = 1/2 integral theta_dot cot beta / sin theta, per sample.
std::vector<double> lr_phase(const AngleTrajectory& traj);

/// |int e^{i eta} sin theta dt| (s) or |int e^{i eta} 2 theta_dot sin^2 theta dt|.
double error_integral(const AngleTrajectory& traj, SensitivityTarget target);

/// The same integral for the flat pi pulse on `field`.
double flat_error_integral(const ControlField& field, SensitivityTarget target);

struct SensitivityOptimum {
  SynthesisRoute route;
  SensitivityTarget target;
  double parameter = 0.0;  // a or alpha_1
  double residual = 0.0;
  double baseline = 0.0;   // flat pi-pulse value
  double duration = 0.0;   // s
  double qsl_omega_t = 0.0;
  bool ok = false;         // residual <= 10% of baseline
};

SensitivityOptimum optimize_sensitivity(SynthesisRoute route, SensitivityTarget target,
                                        const ControlField& field, std::size_t n_samples = 2000);

/// Leading-order transition probability (1/4)|int e^{i eta}(dD sin theta - 2i dW theta_dot sin^2 theta)|^2.
double perturbative_transition(const AngleTrajectory& traj, const ErrorPair& err);

/// Unconstrained minimal Omega T linking two pure states with impulsive detuning kicks
/// and free Rabi rotation between them. The full flip gives pi.
double bang_off_bang_qsl(Complex i0, Complex i1, Complex f0, Complex f1);

/// arccos(|f0 i0| + |f1 i1|), the Hilbert-space angle between the states.
double bang_off_bang_raw_arccos(Complex i0, Complex i1, Complex f0, Complex f1);

/// Midpoint sampling onto n_steps equal steps. The result's delta_max is the larger of
/// the source bound and the largest sampled magnitude.
PulseSequence discretize(const ContinuousPulse& pulse, std::size_t n_steps);

}  // namespace qsf
