#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qsf/qubit.hpp"

namespace qsf {

/// Starting amplitudes for GRAPE.
struct GrapeInit {
  enum class Kind { LinearRamp, Constant, Custom };
  Kind kind = Kind::LinearRamp;
  double value = 0.0;          // ramp end magnitude or constant, rad/s
  std::vector<double> custom;  // rad/s, used with Kind::Custom
};

/// First-order GRAPE over M piecewise-constant detuning amplitudes with the drift
/// (Omega/2) sigma_x and the single control (1/2) sigma_z.
struct GrapeConfig {
  std::size_t m_steps = 20;
  double total_time = 0.0;      // s
  /// Step size for amplitudes measured in units of Omega.
  double learning_rate = 1.0;
  int max_iterations = 5000;
  GrapeInit init;
  double target_fidelity = 0.999;
  bool line_search = true;

  void validate() const;
};

/// Final |1> population from |0>.
double grape_fidelity(std::span<const double> amplitudes, const GrapeConfig& cfg,
                      const ControlField& field);

/// Exact d f / d u_k (s/rad) from forward states and backward co-states.
std::vector<double> grape_gradient(std::span<const double> amplitudes, const GrapeConfig& cfg,
                                   const ControlField& field);

std::vector<double> grape_initial_amplitudes(const GrapeConfig& cfg, const ControlField& field);

struct GrapeResult {
  std::vector<double> amplitudes;  // rad/s
  std::vector<double> history;     // fidelity before the first update, then after each
  int iterations = 0;
  bool reached_target = false;
  /// Gradient vanished below the target: a local optimum.
  bool stagnated = false;
  std::string message;
};

/// Gradient ascent u <- clip(u + eps Omega^2 grad f, +-delta_max). With line search the step
/// is halved until f does not decrease, so the history is non-decreasing.
GrapeResult grape_optimize(const GrapeConfig& cfg, const ControlField& field);

PulseSequence grape_pulse(const GrapeResult& result, const GrapeConfig& cfg,
                          const ControlField& field);

}  // namespace qsf
