#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

#include <json.hpp>

#include "qsf/policy.hpp"
#include "qsf/qubit.hpp"

namespace qsf {

enum class ErrorSampling { None, SingleDelta, SingleOmega, Hybrid };
enum class RewardSchedule { Trivial, Pretrain, Finetune };

std::string to_string(ErrorSampling e);
std::string to_string(RewardSchedule r);
ErrorSampling parse_error_sampling(const std::string& s);
RewardSchedule parse_reward_schedule(const std::string& s);

/// One control episode: N equal steps of duration T/N, actions are renormalized
/// detunings in [0, 1] mapped onto [-delta_max, delta_max].
struct EnvConfig {
  ControlField field{1.0, 1.0};
  std::size_t n_steps = 20;
  double total_time = 1.0;  // s
  ErrorSampling error_sampling = ErrorSampling::None;
  /// Half-width of the uniform draw. Detuning errors are relative to delta_max.
  double error_range = 0.0;
  RewardSchedule reward = RewardSchedule::Trivial;
  double threshold = 0.997;
  double constant = 1.0;
  /// Extra reward on the first and the final step; 0 disables it.
  double edge_bonus = 0.0;
  /// During fine-tuning, keep adding the linear-ramp shaping term.
  bool keep_shaping = false;
  std::uint64_t seed = 0;

  void validate() const;
  double dt() const { return total_time / static_cast<double>(n_steps); }

  nlohmann::json to_json() const;
  static EnvConfig from_json(const nlohmann::json& j);
};

double renormalized_to_detuning(double action, double delta_max);
double detuning_to_renormalized(double delta, double delta_max);

/// Uniform draw from the configured error box.
ErrorPair sample_error(const EnvConfig& cfg, std::mt19937_64& rng);

struct StepResult {
  RLState state;
  double reward = 0.0;
  bool done = false;
};

class Environment {
 public:
  explicit Environment(EnvConfig cfg);

  /// Starts episode `episode`; its error is drawn from a stream keyed by (seed, episode).
  RLState reset(std::uint64_t episode);
  RLState reset_with(const ErrorPair& err);

  /// Throws DomainError once the episode has finished or before the first reset.
  StepResult step(double action);

  const EnvConfig& config() const { return cfg_; }
  const ErrorPair& error() const { return err_; }
  const DensityMatrix& rho() const { return rho_; }
  std::size_t steps_taken() const { return step_; }
  bool done() const { return step_ >= cfg_.n_steps; }

 private:
  double reward_for(double action, double p) const;

  EnvConfig cfg_;
  DensityMatrix rho_ = DensityMatrix::ground();
  ErrorPair err_;
  std::size_t step_ = 0;
  bool started_ = false;
};

}  // namespace qsf
