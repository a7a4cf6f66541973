#include "qsf/environment.hpp"

#include <algorithm>
#include <cmath>

#include "qsf/errors.hpp"

namespace qsf {

std::string to_string(ErrorSampling e) {
  switch (e) {
    case ErrorSampling::None: return "none";
    case ErrorSampling::SingleDelta: return "single-delta";
    case ErrorSampling::SingleOmega: return "single-omega";
    case ErrorSampling::Hybrid: return "hybrid";
  }
  return "none";
}

std::string to_string(RewardSchedule r) {
  switch (r) {
    case RewardSchedule::Trivial: return "trivial";
    case RewardSchedule::Pretrain: return "pretrain";
    case RewardSchedule::Finetune: return "finetune";
  }
  return "trivial";
}

ErrorSampling parse_error_sampling(const std::string& s) {
  for (auto e : {ErrorSampling::None, ErrorSampling::SingleDelta, ErrorSampling::SingleOmega,
                 ErrorSampling::Hybrid})
    if (to_string(e) == s) return e;
  throw DomainError("unknown error sampling mode '" + s + "'");
}

RewardSchedule parse_reward_schedule(const std::string& s) {
  for (auto r : {RewardSchedule::Trivial, RewardSchedule::Pretrain, RewardSchedule::Finetune})
    if (to_string(r) == s) return r;
  throw DomainError("unknown reward schedule '" + s + "'");
}

void EnvConfig::validate() const {
  require(n_steps >= 2, "env: n_steps must be at least 2");
  require(std::isfinite(total_time) && total_time > 0.0, "env: total_time must be positive");
  require(threshold > 0.0 && threshold < 1.0, "env: threshold must lie in (0, 1)");
  require(std::isfinite(constant), "env: reward constant must be finite");
  require(std::isfinite(edge_bonus), "env: edge bonus must be finite");
  require(std::isfinite(error_range) && error_range >= 0.0, "env: error range must be >= 0");
  require(field.delta_max() > 0.0, "env: delta_max must be positive");
}

nlohmann::json EnvConfig::to_json() const {
  return {{"omega_rad_per_s", field.omega()},
          {"delta_max_rad_per_s", field.delta_max()},
          {"n_steps", n_steps},
          {"total_time_s", total_time},
          {"error_sampling", to_string(error_sampling)},
          {"error_range", error_range},
          {"reward_schedule", to_string(reward)},
          {"threshold", threshold},
          {"constant", constant},
          {"edge_bonus", edge_bonus},
          {"keep_shaping", keep_shaping},
          {"seed", seed}};
}

namespace {

template <class T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DomainError(std::string("env config: field '") + key + "' has the wrong type");
  }
}

}  // namespace

EnvConfig EnvConfig::from_json(const nlohmann::json& j) {
  require(j.is_object(), "env config: expected a JSON object");
  for (const char* key : {"omega_rad_per_s", "delta_max_rad_per_s", "total_time_s"})
    require(j.contains(key), std::string("env config: missing field '") + key + "'");
  EnvConfig c;
  c.field = ControlField(field_or(j, "omega_rad_per_s", 0.0), field_or(j, "delta_max_rad_per_s", 0.0));
  c.n_steps = field_or<std::size_t>(j, "n_steps", c.n_steps);
  c.total_time = field_or(j, "total_time_s", c.total_time);
  c.error_sampling = parse_error_sampling(field_or<std::string>(j, "error_sampling", "none"));
  c.error_range = field_or(j, "error_range", c.error_range);
  c.reward = parse_reward_schedule(field_or<std::string>(j, "reward_schedule", "trivial"));
  c.threshold = field_or(j, "threshold", c.threshold);
  c.constant = field_or(j, "constant", c.constant);
  c.edge_bonus = field_or(j, "edge_bonus", c.edge_bonus);
  c.keep_shaping = field_or(j, "keep_shaping", c.keep_shaping);
  c.seed = field_or<std::uint64_t>(j, "seed", c.seed);
  c.validate();
  return c;
}

double renormalized_to_detuning(double action, double delta_max) {
  return (2.0 * action - 1.0) * delta_max;
}

double detuning_to_renormalized(double delta, double delta_max) {
  return (delta + delta_max) / (2.0 * delta_max);
}

ErrorPair sample_error(const EnvConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-cfg.error_range, cfg.error_range);
  ErrorPair e;
  switch (cfg.error_sampling) {
    case ErrorSampling::None: break;
    case ErrorSampling::SingleDelta: e.delta_delta = u(rng) * cfg.field.delta_max(); break;
    case ErrorSampling::SingleOmega: e.delta_omega = u(rng); break;
    case ErrorSampling::Hybrid:
      e.delta_delta = u(rng) * cfg.field.delta_max();
      e.delta_omega = u(rng);
      break;
  }
  return e;
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

RLState Environment::reset(std::uint64_t episode) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                    static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32),
                    0x5eedu};
  std::mt19937_64 rng(seq);
  return reset_with(sample_error(cfg_, rng));
}

RLState Environment::reset_with(const ErrorPair& err) {
  rho_ = DensityMatrix::ground();
  err_ = err;
  step_ = 0;
  started_ = true;
  return {0.0, 0.5, 0.0};
}

double Environment::reward_for(double action, double p) const {
  const std::size_t n = cfg_.n_steps;
  const bool last = step_ + 1 == n;
  const double ramp = static_cast<double>(step_) / static_cast<double>(n - 1);
  double r = 0.0;
  switch (cfg_.reward) {
    case RewardSchedule::Trivial: r = p - 1.0; break;
    case RewardSchedule::Pretrain: r = -std::abs(action - ramp); break;
    case RewardSchedule::Finetune:
      if (last && p > cfg_.threshold) r = cfg_.constant;
      if (cfg_.keep_shaping) r -= std::abs(action - ramp);
      break;
  }
  if (step_ == 0 || last) r += cfg_.edge_bonus;
  return r;
}

StepResult Environment::step(double action) {
  require(started_, "env: step before reset");
  require(!done(), "env: episode already finished");
  require(std::isfinite(action), "env: action must be finite");
  action = std::clamp(action, 0.0, 1.0);
  const double delta = renormalized_to_detuning(action, cfg_.field.delta_max());
  rho_ = propagate_step(rho_, cfg_.field, delta, cfg_.dt(), err_);
  const double p = population_excited(rho_);
  StepResult out;
  out.reward = reward_for(action, p);
  ++step_;
  out.state = {p, action, static_cast<double>(step_) / static_cast<double>(cfg_.n_steps)};
  out.done = done();
  return out;
}

}  // namespace qsf
