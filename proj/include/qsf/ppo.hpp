#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qsf/environment.hpp"
#include "qsf/policy.hpp"

namespace qsf {

struct PPOConfig {
  std::size_t batch_episodes = 20;
  double learning_rate = 1e-4;
  double clip_ratio = 0.2;
  double discount = 1.0;
  double gae_lambda = 0.95;
  int epochs_per_update = 10;
  double entropy_coeff = 0.01;
  double value_coeff = 0.5;
  /// Global gradient-norm clip; 0 disables it.
  double max_grad_norm = 0.5;
  std::size_t max_episodes = 20000;
  /// Stop after this many consecutive flat 200-episode windows; 0 disables plateau stopping.
  int plateau_windows = 5;
  std::size_t plateau_window = 200;
  double plateau_tolerance = 1e-3;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static PPOConfig from_json(const nlohmann::json& j);
};

/// One complete episode as seen by the learner.
struct Episode {
  Eigen::Matrix3Xd states;          // observation before each action
  std::vector<double> raw_actions;  // pre-clamp samples
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  double final_population = 0.0;

  double total_reward() const;
};

/// Rollout of `env` under `net`; actions are sampled with `rng` when `stochastic`.
Episode run_episode(const PolicyNetwork& net, Environment& env, std::uint64_t episode,
                    bool stochastic, std::mt19937_64& rng);

/// Flattened training batch.
struct Batch {
  Eigen::Matrix3Xd states;
  Eigen::VectorXd raw_actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

/// Generalized advantage estimates with a zero bootstrap after the final step.
void compute_gae(const Episode& ep, double discount, double lambda, std::vector<double>& adv,
                 std::vector<double>& ret);

/// GAE over every episode; advantages are standardized when their spread is non-negligible.
Batch make_batch(const std::vector<Episode>& episodes, const PPOConfig& cfg);

/// min(ratio A, clip(ratio, 1 - eps, 1 + eps) A).
double clipped_surrogate(double ratio, double advantage, double clip_ratio);

struct LossTerms {
  double policy = 0.0;   // negated mean clipped surrogate
  double value = 0.0;    // mean squared value error
  double entropy = 0.0;  // per-sample Gaussian entropy
  double total = 0.0;    // policy + c_v value - c_e entropy
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Loss to be minimized and its gradient in PolicyNetwork::flat() order.
LossTerms ppo_loss(const PolicyNetwork& net, const Batch& batch, const PPOConfig& cfg,
                   Eigen::VectorXd* grad);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long long t = 0;
};

struct UpdateResult {
  LossTerms first;  // loss at the start of the update
  LossTerms last;   // loss before the final epoch's step
  bool ok = true;
  std::string message;
};

/// epochs_per_update full-batch Adam steps. On a non-finite loss or gradient the network
/// is left untouched and ok is false.
UpdateResult ppo_update(PolicyNetwork& net, AdamState& adam, const Batch& batch,
                        const PPOConfig& cfg);

struct Evaluation {
  double nominal = 0.0;      // final population with no error
  double worst = 0.0;        // minimum over the 3x3 corner/edge grid of the error box
  double score() const { return std::min(nominal, worst); }
};

/// Deterministic rollout at zero error, as a piecewise-constant pulse.
PulseSequence extract_pulse(const PolicyNetwork& net, const EnvConfig& cfg);

/// Open-loop evaluation of the extracted pulse.
Evaluation evaluate_policy(const PolicyNetwork& net, const EnvConfig& cfg);

enum class TrainPhase { Pretrain, Finetune };

struct TrainRecord {
  std::vector<double> episode_rewards;
  std::vector<LossTerms> update_losses;
  std::vector<Evaluation> evaluations;  // one per update
  std::size_t episodes = 0;
  bool plateaued = false;
  bool diverged = false;
  std::string message;
};

struct TrainResult {
  PolicyNetwork net;        // final network (last good one if training diverged)
  PolicyNetwork best;       // network with the best evaluation score seen
  Evaluation best_evaluation;
  TrainRecord record;
};

/// Fine-tuning needs `init` unless `allow_fresh_finetune` is set.
TrainResult train(const EnvConfig& env_cfg, const PPOConfig& ppo_cfg, TrainPhase phase,
                  const std::optional<PolicyNetwork>& init, bool allow_fresh_finetune = false);

/// Header: episode,total_reward
void write_train_csv(std::ostream& os, const TrainRecord& record);

void save_checkpoint(const std::filesystem::path& path, const PolicyNetwork& net);
PolicyNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace qsf
