#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace qsf {

/// Observation: |rho_22|, previous renormalized detuning, elapsed fraction i/N.
struct RLState {
  double p = 0.0;
  double d_prev = 0.5;
  double tau = 0.0;

  Eigen::Vector3d vec() const { return {p, d_prev, tau}; }
  friend bool operator==(const RLState&, const RLState&) = default;
};

/// Fully connected network with ReLU hidden layers and a linear output layer.
/// All weights and biases live in one flat vector: for each layer, W (out x in,
/// column-major) followed by b (out).
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::Index param_count() const { return params_.size(); }

  /// He-style initialization; the output layer is scaled by `out_scale`.
  void init(std::mt19937_64& rng, double out_scale);

  /// Inputs are columns of `x`; returns (out x batch).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  /// Forward pass keeping activations, for a following backward().
  struct Tape {
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[l] = layer l output
  };
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const;

  /// Accumulates dLoss/dparams into `grad` given dLoss/doutput (out x batch).
  void backward(const Tape& tape, const Eigen::MatrixXd& grad_out, Eigen::VectorXd& grad) const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  Eigen::Index offset(std::size_t layer) const { return offsets_[layer]; }

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

/// Actor-critic pair of identical shape (3 -> 32 -> 32 -> 32 -> 1). The actor output goes
/// through a logistic squashing to give the action mean in [0, 1]; the spread is a global
/// learnable log standard deviation.
struct PolicyNetwork {
  Mlp actor;
  Mlp critic;
  double log_std = -1.0;

  static PolicyNetwork create(std::uint64_t seed, int hidden = 32, int layers = 3,
                              double log_std = -1.0);

  /// actor params, critic params, log_std.
  Eigen::VectorXd flat() const;
  void set_flat(const Eigen::VectorXd& v);

  nlohmann::json to_json() const;
  static PolicyNetwork from_json(const nlohmann::json& j);
};

struct PolicyOutput {
  double action;    // in [0, 1]
  double raw;       // pre-clamp Gaussian sample (equals the mean when deterministic)
  double mean;
  double log_prob;  // density of `raw`
  double value;
};

double squash(double z);

/// Log density of a Gaussian with the given mean and log standard deviation.
double gaussian_log_prob(double x, double mean, double log_std);

PolicyOutput policy_forward(const PolicyNetwork& net, const RLState& state, bool stochastic,
                            std::mt19937_64& rng);

}  // namespace qsf
