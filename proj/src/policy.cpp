#include "qsf/policy.hpp"

#include <cmath>
#include <numbers>

#include "qsf/errors.hpp"

namespace qsf {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  require(sizes_.size() >= 2, "an MLP needs input and output sizes");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    require(sizes_[l] > 0 && sizes_[l + 1] > 0, "MLP layer sizes must be positive");
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_ = Eigen::VectorXd::Zero(total);
}

void Mlp::init(std::mt19937_64& rng, double out_scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    double scale = std::sqrt(2.0 / in);
    if (l + 1 == layers) scale *= out_scale;
    auto w = params_.segment(offset(l), static_cast<Eigen::Index>(in) * out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = scale * normal(rng);
    params_.segment(offset(l) + static_cast<Eigen::Index>(in) * out, out).setZero();
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Tape tape;
  return forward(x, tape);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape& tape) const {
  const std::size_t layers = sizes_.size() - 1;
  tape.acts.resize(layers + 1);
  tape.acts[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + offset(l), out, in);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + offset(l) + static_cast<Eigen::Index>(in) * out, out);
    Eigen::MatrixXd z = (w * tape.acts[l]).colwise() + b;
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    tape.acts[l + 1] = std::move(z);
  }
  return tape.acts.back();
}

void Mlp::backward(const Tape& tape, const Eigen::MatrixXd& grad_out, Eigen::VectorXd& grad) const {
  const std::size_t layers = sizes_.size() - 1;
  if (grad.size() != params_.size()) grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = grad_out;
  for (std::size_t l = layers; l-- > 0;) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    if (l + 1 < layers) delta = delta.cwiseProduct((tape.acts[l + 1].array() > 0.0).cast<double>().matrix());
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offset(l), out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offset(l) + static_cast<Eigen::Index>(in) * out, out);
    gw += delta * tape.acts[l].transpose();
    gb += delta.rowwise().sum();
    if (l > 0) {
      Eigen::Map<const Eigen::MatrixXd> w(params_.data() + offset(l), out, in);
      delta = w.transpose() * delta;
    }
  }
}

nlohmann::json Mlp::to_json() const {
  return {{"sizes", sizes_}, {"params", std::vector<double>(params_.data(), params_.data() + params_.size())}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  require(j.contains("sizes") && j.contains("params"), "checkpoint: network needs 'sizes' and 'params'");
  Mlp m(j.at("sizes").get<std::vector<int>>());
  const auto p = j.at("params").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(p.size()) == m.param_count(),
          "checkpoint: parameter count does not match layer sizes");
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(std::isfinite(p[i]), "checkpoint: non-finite parameter");
    m.params_[static_cast<Eigen::Index>(i)] = p[i];
  }
  return m;
}

PolicyNetwork PolicyNetwork::create(std::uint64_t seed, int hidden, int layers, double log_std) {
  std::vector<int> sizes{3};
  for (int i = 0; i < layers; ++i) sizes.push_back(hidden);
  sizes.push_back(1);
  PolicyNetwork net{Mlp(sizes), Mlp(sizes), log_std};
  std::mt19937_64 rng(seed);
  net.actor.init(rng, 0.01);
  net.critic.init(rng, 1.0);
  return net;
}

Eigen::VectorXd PolicyNetwork::flat() const {
  Eigen::VectorXd v(actor.param_count() + critic.param_count() + 1);
  v << actor.params(), critic.params(), log_std;
  return v;
}

void PolicyNetwork::set_flat(const Eigen::VectorXd& v) {
  require(v.size() == actor.param_count() + critic.param_count() + 1, "flat parameter size mismatch");
  actor.params() = v.head(actor.param_count());
  critic.params() = v.segment(actor.param_count(), critic.param_count());
  log_std = v[v.size() - 1];
}

nlohmann::json PolicyNetwork::to_json() const {
  return {{"format", "qsf-policy"}, {"version", 1}, {"actor", actor.to_json()},
          {"critic", critic.to_json()}, {"log_std", log_std}};
}

PolicyNetwork PolicyNetwork::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.value("format", "") == "qsf-policy", "checkpoint: not a qsf-policy file");
  require(j.value("version", 0) == 1, "checkpoint: unsupported version");
  require(j.contains("actor") && j.contains("critic") && j.contains("log_std"),
          "checkpoint: missing actor, critic, or log_std");
  PolicyNetwork net{Mlp::from_json(j.at("actor")), Mlp::from_json(j.at("critic")),
                    j.at("log_std").get<double>()};
  require(net.actor.sizes().front() == 3 && net.actor.sizes().back() == 1,
          "checkpoint: actor must map 3 inputs to 1 output");
  require(net.critic.sizes().front() == 3 && net.critic.sizes().back() == 1,
          "checkpoint: critic must map 3 inputs to 1 output");
  return net;
}

double squash(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double gaussian_log_prob(double x, double mean, double log_std) {
  const double z = (x - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

PolicyOutput policy_forward(const PolicyNetwork& net, const RLState& state, bool stochastic,
                            std::mt19937_64& rng) {
  const Eigen::Vector3d x = state.vec();
  const double mean = squash(net.actor.forward(x)(0, 0));
  const double value = net.critic.forward(x)(0, 0);
  double raw = mean;
  if (stochastic) {
    std::normal_distribution<double> normal(0.0, 1.0);
    raw = mean + std::exp(net.log_std) * normal(rng);
  }
  const double action = std::clamp(raw, 0.0, 1.0);
  return {action, raw, mean, gaussian_log_prob(raw, mean, net.log_std), value};
}

}  // namespace qsf
