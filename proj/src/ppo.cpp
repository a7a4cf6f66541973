#include "qsf/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <thread>

#include "qsf/errors.hpp"
#include "qsf/pulse_io.hpp"

namespace qsf {

void PPOConfig::validate() const {
  require(batch_episodes >= 1, "ppo: batch_episodes must be at least 1");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, "ppo: learning_rate must be positive");
  require(clip_ratio > 0.0 && clip_ratio < 1.0, "ppo: clip_ratio must lie in (0, 1)");
  require(discount > 0.0 && discount <= 1.0, "ppo: discount must lie in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "ppo: gae_lambda must lie in [0, 1]");
  require(epochs_per_update >= 1, "ppo: epochs_per_update must be at least 1");
  require(entropy_coeff >= 0.0 && value_coeff >= 0.0, "ppo: loss coefficients must be >= 0");
  require(max_grad_norm >= 0.0, "ppo: max_grad_norm must be >= 0");
  require(plateau_windows >= 0 && plateau_window >= 1, "ppo: invalid plateau settings");
  require(threads >= 1, "ppo: threads must be at least 1");
}

nlohmann::json PPOConfig::to_json() const {
  return {{"batch_episodes", batch_episodes}, {"learning_rate", learning_rate},
          {"clip_ratio", clip_ratio},         {"discount", discount},
          {"gae_lambda", gae_lambda},         {"epochs_per_update", epochs_per_update},
          {"entropy_coeff", entropy_coeff},   {"value_coeff", value_coeff},
          {"max_grad_norm", max_grad_norm},   {"max_episodes", max_episodes},
          {"plateau_windows", plateau_windows}, {"plateau_window", plateau_window},
          {"plateau_tolerance", plateau_tolerance}, {"seed", seed}};
}

PPOConfig PPOConfig::from_json(const nlohmann::json& j) {
  require(j.is_object(), "ppo config: expected a JSON object");
  PPOConfig c;
  auto take = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      field = j.at(key).get<std::decay_t<decltype(field)>>();
    } catch (const nlohmann::json::exception&) {
      throw DomainError(std::string("ppo config: field '") + key + "' has the wrong type");
    }
  };
  take("batch_episodes", c.batch_episodes);
  take("learning_rate", c.learning_rate);
  take("clip_ratio", c.clip_ratio);
  take("discount", c.discount);
  take("gae_lambda", c.gae_lambda);
  take("epochs_per_update", c.epochs_per_update);
  take("entropy_coeff", c.entropy_coeff);
  take("value_coeff", c.value_coeff);
  take("max_grad_norm", c.max_grad_norm);
  take("max_episodes", c.max_episodes);
  take("plateau_windows", c.plateau_windows);
  take("plateau_window", c.plateau_window);
  take("plateau_tolerance", c.plateau_tolerance);
  take("seed", c.seed);
  c.validate();
  return c;
}

double Episode::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

namespace {

std::mt19937_64 episode_rng(std::uint64_t seed, std::uint64_t episode) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Episode run_episode(const PolicyNetwork& net, Environment& env, std::uint64_t episode,
                    bool stochastic, std::mt19937_64& rng) {
  const std::size_t n = env.config().n_steps;
  Episode ep;
  ep.states.resize(3, static_cast<Eigen::Index>(n));
  ep.raw_actions.reserve(n);
  ep.log_probs.reserve(n);
  ep.values.reserve(n);
  ep.rewards.reserve(n);
  RLState s = env.reset(episode);
  for (std::size_t i = 0; i < n; ++i) {
    ep.states.col(static_cast<Eigen::Index>(i)) = s.vec();
    const PolicyOutput out = policy_forward(net, s, stochastic, rng);
    const StepResult r = env.step(out.action);
    ep.raw_actions.push_back(out.raw);
    ep.log_probs.push_back(out.log_prob);
    ep.values.push_back(out.value);
    ep.rewards.push_back(r.reward);
    s = r.state;
  }
  ep.final_population = s.p;
  return ep;
}

void compute_gae(const Episode& ep, double discount, double lambda, std::vector<double>& adv,
                 std::vector<double>& ret) {
  const std::size_t n = ep.rewards.size();
  adv.assign(n, 0.0);
  ret.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double next_value = k + 1 < n ? ep.values[k + 1] : 0.0;
    const double td = ep.rewards[k] + discount * next_value - ep.values[k];
    running = td + discount * lambda * running;
    adv[k] = running;
    ret[k] = running + ep.values[k];
  }
}

Batch make_batch(const std::vector<Episode>& episodes, const PPOConfig& cfg) {
  Eigen::Index total = 0;
  for (const auto& ep : episodes) total += static_cast<Eigen::Index>(ep.rewards.size());
  Batch b;
  b.states.resize(3, total);
  b.raw_actions.resize(total);
  b.old_log_probs.resize(total);
  b.advantages.resize(total);
  b.returns.resize(total);
  Eigen::Index at = 0;
  std::vector<double> adv, ret;
  for (const auto& ep : episodes) {
    compute_gae(ep, cfg.discount, cfg.gae_lambda, adv, ret);
    const auto n = static_cast<Eigen::Index>(ep.rewards.size());
    b.states.middleCols(at, n) = ep.states;
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      b.raw_actions[at + k] = ep.raw_actions[uk];
      b.old_log_probs[at + k] = ep.log_probs[uk];
      b.advantages[at + k] = adv[uk];
      b.returns[at + k] = ret[uk];
    }
    at += n;
  }
  if (total > 1) {
    const double mean = b.advantages.mean();
    const double sd = std::sqrt((b.advantages.array() - mean).square().mean());
    if (sd > 1e-8) b.advantages = (b.advantages.array() - mean) / sd;
  }
  return b;
}

double clipped_surrogate(double ratio, double advantage, double clip_ratio) {
  const double clipped = std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio);
  return std::min(ratio * advantage, clipped * advantage);
}

LossTerms ppo_loss(const PolicyNetwork& net, const Batch& batch, const PPOConfig& cfg,
                   Eigen::VectorXd* grad) {
  const Eigen::Index n = batch.states.cols();
  require(n > 0, "ppo: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  Mlp::Tape actor_tape, critic_tape;
  const Eigen::MatrixXd z = net.actor.forward(batch.states, actor_tape);
  const Eigen::MatrixXd v = net.critic.forward(batch.states, critic_tape);
  const double sigma = std::exp(net.log_std);

  LossTerms L;
  Eigen::MatrixXd d_z(1, n), d_v(1, n);
  double d_log_std = 0.0;
  int clipped = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mean = squash(z(0, k));
    const double logp = gaussian_log_prob(batch.raw_actions[k], mean, net.log_std);
    const double log_ratio = logp - batch.old_log_probs[k];
    const double ratio = std::exp(log_ratio);
    const double a = batch.advantages[k];
    const double unclipped = ratio * a;
    const double surrogate = clipped_surrogate(ratio, a, cfg.clip_ratio);
    L.policy -= surrogate * inv_n;
    L.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
    const bool active = unclipped <= surrogate;
    if (!active) ++clipped;
    const double d_logp = active ? -a * ratio * inv_n : 0.0;
    const double u = (batch.raw_actions[k] - mean) / sigma;
    d_z(0, k) = d_logp * (u / sigma) * mean * (1.0 - mean);
    d_log_std += d_logp * (u * u - 1.0);

    const double err = v(0, k) - batch.returns[k];
    L.value += err * err * inv_n;
    d_v(0, k) = cfg.value_coeff * 2.0 * err * inv_n;
  }
  L.entropy = net.log_std + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  L.total = L.policy + cfg.value_coeff * L.value - cfg.entropy_coeff * L.entropy;
  L.clip_fraction = static_cast<double>(clipped) * inv_n;
  d_log_std -= cfg.entropy_coeff;

  if (grad) {
    Eigen::VectorXd ga = Eigen::VectorXd::Zero(net.actor.param_count());
    Eigen::VectorXd gc = Eigen::VectorXd::Zero(net.critic.param_count());
    net.actor.backward(actor_tape, d_z, ga);
    net.critic.backward(critic_tape, d_v, gc);
    grad->resize(ga.size() + gc.size() + 1);
    *grad << ga, gc, d_log_std;
  }
  return L;
}

namespace {

bool finite(const LossTerms& l) {
  return std::isfinite(l.total) && std::isfinite(l.policy) && std::isfinite(l.value);
}

}  // namespace

UpdateResult ppo_update(PolicyNetwork& net, AdamState& adam, const Batch& batch,
                        const PPOConfig& cfg) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  UpdateResult res;
  PolicyNetwork work = net;
  AdamState st = adam;
  Eigen::VectorXd theta = work.flat();
  if (st.m.size() != theta.size()) {
    st.m = Eigen::VectorXd::Zero(theta.size());
    st.v = Eigen::VectorXd::Zero(theta.size());
    st.t = 0;
  }
  Eigen::VectorXd g;
  for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    const LossTerms l = ppo_loss(work, batch, cfg, &g);
    if (epoch == 0) res.first = l;
    res.last = l;
    if (!finite(l) || !g.allFinite()) {
      res.ok = false;
      res.message = "non-finite loss at epoch " + std::to_string(epoch) +
                    " (policy " + std::to_string(l.policy) + ", value " +
                    std::to_string(l.value) + ", log_std " + std::to_string(work.log_std) + ")";
      return res;
    }
    if (cfg.max_grad_norm > 0.0) {
      const double norm = g.norm();
      if (norm > cfg.max_grad_norm) g *= cfg.max_grad_norm / norm;
    }
    ++st.t;
    st.m = beta1 * st.m + (1.0 - beta1) * g;
    st.v = beta2 * st.v + (1.0 - beta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
    theta -= cfg.learning_rate * ((st.m / c1).array() / ((st.v / c2).array().sqrt() + eps)).matrix();
    work.set_flat(theta);
  }
  if (!theta.allFinite()) {
    res.ok = false;
    res.message = "parameters became non-finite";
    return res;
  }
  net = std::move(work);
  adam = std::move(st);
  return res;
}

PulseSequence extract_pulse(const PolicyNetwork& net, const EnvConfig& cfg) {
  Environment env(cfg);
  std::mt19937_64 unused(0);
  RLState s = env.reset_with({});
  std::vector<double> deltas;
  deltas.reserve(cfg.n_steps);
  while (!env.done()) {
    const PolicyOutput out = policy_forward(net, s, false, unused);
    deltas.push_back(renormalized_to_detuning(out.action, cfg.field.delta_max()));
    s = env.step(out.action).state;
  }
  return PulseSequence(cfg.field, cfg.dt(), std::move(deltas));
}

Evaluation evaluate_policy(const PolicyNetwork& net, const EnvConfig& cfg) {
  const PulseSequence pulse = extract_pulse(net, cfg);
  const DensityMatrix rho0 = DensityMatrix::ground();
  Evaluation e;
  e.nominal = population_excited(final_state(rho0, pulse));
  e.worst = e.nominal;
  const double r = cfg.error_range;
  const bool vary_delta =
      cfg.error_sampling == ErrorSampling::SingleDelta || cfg.error_sampling == ErrorSampling::Hybrid;
  const bool vary_omega =
      cfg.error_sampling == ErrorSampling::SingleOmega || cfg.error_sampling == ErrorSampling::Hybrid;
  if (r == 0.0 || (!vary_delta && !vary_omega)) return e;
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      ErrorPair err{vary_omega ? j * r : 0.0, vary_delta ? i * r * cfg.field.delta_max() : 0.0};
      e.worst = std::min(e.worst, population_excited(final_state(rho0, pulse, err)));
    }
  }
  return e;
}

TrainResult train(const EnvConfig& env_cfg, const PPOConfig& ppo_cfg, TrainPhase phase,
                  const std::optional<PolicyNetwork>& init, bool allow_fresh_finetune) {
  env_cfg.validate();
  ppo_cfg.validate();
  if (phase == TrainPhase::Finetune && !init && !allow_fresh_finetune)
    throw DomainError("fine-tuning needs a pre-trained checkpoint");

  TrainResult out{init ? *init : PolicyNetwork::create(ppo_cfg.seed), {}, {}, {}};
  out.best = out.net;
  out.best_evaluation = evaluate_policy(out.net, env_cfg);
  AdamState adam;
  TrainRecord& rec = out.record;

  const std::size_t batch = ppo_cfg.batch_episodes;
  const unsigned threads = std::max(1u, std::min<unsigned>(ppo_cfg.threads, static_cast<unsigned>(batch)));
  std::vector<Episode> episodes(batch);
  std::vector<Environment> envs(threads, Environment(env_cfg));

  double prev_window = -std::numeric_limits<double>::infinity();
  int flat_windows = 0;

  while (rec.episodes + batch <= ppo_cfg.max_episodes) {
    const std::uint64_t first = rec.episodes;
    auto worker = [&](unsigned w) {
      for (std::size_t b = w; b < batch; b += threads) {
        auto rng = episode_rng(ppo_cfg.seed, first + b);
        episodes[b] = run_episode(out.net, envs[w], first + b, true, rng);
      }
    };
    if (threads == 1) {
      worker(0);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    }
    for (const auto& ep : episodes) rec.episode_rewards.push_back(ep.total_reward());
    rec.episodes += batch;

    const Batch data = make_batch(episodes, ppo_cfg);
    const UpdateResult upd = ppo_update(out.net, adam, data, ppo_cfg);
    rec.update_losses.push_back(upd.first);
    if (!upd.ok) {
      rec.diverged = true;
      rec.message = "training diverged after " + std::to_string(rec.episodes) +
                    " episodes: " + upd.message;
      rec.evaluations.push_back(rec.evaluations.empty() ? out.best_evaluation : rec.evaluations.back());
      return out;
    }
    const Evaluation ev = evaluate_policy(out.net, env_cfg);
    rec.evaluations.push_back(ev);
    if (phase == TrainPhase::Pretrain || ev.score() > out.best_evaluation.score()) {
      out.best_evaluation = ev;
      out.best = out.net;
    }

    const std::size_t win = ppo_cfg.plateau_window;
    if (ppo_cfg.plateau_windows > 0 && rec.episodes % win < batch && rec.episodes >= win) {
      const auto end = rec.episode_rewards.end();
      const double avg = std::accumulate(end - static_cast<long>(win), end, 0.0) / static_cast<double>(win);
      if (avg - prev_window < ppo_cfg.plateau_tolerance)
        ++flat_windows;
      else
        flat_windows = 0;
      prev_window = avg;
      if (flat_windows >= ppo_cfg.plateau_windows) {
        rec.plateaued = true;
        rec.message = "reward plateau after " + std::to_string(rec.episodes) + " episodes";
        return out;
      }
    }
  }
  rec.message = "reached max_episodes (" + std::to_string(rec.episodes) + ")";
  return out;
}

void write_train_csv(std::ostream& os, const TrainRecord& record) {
  os << "episode,total_reward\n";
  for (std::size_t i = 0; i < record.episode_rewards.size(); ++i)
    os << i << ',' << format_double(record.episode_rewards[i]) << '\n';
}

void save_checkpoint(const std::filesystem::path& path, const PolicyNetwork& net) {
  write_json_file(path, net.to_json());
}

PolicyNetwork load_checkpoint(const std::filesystem::path& path) {
  return PolicyNetwork::from_json(read_json_file(path));
}

}  // namespace qsf
