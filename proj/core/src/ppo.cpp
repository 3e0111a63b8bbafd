#include "pidrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "pidrl/parallel.hpp"

namespace pidrl {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Rng stream(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    tag};
  return Rng(seq);
}

}  // namespace

double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                         const Eigen::VectorXd& action) {
  double lp = 0.0;
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    const double z = (action[k] - mean[k]) / std::exp(log_std[k]);
    lp += -0.5 * z * z - log_std[k] - 0.5 * kLog2Pi;
  }
  return lp;
}

double GaussianPolicy::log_prob(const Eigen::VectorXd& state,
                                const Eigen::VectorXd& action) const {
  return gaussian_log_prob(mean(state), log_std, action);
}

double GaussianPolicy::entropy() const {
  return log_std.sum() + 0.5 * static_cast<double>(log_std.size()) * (1.0 + kLog2Pi);
}

Eigen::VectorXd to_vector(const NormalizedState& s) {
  return Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

ActionDraw sample_and_logprob(const GaussianPolicy& policy, const NormalizedState& state,
                              Rng& rng) {
  const Eigen::VectorXd mu = policy.mean(to_vector(state));
  if (mu.size() != 6) throw InvalidArgument("policy must output 6 raw actions");
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd a(6);
  for (int k = 0; k < 6; ++k) a[k] = mu[k] + std::exp(policy.log_std[k]) * n01(rng);
  ActionDraw draw;
  for (int k = 0; k < 6; ++k) draw.raw[k] = a[k];
  draw.log_prob = gaussian_log_prob(mu, policy.log_std, a);
  return draw;
}

ActorCritic ActorCritic::init(int state_dim, int action_dim, int hidden, Rng& rng,
                              double initial_log_std) {
  ActorCritic ac;
  ac.policy.mean_net = Mlp::glorot({state_dim, hidden, hidden, action_dim}, rng, 0.01);
  ac.policy.log_std = Eigen::VectorXd::Constant(action_dim, initial_log_std);
  ac.value_net = Mlp::glorot({state_dim, hidden, hidden, 1}, rng, 1.0);
  return ac;
}

std::size_t ActorCritic::num_params() const {
  return policy.mean_net.num_params() + static_cast<std::size_t>(policy.log_std.size()) +
         value_net.num_params();
}

std::vector<double> ActorCritic::params() const {
  std::vector<double> flat = policy.mean_net.params();
  for (Eigen::Index k = 0; k < policy.log_std.size(); ++k) flat.push_back(policy.log_std[k]);
  const std::vector<double> v = value_net.params();
  flat.insert(flat.end(), v.begin(), v.end());
  return flat;
}

void ActorCritic::set_params(std::span<const double> flat) {
  if (flat.size() != num_params()) throw InvalidArgument("parameter vector has wrong size");
  const std::size_t np = policy.mean_net.num_params();
  const auto ns = static_cast<std::size_t>(policy.log_std.size());
  policy.mean_net.set_params(flat.subspan(0, np));
  for (std::size_t k = 0; k < ns; ++k) policy.log_std[static_cast<Eigen::Index>(k)] = flat[np + k];
  value_net.set_params(flat.subspan(np + ns));
}

bool ActorCritic::all_finite() const {
  return policy.mean_net.all_finite() && policy.log_std.allFinite() && value_net.all_finite();
}

void PpoConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw InvalidArgument("clip_epsilon must be in (0, 1)");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (batch_size <= 0 || update_epochs <= 0 || minibatch_size <= 0 || max_episodes <= 0 ||
      convergence_window <= 0 || hidden_units <= 0 || workers <= 0)
    throw InvalidArgument("ppo counts must be positive");
  if (!(entropy_coeff >= 0.0) || !(value_coeff >= 0.0))
    throw InvalidArgument("loss coefficients must be >= 0");
  if (!(convergence_tolerance >= 0.0)) throw InvalidArgument("convergence tolerance must be >= 0");
  if (!(initial_log_std >= kLogStdMin && initial_log_std <= kLogStdMax))
    throw InvalidArgument("initial_log_std outside [-5, 1]");
}

Adam::Adam(std::size_t n, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw InvalidArgument("adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
    params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
  }
}

std::vector<double> normalized_advantages(const ActorCritic& ac,
                                          std::span<const Experience> batch) {
  std::vector<double> adv(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    adv[i] = batch[i].reward - ac.value_net.forward(batch[i].state)[0];
  if (adv.empty()) return adv;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : adv) a = sd > 1e-12 ? (a - mean) / sd : 0.0;
  return adv;
}

std::vector<double> probability_ratios(const ActorCritic& ac,
                                       std::span<const Experience> batch) {
  std::vector<double> r(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    r[i] = std::exp(ac.policy.log_prob(batch[i].state, batch[i].action) - batch[i].log_prob);
  return r;
}

LossParts ppo_loss(const ActorCritic& ac, std::span<const Experience> batch,
                   std::span<const double> advantages, const PpoConfig& config,
                   std::vector<double>* grad) {
  if (batch.empty()) throw InvalidArgument("ppo_loss: empty batch");
  if (advantages.size() != batch.size()) throw InvalidArgument("ppo_loss: advantage count");

  const Mlp& mean_net = ac.policy.mean_net;
  const Eigen::VectorXd& log_std = ac.policy.log_std;
  const std::size_t np = mean_net.num_params();
  const auto ns = static_cast<std::size_t>(log_std.size());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double eps = config.clip_epsilon;
  const Eigen::VectorXd inv_var = (-2.0 * log_std).array().exp();

  std::span<double> g_mean, g_log_std, g_value;
  if (grad) {
    grad->assign(ac.num_params(), 0.0);
    std::span<double> all(*grad);
    g_mean = all.subspan(0, np);
    g_log_std = all.subspan(np, ns);
    g_value = all.subspan(np + ns);
  }

  LossParts parts;
  Mlp::Cache mean_cache, value_cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Experience& e = batch[i];
    const Eigen::VectorXd mu = mean_net.forward(e.state, mean_cache);
    const double lp = gaussian_log_prob(mu, log_std, e.action);
    const double ratio = std::exp(lp - e.log_prob);
    const double a = advantages[i];
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    const double surr1 = ratio * a;
    const double surr2 = clipped * a;
    const bool unclipped_active = surr1 <= surr2;
    parts.policy -= inv_b * std::min(surr1, surr2);
    parts.mean_ratio += inv_b * ratio;
    if (std::abs(ratio - 1.0) > eps) parts.clip_fraction += inv_b;

    const double v = ac.value_net.forward(e.state, value_cache)[0];
    parts.value += inv_b * (v - e.reward) * (v - e.reward);

    if (!grad) continue;
    // d(policy loss)/d(log pi) for this sample.
    const double dlp = unclipped_active ? -inv_b * ratio * a : 0.0;
    if (dlp != 0.0) {
      const Eigen::VectorXd diff = e.action - mu;
      const Eigen::VectorXd d_mu = dlp * diff.cwiseProduct(inv_var);
      mean_net.backward(mean_cache, d_mu, g_mean);
      for (std::size_t k = 0; k < ns; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        g_log_std[k] += dlp * (diff[kk] * diff[kk] * inv_var[kk] - 1.0);
      }
    }
    Eigen::VectorXd d_v(1);
    d_v[0] = config.value_coeff * 2.0 * inv_b * (v - e.reward);
    ac.value_net.backward(value_cache, d_v, g_value);
  }

  parts.entropy = ac.policy.entropy();
  parts.total = parts.policy - config.entropy_coeff * parts.entropy +
                config.value_coeff * parts.value;
  if (grad) {
    for (std::size_t k = 0; k < ns; ++k) g_log_std[k] -= config.entropy_coeff;
  }
  return parts;
}

UpdateDiagnostics ppo_update(std::span<const Experience> batch, ActorCritic& ac, Adam& opt,
                             const PpoConfig& config, Rng& rng) {
  if (batch.empty()) throw InvalidArgument("ppo_update: empty batch");
  const ActorCritic saved_ac = ac;
  const Adam saved_opt = opt;

  const std::vector<double> adv = normalized_advantages(ac, batch);
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  UpdateDiagnostics diag;
  int evaluations = 0;
  std::vector<double> params = ac.params();
  std::vector<double> grad;
  std::vector<Experience> mb;
  std::vector<double> mb_adv;
  const auto mb_size = static_cast<std::size_t>(config.minibatch_size);
  const auto np = ac.policy.mean_net.num_params();
  const auto ns = static_cast<std::size_t>(ac.policy.log_std.size());

  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += mb_size) {
      const std::size_t end = std::min(order.size(), start + mb_size);
      mb.clear();
      mb_adv.clear();
      for (std::size_t k = start; k < end; ++k) {
        mb.push_back(batch[order[k]]);
        mb_adv.push_back(adv[order[k]]);
      }
      const LossParts parts = ppo_loss(ac, mb, mb_adv, config, &grad);
      const bool finite = std::isfinite(parts.total) &&
                          std::all_of(grad.begin(), grad.end(),
                                      [](double g) { return std::isfinite(g); });
      if (!finite) {
        ac = saved_ac;
        opt = saved_opt;
        diag = UpdateDiagnostics{};
        diag.aborted = true;
        return diag;
      }
      diag.mean_ratio += parts.mean_ratio;
      diag.clip_fraction += parts.clip_fraction;
      diag.policy_loss += parts.policy;
      diag.value_loss += parts.value;
      diag.entropy += parts.entropy;
      ++evaluations;

      opt.step(params, grad);
      for (std::size_t k = np; k < np + ns; ++k)
        params[k] = std::clamp(params[k], kLogStdMin, kLogStdMax);
      ac.set_params(params);
    }
  }
  const double inv = 1.0 / static_cast<double>(std::max(1, evaluations));
  diag.mean_ratio *= inv;
  diag.clip_fraction *= inv;
  diag.policy_loss *= inv;
  diag.value_loss *= inv;
  diag.entropy *= inv;
  return diag;
}

TrainResult train(const EpisodeFn& env, const PpoConfig& config, const TrainOptions& options) {
  config.validate();
  Rng init_rng = stream(options.seed, 0x696e6974u);
  Rng update_rng = stream(options.seed, 0x75706474u);

  TrainResult result;
  ActorCritic ac = ActorCritic::init(options.state_dim, options.action_dim,
                                     config.hidden_units, init_rng, config.initial_log_std);
  Adam opt(ac.num_params(), config.learning_rate);
  result.best = ac;
  double best_mean = -std::numeric_limits<double>::infinity();

  std::int64_t seen = 0;
  std::int64_t batch_index = 0;
  std::vector<Experience> batch;
  while (seen < config.max_episodes) {
    const std::int64_t n = std::min<std::int64_t>(config.batch_size, config.max_episodes - seen);
    batch.assign(static_cast<std::size_t>(n), Experience{});
    const GaussianPolicy& policy = ac.policy;
    parallel_for(static_cast<std::size_t>(n), config.workers, [&](std::size_t k) {
      batch[k] = env(policy, seen + static_cast<std::int64_t>(k));
    });
    if (options.on_batch) options.on_batch(batch_index, batch);

    TrainLogRecord rec;
    rec.batch = batch_index;
    rec.episodes_seen = seen + n;
    double sum = 0.0;
    rec.min_reward = std::numeric_limits<double>::infinity();
    int diverged = 0;
    for (const Experience& e : batch) {
      sum += e.reward;
      rec.min_reward = std::min(rec.min_reward, e.reward);
      diverged += e.diverged ? 1 : 0;
    }
    rec.mean_reward = sum / static_cast<double>(n);
    rec.diverged_fraction = static_cast<double>(diverged) / static_cast<double>(n);
    if (rec.diverged_fraction > 0.5) {
      result.warnings.push_back(fmt::format("batch {}: {:.0f}% of episodes diverged",
                                            batch_index, 100.0 * rec.diverged_fraction));
    }
    if (rec.mean_reward > best_mean) {
      best_mean = rec.mean_reward;
      result.best = ac;
    }

    const UpdateDiagnostics diag = ppo_update(batch, ac, opt, config, update_rng);
    if (diag.aborted) {
      result.warnings.push_back(
          fmt::format("batch {}: non-finite loss, update skipped", batch_index));
    }
    rec.clip_fraction = diag.clip_fraction;
    rec.policy_loss = diag.policy_loss;
    rec.value_loss = diag.value_loss;
    rec.entropy = diag.entropy;
    result.log.push_back(rec);

    seen += n;
    ++batch_index;

    const auto w = static_cast<std::size_t>(config.convergence_window);
    if (result.log.size() >= w && w > 1) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      double mean = 0.0;
      for (std::size_t k = result.log.size() - w; k < result.log.size(); ++k) {
        lo = std::min(lo, result.log[k].mean_reward);
        hi = std::max(hi, result.log[k].mean_reward);
        mean += result.log[k].mean_reward / static_cast<double>(w);
      }
      if ((hi - lo) < config.convergence_tolerance * std::max(std::abs(mean), 1e-12)) {
        result.converged = true;
        break;
      }
    }
  }
  result.final = ac;
  return result;
}

}  // namespace pidrl
