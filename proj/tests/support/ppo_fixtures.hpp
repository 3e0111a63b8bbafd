#pragma once

// Shared by the unit tests and the acceptance binary: a known-optimum
// contextual bandit and finite-difference gradient checks.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "pidrl/mlp.hpp"
#include "pidrl/ppo.hpp"

namespace fixtures {

/// Reward -|a - W s|^2 with states uniform in [-1, 1]^4 and a fixed random W.
struct LinearBandit {
  Eigen::MatrixXd w;
  std::uint64_t seed;

  explicit LinearBandit(std::uint64_t s) : w(6, 4), seed(s) {
    std::mt19937_64 g(s * 0x9e3779b97f4a7c15ull + 1);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (Eigen::Index r = 0; r < 6; ++r)
      for (Eigen::Index c = 0; c < 4; ++c) w(r, c) = u(g);
  }

  [[nodiscard]] pidrl::EpisodeFn episodes() const {
    return [this](const pidrl::GaussianPolicy& pol, std::int64_t ep) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(ep), 0x62u};
      pidrl::Rng rng(seq);
      std::uniform_real_distribution<double> us(-1.0, 1.0);
      pidrl::NormalizedState s;
      for (double& v : s) v = us(rng);
      const pidrl::ActionDraw d = pidrl::sample_and_logprob(pol, s, rng);
      pidrl::Experience e;
      e.state = pidrl::to_vector(s);
      e.action = Eigen::Map<const Eigen::VectorXd>(d.raw.data(), 6);
      e.log_prob = d.log_prob;
      e.reward = -(e.action - w * e.state).squaredNorm();
      return e;
    };
  }
};

/// Index of the first batch whose mean reward exceeds `threshold`, or -1.
inline long first_batch_above(const pidrl::TrainResult& r, double threshold) {
  for (const auto& rec : r.log)
    if (rec.mean_reward > threshold) return static_cast<long>(rec.batch);
  return -1;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// Worst relative error between Mlp::backward and central differences of
/// c . forward(x) over every parameter.
inline double mlp_gradient_error(const pidrl::Mlp& net, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& c, double h = 1e-5) {
  pidrl::Mlp::Cache cache;
  net.forward(x, cache);
  std::vector<double> grad(net.num_params(), 0.0);
  net.backward(cache, c, grad);
  pidrl::Mlp probe = net;
  std::vector<double> p = net.params();
  double worst = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double keep = p[k];
    p[k] = keep + h;
    probe.set_params(p);
    const double up = c.dot(probe.forward(x));
    p[k] = keep - h;
    probe.set_params(p);
    const double down = c.dot(probe.forward(x));
    p[k] = keep;
    worst = std::max(worst, relative_error(grad[k], (up - down) / (2 * h)));
  }
  return worst;
}

/// A small batch collected under a perturbed "old" policy, so ratios differ
/// from 1, with no ratio close to a clip edge.
struct LossCase {
  pidrl::ActorCritic ac;
  std::vector<pidrl::Experience> batch;
  std::vector<double> advantages;
};

inline LossCase random_loss_case(pidrl::Rng& rng, int batch_size, double clip_epsilon) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (;;) {
    LossCase lc;
    lc.ac = pidrl::ActorCritic::init(4, 6, 5, rng, -0.5);
    for (Eigen::Index k = 0; k < lc.ac.policy.log_std.size(); ++k)
      lc.ac.policy.log_std[k] = -0.5 + 0.3 * n01(rng);
    // Move the mean net off its near-zero initial output layer.
    auto p = lc.ac.params();
    for (double& v : p) v += 0.2 * n01(rng);
    lc.ac.set_params(p);

    pidrl::ActorCritic old = lc.ac;
    auto q = old.params();
    for (double& v : q) v += 0.05 * n01(rng);
    old.set_params(q);

    bool near_kink = false;
    for (int i = 0; i < batch_size; ++i) {
      pidrl::NormalizedState s;
      for (double& v : s) v = n01(rng);
      const pidrl::ActionDraw d = pidrl::sample_and_logprob(old.policy, s, rng);
      pidrl::Experience e;
      e.state = pidrl::to_vector(s);
      e.action = Eigen::Map<const Eigen::VectorXd>(d.raw.data(), 6);
      e.log_prob = d.log_prob;
      e.reward = n01(rng);
      lc.batch.push_back(e);
      lc.advantages.push_back(n01(rng));
      const double r = std::exp(lc.ac.policy.log_prob(e.state, e.action) - e.log_prob);
      if (std::abs(r - (1 - clip_epsilon)) < 1e-3 || std::abs(r - (1 + clip_epsilon)) < 1e-3)
        near_kink = true;
    }
    if (!near_kink) return lc;
  }
}

/// Worst relative error of ppo_loss's gradient against central differences.
inline double ppo_gradient_error(const LossCase& lc, const pidrl::PpoConfig& config,
                                 double h = 1e-5) {
  std::vector<double> grad;
  pidrl::ppo_loss(lc.ac, lc.batch, lc.advantages, config, &grad);
  pidrl::ActorCritic probe = lc.ac;
  std::vector<double> p = lc.ac.params();
  double worst = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double keep = p[k];
    p[k] = keep + h;
    probe.set_params(p);
    const double up = pidrl::ppo_loss(probe, lc.batch, lc.advantages, config).total;
    p[k] = keep - h;
    probe.set_params(p);
    const double down = pidrl::ppo_loss(probe, lc.batch, lc.advantages, config).total;
    p[k] = keep;
    worst = std::max(worst, relative_error(grad[k], (up - down) / (2 * h)));
  }
  return worst;
}

}  // namespace fixtures
