#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pidrl/mdp.hpp"
#include "pidrl/mlp.hpp"

namespace pidrl {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 1.0;

/// Diagonal Gaussian over raw actions with a state-independent log std.
struct GaussianPolicy {
  Mlp mean_net;
  Eigen::VectorXd log_std;

  [[nodiscard]] Eigen::VectorXd mean(const Eigen::VectorXd& state) const {
    return mean_net.forward(state);
  }
  [[nodiscard]] double log_prob(const Eigen::VectorXd& state,
                                const Eigen::VectorXd& action) const;
  [[nodiscard]] double entropy() const;
};

double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                         const Eigen::VectorXd& action);

/// raw = mean(state) + exp(log_std) * xi with xi ~ N(0, I).
ActionDraw sample_and_logprob(const GaussianPolicy& policy, const NormalizedState& state,
                              Rng& rng);

Eigen::VectorXd to_vector(const NormalizedState& s);

/// Policy plus value baseline, viewed as one flat parameter vector laid out
/// [mean_net | log_std | value_net].
struct ActorCritic {
  GaussianPolicy policy;
  Mlp value_net;

  static ActorCritic init(int state_dim, int action_dim, int hidden, Rng& rng,
                          double initial_log_std = 0.0);

  [[nodiscard]] std::size_t num_params() const;
  [[nodiscard]] std::vector<double> params() const;
  void set_params(std::span<const double> flat);
  [[nodiscard]] bool all_finite() const;
};

struct PpoConfig {
  double clip_epsilon = 0.2;
  double learning_rate = 2e-3;
  int batch_size = 64;
  int update_epochs = 16;
  int minibatch_size = 16;
  double entropy_coeff = 1e-3;
  double value_coeff = 0.5;
  std::int64_t max_episodes = 1600;
  int convergence_window = 5;
  double convergence_tolerance = 0.01;
  int hidden_units = 16;
  double initial_log_std = -1.5;
  int workers = 1;

  void validate() const;
};

/// Adaptive moment estimation over a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  /// params -= step(grad)
  void step(std::span<double> params, std::span<const double> grad);
  [[nodiscard]] std::int64_t steps_taken() const { return t_; }

 private:
  double lr_ = 3e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

/// One stored one-step interaction.
struct Experience {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double log_prob = 0.0;
  double reward = 0.0;
  bool diverged = false;
};

/// A = R - V(s), then shifted and scaled to zero mean and unit (population)
/// std. When every advantage is equal the result is all zeros.
std::vector<double> normalized_advantages(const ActorCritic& ac,
                                          std::span<const Experience> batch);

struct LossParts {
  double total = 0.0;
  double policy = 0.0;   // -mean clipped surrogate
  double value = 0.0;    // mean (V - R)^2
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double mean_ratio = 0.0;
};

/// total = policy - entropy_coeff * entropy + value_coeff * value, averaged
/// over `batch`. When `grad` is given it receives d(total)/d(params).
LossParts ppo_loss(const ActorCritic& ac, std::span<const Experience> batch,
                   std::span<const double> advantages, const PpoConfig& config,
                   std::vector<double>* grad = nullptr);

/// Probability ratios pi_new(a|s) / pi_old(a|s) for each stored transition.
std::vector<double> probability_ratios(const ActorCritic& ac,
                                       std::span<const Experience> batch);

struct UpdateDiagnostics {
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  bool aborted = false;  // non-finite loss; parameters restored
};

/// Clipped-surrogate update over `update_epochs` passes of shuffled minibatches.
UpdateDiagnostics ppo_update(std::span<const Experience> batch, ActorCritic& ac, Adam& opt,
                             const PpoConfig& config, Rng& rng);

struct TrainLogRecord {
  std::int64_t batch = 0;
  std::int64_t episodes_seen = 0;
  double mean_reward = 0.0;
  double min_reward = 0.0;
  double clip_fraction = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double diverged_fraction = 0.0;
};

struct TrainResult {
  ActorCritic best;       // parameters that collected the best-mean-reward batch
  ActorCritic final;
  std::vector<TrainLogRecord> log;
  std::vector<std::string> warnings;
  bool converged = false;
};

/// Runs one episode with the given policy. Must be a pure function of
/// (policy, episode index) so that collection order does not matter.
using EpisodeFn = std::function<Experience(const GaussianPolicy&, std::int64_t episode)>;

struct TrainOptions {
  int state_dim = 4;
  int action_dim = 6;
  std::uint64_t seed = 0;
  /// Called with every collected batch, in episode order.
  std::function<void(std::int64_t batch, std::span<const Experience>)> on_batch;
};

TrainResult train(const EpisodeFn& env, const PpoConfig& config, const TrainOptions& options);

}  // namespace pidrl
