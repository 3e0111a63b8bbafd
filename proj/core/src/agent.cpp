#include "pidrl/agent.hpp"

namespace pidrl {

AgentTraining train_agent(const Environment& env, const PpoConfig& config) {
  config.validate();
  AgentTraining out;
  out.transitions.resize(static_cast<std::size_t>(config.max_episodes));

  const EpisodeFn episode = [&](const GaussianPolicy& policy, std::int64_t index) {
    const PolicyFn act = [&policy](const NormalizedState& s, Rng& rng) {
      return sample_and_logprob(policy, s, rng);
    };
    Transition t = run_episode(env, act, index);
    Experience e;
    e.state = to_vector(t.state);
    e.action = Eigen::Map<const Eigen::VectorXd>(t.action.raw.data(), 6);
    e.log_prob = t.action.log_prob;
    e.reward = t.reward;
    e.diverged = t.metrics.diverged;
    out.transitions[static_cast<std::size_t>(index)] = std::move(t);
    return e;
  };

  TrainOptions options;
  options.seed = env.seed;
  out.result = train(episode, config, options);
  const std::int64_t seen = out.result.log.empty() ? 0 : out.result.log.back().episodes_seen;
  out.transitions.resize(static_cast<std::size_t>(seen));
  return out;
}

PolicySnapshot make_snapshot(const ActorCritic& networks, const Environment& env,
                             std::string config_fingerprint) {
  PolicySnapshot s;
  s.networks = networks;
  s.scales = env.scales;
  s.bounds = env.bounds;
  s.config_fingerprint = std::move(config_fingerprint);
  return s;
}

}  // namespace pidrl
