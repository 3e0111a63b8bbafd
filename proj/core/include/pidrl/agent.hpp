#pragma once

#include <string>
#include <vector>

#include "pidrl/mdp.hpp"
#include "pidrl/ppo.hpp"
#include "pidrl/snapshot.hpp"

namespace pidrl {

struct AgentTraining {
  TrainResult result;
  std::vector<Transition> transitions;  // every collected episode, in index order
};

/// PPO on the switching environment. Episode randomness comes from
/// env.seed; network initialisation and minibatch shuffling from the same
/// seed under separate stream tags.
AgentTraining train_agent(const Environment& env, const PpoConfig& config);

PolicySnapshot make_snapshot(const ActorCritic& networks, const Environment& env,
                             std::string config_fingerprint);

}  // namespace pidrl
