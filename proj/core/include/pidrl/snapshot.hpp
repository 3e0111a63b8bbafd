#pragma once

#include <filesystem>
#include <string>

#include "pidrl/mdp.hpp"
#include "pidrl/ppo.hpp"

namespace pidrl {

inline constexpr int kSnapshotFormatVersion = 1;

/// Everything offline inference needs: trained networks, the feature scales
/// used during training, and the action bounds.
struct PolicySnapshot {
  int format_version = kSnapshotFormatVersion;
  ActorCritic networks;
  FeatureScales scales;
  ActionBounds bounds;
  std::string config_fingerprint;
};

/// Versioned JSON text; doubles are written in shortest round-trip form so
/// reading a snapshot back reproduces every parameter bit for bit.
std::string to_json_text(const PolicySnapshot& snapshot);
PolicySnapshot snapshot_from_json_text(const std::string& text);

void save_snapshot(const PolicySnapshot& snapshot, const std::filesystem::path& path);
PolicySnapshot load_snapshot(const std::filesystem::path& path);

/// One-shot gains for a measured actuator: normalise with the stored scales,
/// take the policy mean and map it through the stored bounds.
PidGains infer(const PolicySnapshot& snapshot, const RawState& raw);

}  // namespace pidrl
