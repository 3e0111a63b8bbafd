#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pidrl/control.hpp"
#include "pidrl/plant.hpp"

namespace pidrl {

/// Grid of switching destinations: rows along y, cols along x, spanning
/// [-extent, extent] on both axes with the corners included.
struct Plane {
  int rows = 16;
  int cols = 24;
  double extent_mm = 12.0;

  [[nodiscard]] int n_positions() const { return rows * cols; }
  /// Position of grid index `index = row * cols + col`.
  [[nodiscard]] Point2 position(int index) const;
  [[nodiscard]] Point2 position(int row, int col) const;
  void validate() const;
};

/// Per-type divisors applied to raw measurements.
struct FeatureScales {
  double frequency = 10.0;
  double gain = 1.0;

  /// 10^floor(log10(v)) per feature type, taken from a nominal actuator.
  static FeatureScales order_of_magnitude(const ActuatorParams& nominal);
  friend bool operator==(const FeatureScales&, const FeatureScales&) = default;
};

using NormalizedState = std::array<double, 4>;

NormalizedState normalize_state(const RawState& raw, const FeatureScales& scales);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Bounds per gain kind, shared by both axes.
struct ActionBounds {
  Interval p{0.0, 6.0};
  Interval i{0.0, 1500.0};
  Interval d{0.0, 0.015};

  void validate() const;
  [[nodiscard]] const Interval& for_index(int k) const;  // k in [0, 6)
  friend bool operator==(const ActionBounds&, const ActionBounds&) = default;
};

using RawAction = std::array<double, 6>;

/// lo + (tanh(v) + 1) / 2 * (hi - lo) per coordinate.
PidGains map_action(std::span<const double, 6> raw, const ActionBounds& bounds);
/// Inverse of map_action; gains must lie strictly inside their bounds.
RawAction unmap_action(const PidGains& gains, const ActionBounds& bounds);

struct RewardSpec {
  double l_st_ms = 0.0;
  double l_os_mm = 5.0;
  double st_unit_ms = 20.0;
  double margin_mm = 0.15;

  void validate() const;
};

/// m / l when m >= l, otherwise 1; with l == 0 the factor is m / unit.
double metric_penalty(double measured, double threshold, double unit);

/// R = -prod over {ST, OS} of the worse axis penalty. UNSETTLED counts as
/// the full trace duration.
double compute_reward(const SwitchMetrics& metrics, const RewardSpec& spec);

/// Uniform source and distinct uniform destination over the grid.
SwitchEvent sample_event(const Plane& plane, Rng& rng, int event_id = 0);

/// Policy output for one state: an unbounded raw action and its log-density.
struct ActionDraw {
  RawAction raw{};
  double log_prob = 0.0;
};

using PolicyFn = std::function<ActionDraw(const NormalizedState&, Rng&)>;

struct Environment {
  std::vector<ActuatorParams> train_fleet;
  Plane plane;
  ActionBounds bounds;
  RewardSpec reward;
  FeatureScales scales;
  LoopConfig loop;
  double temperature_c = kReferenceTemperatureC;
  double measurement_noise = 0.01;
  double episode_ms = 100.0;
  std::uint64_t seed = 0;
};

struct Transition {
  std::int64_t episode = 0;
  int actuator_id = 0;
  RawState raw_state;
  NormalizedState state{};
  ActionDraw action;
  PidGains gains;
  SwitchMetrics metrics;
  double reward = 0.0;
};

/// Episode RNG stream derived from (environment seed, episode index), so
/// episodes can run in any order or in parallel.
Rng episode_rng(std::uint64_t seed, std::int64_t episode);

/// One-step episode: random train actuator, noisy state measurement, random
/// event, policy query, switch, reward. Divergence shows up as a reward.
Transition run_episode(const Environment& env, const PolicyFn& policy, std::int64_t episode);

/// Same episode with the event replaced, for forced scenarios.
Transition run_episode(const Environment& env, const PolicyFn& policy, std::int64_t episode,
                       const SwitchEvent& forced_event);

}  // namespace pidrl
