#include "pidrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pidrl {

namespace {

double magnitude_of(double v) { return std::pow(10.0, std::floor(std::log10(v))); }

double grid_coord(int k, int count, double extent) {
  if (count == 1) return 0.0;
  return -extent + 2.0 * extent * static_cast<double>(k) / static_cast<double>(count - 1);
}

}  // namespace

Point2 Plane::position(int row, int col) const {
  return {grid_coord(col, cols, extent_mm), grid_coord(row, rows, extent_mm)};
}

Point2 Plane::position(int index) const {
  if (index < 0 || index >= n_positions()) throw InvalidArgument("grid index out of range");
  return position(index / cols, index % cols);
}

void Plane::validate() const {
  if (rows <= 0 || cols <= 0) throw InvalidArgument("plane needs rows, cols > 0");
  if (n_positions() < 2) throw InvalidArgument("plane needs at least 2 positions");
  if (!(extent_mm > 0.0)) throw InvalidArgument("plane extent must be positive");
}

FeatureScales FeatureScales::order_of_magnitude(const ActuatorParams& nominal) {
  FeatureScales s;
  s.frequency = magnitude_of(nominal.x_axis.resonance_hz);
  s.gain = magnitude_of(nominal.x_axis.gain);
  return s;
}

NormalizedState normalize_state(const RawState& raw, const FeatureScales& scales) {
  if (!(scales.frequency > 0.0) || !(scales.gain > 0.0))
    throw InvalidArgument("feature scales must be positive");
  for (double v : raw.as_array()) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("raw state entries must be finite and positive");
  }
  return {raw.omega_x / scales.frequency, raw.gain_x / scales.gain,
          raw.omega_y / scales.frequency, raw.gain_y / scales.gain};
}

void ActionBounds::validate() const {
  for (const Interval* iv : {&p, &i, &d}) {
    if (!(iv->lo >= 0.0 && iv->lo < iv->hi) || !std::isfinite(iv->hi))
      throw InvalidArgument("action bounds need 0 <= lo < hi");
  }
}

const Interval& ActionBounds::for_index(int k) const {
  switch (k % 3) {
    case 0: return p;
    case 1: return i;
    default: return d;
  }
}

PidGains map_action(std::span<const double, 6> raw, const ActionBounds& bounds) {
  std::array<double, 6> g{};
  for (int k = 0; k < 6; ++k) {
    const Interval& iv = bounds.for_index(k);
    g[k] = iv.lo + 0.5 * (std::tanh(raw[k]) + 1.0) * (iv.hi - iv.lo);
  }
  return PidGains::from_array(g);
}

RawAction unmap_action(const PidGains& gains, const ActionBounds& bounds) {
  const auto g = gains.as_array();
  RawAction raw{};
  for (int k = 0; k < 6; ++k) {
    const Interval& iv = bounds.for_index(k);
    const double u = 2.0 * (g[k] - iv.lo) / (iv.hi - iv.lo) - 1.0;
    if (!(u > -1.0 && u < 1.0)) throw InvalidArgument("gain not strictly inside its bounds");
    raw[k] = std::atanh(u);
  }
  return raw;
}

void RewardSpec::validate() const {
  if (!(l_os_mm > 0.0)) throw InvalidArgument("l_os must be positive");
  if (!(l_st_ms >= 0.0)) throw InvalidArgument("l_st must be >= 0");
  if (!(st_unit_ms > 0.0)) throw InvalidArgument("st_unit must be positive");
  if (!(margin_mm > 0.0)) throw InvalidArgument("settling margin must be positive");
}

double metric_penalty(double measured, double threshold, double unit) {
  if (!(measured >= 0.0)) throw InvalidArgument("metric_penalty: measured value must be >= 0");
  if (threshold == 0.0) return measured / unit;
  return measured >= threshold ? measured / threshold : 1.0;
}

double compute_reward(const SwitchMetrics& m, const RewardSpec& spec) {
  const double st = std::max(metric_penalty(m.st_x_or_duration(), spec.l_st_ms, spec.st_unit_ms),
                             metric_penalty(m.st_y_or_duration(), spec.l_st_ms, spec.st_unit_ms));
  const double os = std::max(metric_penalty(m.os_x, spec.l_os_mm, spec.l_os_mm),
                             metric_penalty(m.os_y, spec.l_os_mm, spec.l_os_mm));
  return -(st * os);
}

SwitchEvent sample_event(const Plane& plane, Rng& rng, int event_id) {
  const int n = plane.n_positions();
  std::uniform_int_distribution<int> src_dist(0, n - 1);
  std::uniform_int_distribution<int> dst_dist(0, n - 2);
  const int src = src_dist(rng);
  int dst = dst_dist(rng);
  if (dst >= src) ++dst;
  return {event_id, plane.position(src), plane.position(dst)};
}

Rng episode_rng(std::uint64_t seed, std::int64_t episode) {
  const auto e = static_cast<std::uint64_t>(episode);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(e >> 32),
                    0x65706973u};
  return Rng(seq);
}

namespace {

Transition run_episode_impl(const Environment& env, const PolicyFn& policy,
                            std::int64_t episode, const SwitchEvent* forced) {
  if (env.train_fleet.empty()) throw InvalidArgument("run_episode: empty training fleet");
  Rng rng = episode_rng(env.seed, episode);

  std::uniform_int_distribution<std::size_t> pick(0, env.train_fleet.size() - 1);
  const ActuatorParams& actuator = env.train_fleet[pick(rng)];

  Transition t;
  t.episode = episode;
  t.actuator_id = actuator.id;
  t.raw_state = measure_state(actuator, env.temperature_c, env.measurement_noise, rng);
  t.state = normalize_state(t.raw_state, env.scales);
  const SwitchEvent event =
      forced ? *forced : sample_event(env.plane, rng, static_cast<int>(episode));
  t.action = policy(t.state, rng);
  t.gains = map_action(t.action.raw, env.bounds);

  const Trace trace =
      run_switch(actuator, env.temperature_c, t.gains, event, env.episode_ms, env.loop);
  t.metrics = measure_switch(trace, env.reward.margin_mm);
  t.reward = compute_reward(t.metrics, env.reward);
  return t;
}

}  // namespace

Transition run_episode(const Environment& env, const PolicyFn& policy, std::int64_t episode) {
  return run_episode_impl(env, policy, episode, nullptr);
}

Transition run_episode(const Environment& env, const PolicyFn& policy, std::int64_t episode,
                       const SwitchEvent& forced_event) {
  return run_episode_impl(env, policy, episode, &forced_event);
}

}  // namespace pidrl
