#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "pidrl/plant.hpp"

namespace pidrl {

inline constexpr double kLoopDt = 1e-4;  // 10 kHz

struct AxisGains {
  double p = 0.0;
  double i = 0.0;
  double d = 0.0;
  friend bool operator==(const AxisGains&, const AxisGains&) = default;
};

/// The six-gain action: (P, I, D) for x then y.
struct PidGains {
  AxisGains x;
  AxisGains y;

  [[nodiscard]] std::array<double, 6> as_array() const {
    return {x.p, x.i, x.d, y.p, y.i, y.d};
  }
  static PidGains from_array(std::span<const double, 6> a) {
    return {{a[0], a[1], a[2]}, {a[3], a[4], a[5]}};
  }
  static PidGains shared(const AxisGains& g) { return {g, g}; }
  [[nodiscard]] bool non_negative() const;
  friend bool operator==(const PidGains&, const PidGains&) = default;
};

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
};

struct PidOutput {
  double drive;
  PidState state;
};

/// Positional PID with rectangular integration, backward-difference derivative
/// on the error, output clamp and conditional anti-windup: the integral does
/// not accumulate while the output is saturated in the direction of the error.
/// `feedforward` is a constant drive added before the clamp (the hold drive of
/// the position the loop was settled at).
PidOutput pid_step(const AxisGains& gains, double error, const PidState& state,
                   double dt, double output_limit, double feedforward = 0.0);

struct LoopConfig {
  double dt = kLoopDt;
  double output_limit = 30.0;
  /// Ticks between computing a drive and it reaching the actuator.
  int latency_ticks = 7;
  /// |position| beyond this (mm) marks the loop as diverged.
  double divergence_bound_mm = 1e4;

  void validate() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct SwitchEvent {
  int event_id = 0;
  Point2 source;
  Point2 dest;
  friend bool operator==(const SwitchEvent&, const SwitchEvent&) = default;
};

struct Trace {
  double dt = kLoopDt;
  std::vector<Point2> samples;
  /// Drive commanded on each tick (before latency), same length as samples.
  std::vector<Point2> drives;
  Point2 source;
  Point2 target;
  bool diverged = false;

  [[nodiscard]] double duration_ms() const {
    return static_cast<double>(samples.size()) * dt * 1e3;
  }
};

/// Runs both axis loops against step targets from rest at `event.source`.
/// The loop starts settled at the source: the latency pipeline and the PID
/// feedforward hold the drive that keeps the plant at equilibrium there, and
/// prev_error starts at the initial error (no derivative kick). Sample k is
/// the position at t = k * dt, recorded before the tick's drive is computed.
/// A diverged loop stops integrating, pads the remaining samples with the last
/// finite position and sets `diverged`.
Trace run_switch(const ActuatorParams& actuator, double temperature_c,
                 const PidGains& gains, const SwitchEvent& event, double duration_ms,
                 const LoopConfig& loop = {});

/// An actuator discretised at one temperature and loop rate. Building it is the
/// expensive part of a switch, so evaluation loops reuse one per actuator.
struct PlantModel {
  DiscreteAxis x;
  DiscreteAxis y;
  double gain_x = 1.0;
  double gain_y = 1.0;
  double coupling = 0.0;

  PlantModel(const ActuatorParams& actuator, double temperature_c, double dt);

  /// Drive pair holding the plant at rest at `p`, coupling included.
  [[nodiscard]] Point2 hold_drive(const Point2& p) const;
};

Trace run_switch(const PlantModel& plant, const PidGains& gains, const SwitchEvent& event,
                 double duration_ms, const LoopConfig& loop);

/// Per-axis settling time in ms; nullopt when the final sample is out of margin.
struct AxisPair {
  std::optional<double> x;
  std::optional<double> y;
};

AxisPair settling_time(const Trace& trace, double margin_mm);

struct OvershootPair {
  double x = 0.0;
  double y = 0.0;
};

/// Largest excursion past the target in the direction of travel, per axis.
OvershootPair overshoot(const Trace& trace);

struct SwitchMetrics {
  std::optional<double> st_x;
  std::optional<double> st_y;
  double os_x = 0.0;
  double os_y = 0.0;
  double duration_ms = 0.0;
  bool diverged = false;

  /// Settling time with UNSETTLED counted as the full trace duration.
  [[nodiscard]] double st_x_or_duration() const { return st_x.value_or(duration_ms); }
  [[nodiscard]] double st_y_or_duration() const { return st_y.value_or(duration_ms); }
};

/// Settling times and overshoot; a diverged trace counts as unsettled on both axes.
SwitchMetrics measure_switch(const Trace& trace, double margin_mm);

}  // namespace pidrl
