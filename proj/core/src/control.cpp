#include "pidrl/control.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pidrl {

namespace {

bool in_bounds(double v, double bound) { return std::isfinite(v) && std::abs(v) <= bound; }

// Fixed-size delay line of drive pairs; latency 0 passes drives straight through.
class DrivePipeline {
 public:
  DrivePipeline(int latency, Point2 initial)
      : slots_(static_cast<std::size_t>(latency), initial) {}

  Point2 push(Point2 drive) {
    if (slots_.empty()) return drive;
    Point2 out = slots_[head_];
    slots_[head_] = drive;
    head_ = (head_ + 1) % slots_.size();
    return out;
  }

 private:
  std::vector<Point2> slots_;
  std::size_t head_ = 0;
};

}  // namespace

bool PidGains::non_negative() const {
  for (double g : as_array()) {
    if (!(g >= 0.0)) return false;
  }
  return true;
}

PidOutput pid_step(const AxisGains& gains, double error, const PidState& state, double dt,
                   double output_limit, double feedforward) {
  if (!std::isfinite(error)) throw InvalidArgument("pid_step: non-finite error");
  if (!(dt > 0.0)) throw InvalidArgument("pid_step: dt must be positive");
  if (!(output_limit > 0.0)) throw InvalidArgument("pid_step: output_limit must be positive");

  const double derivative = (error - state.prev_error) / dt;
  const double candidate = state.integral + error * dt;
  double out = feedforward + gains.p * error + gains.i * candidate + gains.d * derivative;

  PidState next{candidate, error};
  const bool deepening = (out > output_limit && error > 0.0) ||
                         (out < -output_limit && error < 0.0);
  if (deepening) {
    next.integral = state.integral;
    out = feedforward + gains.p * error + gains.i * state.integral + gains.d * derivative;
  }
  return {std::clamp(out, -output_limit, output_limit), next};
}

void LoopConfig::validate() const {
  if (!(dt > 0.0)) throw InvalidArgument("loop dt must be positive");
  if (!(output_limit > 0.0)) throw InvalidArgument("output_limit must be positive");
  if (latency_ticks < 0) throw InvalidArgument("latency_ticks must be >= 0");
  if (!(divergence_bound_mm > 0.0)) throw InvalidArgument("divergence bound must be positive");
}

PlantModel::PlantModel(const ActuatorParams& actuator, double temperature_c, double dt) {
  const ActuatorParams eff = effective_params(actuator, temperature_c);
  x = DiscreteAxis(eff.x_axis, dt);
  y = DiscreteAxis(eff.y_axis, dt);
  gain_x = eff.x_axis.gain;
  gain_y = eff.y_axis.gain;
  coupling = eff.coupling_coeff;
}

Point2 PlantModel::hold_drive(const Point2& p) const {
  // Solve u_x + c u_y = x / G_x and u_y + c u_x = y / G_y.
  const double a = p.x / gain_x;
  const double b = p.y / gain_y;
  const double det = 1.0 - coupling * coupling;
  return {(a - coupling * b) / det, (b - coupling * a) / det};
}

Trace run_switch(const PlantModel& plant, const PidGains& gains, const SwitchEvent& event,
                 double duration_ms, const LoopConfig& loop) {
  loop.validate();
  if (!(duration_ms > 0.0)) throw InvalidArgument("run_switch: duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_ms * 1e-3 / loop.dt));
  if (n == 0) throw InvalidArgument("run_switch: duration shorter than one tick");

  Trace trace;
  trace.dt = loop.dt;
  trace.source = event.source;
  trace.target = event.dest;
  trace.samples.resize(n);
  trace.drives.resize(n);

  const double limit = loop.output_limit;
  Point2 hold = plant.hold_drive(event.source);
  hold.x = std::clamp(hold.x, -limit, limit);
  hold.y = std::clamp(hold.y, -limit, limit);
  DrivePipeline pipeline(loop.latency_ticks, hold);

  Point2 pos = event.source;
  Point2 vel;
  PidState sx{0.0, event.dest.x - event.source.x};
  PidState sy{0.0, event.dest.y - event.source.y};

  for (std::size_t k = 0; k < n; ++k) {
    trace.samples[k] = pos;
    if (trace.diverged) {
      trace.drives[k] = trace.drives[k - 1];
      continue;
    }
    const PidOutput ox = pid_step(gains.x, event.dest.x - pos.x, sx, loop.dt, limit, hold.x);
    const PidOutput oy = pid_step(gains.y, event.dest.y - pos.y, sy, loop.dt, limit, hold.y);
    sx = ox.state;
    sy = oy.state;
    trace.drives[k] = {ox.drive, oy.drive};

    const Point2 applied = pipeline.push({ox.drive, oy.drive});
    const auto [px, vx] = plant.x.step(pos.x, vel.x, applied.x + plant.coupling * applied.y);
    const auto [py, vy] = plant.y.step(pos.y, vel.y, applied.y + plant.coupling * applied.x);

    const double bound = loop.divergence_bound_mm;
    if (!in_bounds(px, bound) || !in_bounds(py, bound) || !std::isfinite(vx) ||
        !std::isfinite(vy)) {
      trace.diverged = true;
      continue;
    }
    pos = {px, py};
    vel = {vx, vy};
  }
  return trace;
}

Trace run_switch(const ActuatorParams& actuator, double temperature_c, const PidGains& gains,
                 const SwitchEvent& event, double duration_ms, const LoopConfig& loop) {
  const PlantModel plant(actuator, temperature_c, loop.dt);
  return run_switch(plant, gains, event, duration_ms, loop);
}

namespace {

std::optional<double> settle_axis(const Trace& trace, double target, double margin,
                                  double Point2::*coord) {
  const std::size_t n = trace.samples.size();
  std::size_t k = n;
  while (k > 0) {
    const double dev = std::abs(trace.samples[k - 1].*coord - target);
    if (!(dev <= margin)) break;
    --k;
  }
  // k is the first index of the final in-margin run.
  if (k == n) return std::nullopt;
  return static_cast<double>(k) * trace.dt * 1e3;
}

double overshoot_axis(const Trace& trace, double source, double target,
                      double Point2::*coord) {
  double best = 0.0;
  if (source == target) {
    for (const Point2& p : trace.samples) best = std::max(best, std::abs(p.*coord - target));
    return best;
  }
  const double dir = target > source ? 1.0 : -1.0;
  for (const Point2& p : trace.samples) best = std::max(best, dir * (p.*coord - target));
  return best;
}

void require_samples(const Trace& trace) {
  if (trace.samples.empty()) throw InvalidArgument("empty trace");
}

}  // namespace

AxisPair settling_time(const Trace& trace, double margin_mm) {
  require_samples(trace);
  if (!(margin_mm > 0.0)) throw InvalidArgument("settling margin must be positive");
  return {settle_axis(trace, trace.target.x, margin_mm, &Point2::x),
          settle_axis(trace, trace.target.y, margin_mm, &Point2::y)};
}

OvershootPair overshoot(const Trace& trace) {
  require_samples(trace);
  return {overshoot_axis(trace, trace.source.x, trace.target.x, &Point2::x),
          overshoot_axis(trace, trace.source.y, trace.target.y, &Point2::y)};
}

SwitchMetrics measure_switch(const Trace& trace, double margin_mm) {
  const AxisPair st = settling_time(trace, margin_mm);
  const OvershootPair os = overshoot(trace);
  SwitchMetrics m;
  m.st_x = st.x;
  m.st_y = st.y;
  m.os_x = os.x;
  m.os_y = os.y;
  m.duration_ms = trace.duration_ms();
  m.diverged = trace.diverged;
  if (m.diverged) {
    m.st_x.reset();
    m.st_y.reset();
  }
  return m;
}

}  // namespace pidrl
