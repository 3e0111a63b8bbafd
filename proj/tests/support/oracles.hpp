#pragma once

// Independent reference implementations used as test oracles. None of this
// calls into the library's integrator or loop code.

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <utility>
#include <vector>

#include "pidrl/control.hpp"
#include "pidrl/plant.hpp"

namespace oracle {

struct AxisOde {
  double omega;
  double gain;
  double zeta;
};

inline AxisOde ode_of(const pidrl::AxisParams& a) {
  return {2.0 * std::numbers::pi * a.resonance_hz, a.gain, a.damping_ratio};
}

/// Classic fourth-order Runge-Kutta over `dt` in `substeps` equal pieces,
/// drive held constant.
inline std::pair<double, double> rk4(const AxisOde& p, double x, double v, double u, double dt,
                                     int substeps) {
  const double h = dt / substeps;
  const auto acc = [&](double xx, double vv) {
    return p.omega * p.omega * (p.gain * u - xx) - 2.0 * p.zeta * p.omega * vv;
  };
  for (int s = 0; s < substeps; ++s) {
    const double k1x = v, k1v = acc(x, v);
    const double k2x = v + 0.5 * h * k1v, k2v = acc(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    const double k3x = v + 0.5 * h * k2v, k3v = acc(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    const double k4x = v + h * k3v, k4v = acc(x + h * k3x, v + h * k3v);
    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return {x, v};
}

/// Unit-step response sampled every `dt` for `n` samples, RK4 at dt / substeps.
inline std::vector<double> rk4_step_response(const AxisOde& p, double dt, int n, int substeps) {
  std::vector<double> out(static_cast<std::size_t>(n));
  double x = 0.0, v = 0.0;
  for (int k = 0; k < n; ++k) {
    out[static_cast<std::size_t>(k)] = x;
    std::tie(x, v) = rk4(p, x, v, 1.0, dt, substeps);
  }
  return out;
}

/// The two-axis PID loop written out longhand against RK4 plant integration.
inline std::vector<pidrl::Point2> closed_loop(const pidrl::ActuatorParams& actuator,
                                             double temperature_c, const pidrl::PidGains& g,
                                             const pidrl::SwitchEvent& ev, int n,
                                             const pidrl::LoopConfig& loop, int substeps) {
  const pidrl::ActuatorParams eff = pidrl::effective_params(actuator, temperature_c);
  const AxisOde px = ode_of(eff.x_axis), py = ode_of(eff.y_axis);
  const double c = eff.coupling_coeff;
  const double lim = loop.output_limit;
  const double dt = loop.dt;

  // Hold drive for the source: u_x + c u_y = x/Gx, u_y + c u_x = y/Gy.
  const double a = ev.source.x / px.gain, b = ev.source.y / py.gain;
  double hx = (a - c * b) / (1 - c * c), hy = (b - c * a) / (1 - c * c);
  hx = std::clamp(hx, -lim, lim);
  hy = std::clamp(hy, -lim, lim);

  std::deque<std::pair<double, double>> pipe(static_cast<std::size_t>(loop.latency_ticks),
                                             {hx, hy});
  double x = ev.source.x, y = ev.source.y, vx = 0.0, vy = 0.0;
  double ix = 0.0, iy = 0.0;
  double ex_prev = ev.dest.x - x, ey_prev = ev.dest.y - y;

  const auto pid = [&](const pidrl::AxisGains& k, double e, double& integ, double& prev,
                       double hold) {
    const double deriv = (e - prev) / dt;
    double cand = integ + e * dt;
    double out = hold + k.p * e + k.i * cand + k.d * deriv;
    if ((out > lim && e > 0) || (out < -lim && e < 0)) {
      cand = integ;
      out = hold + k.p * e + k.i * integ + k.d * deriv;
    }
    integ = cand;
    prev = e;
    return std::clamp(out, -lim, lim);
  };

  std::vector<pidrl::Point2> samples(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    samples[static_cast<std::size_t>(k)] = {x, y};
    const double ux = pid(g.x, ev.dest.x - x, ix, ex_prev, hx);
    const double uy = pid(g.y, ev.dest.y - y, iy, ey_prev, hy);
    pipe.emplace_back(ux, uy);
    const auto [ax, ay] = pipe.front();
    pipe.pop_front();
    std::tie(x, vx) = rk4(px, x, vx, ax + c * ay, dt, substeps);
    std::tie(y, vy) = rk4(py, y, vy, ay + c * ax, dt, substeps);
  }
  return samples;
}

/// Brute-force settling index: smallest k such that every sample from k on
/// is within margin; returns -1 when the last sample is outside.
inline long settle_index(const std::vector<double>& dev, double margin) {
  const long n = static_cast<long>(dev.size());
  for (long k = 0; k < n; ++k) {
    bool ok = true;
    for (long j = k; j < n && ok; ++j) ok = std::abs(dev[static_cast<std::size_t>(j)]) <= margin;
    if (ok) return k;
  }
  return -1;
}

}  // namespace oracle
