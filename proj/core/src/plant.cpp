#include "pidrl/plant.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>
#include <unsupported/Eigen/MatrixFunctions>

namespace pidrl {

namespace {

constexpr int kMaxDrawAttempts = 1000;

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

double drift(double value, double coeff, double temperature_c) {
  return value * (1.0 + coeff * (temperature_c - kReferenceTemperatureC));
}

AxisParams drift_axis(const AxisParams& a, const ThermalCoeffs& k, double t) {
  return {drift(a.resonance_hz, k.resonance, t), drift(a.gain, k.gain, t),
          drift(a.damping_ratio, k.damping, t)};
}

void check_temperature(double temperature_c) {
  if (!(temperature_c >= kMinTemperatureC && temperature_c <= kMaxTemperatureC)) {
    throw InvalidArgument("temperature " + std::to_string(temperature_c) +
                          " C outside supported range [5, 73]");
  }
}

// Multiplicative draw nominal * (1 + N(0, spread)); exact nominal when spread is 0.
double perturb(double nominal, double spread, Rng& rng) {
  if (spread == 0.0) return nominal;
  std::normal_distribution<double> n(0.0, spread);
  return nominal * (1.0 + n(rng));
}

AxisParams perturb_axis(const AxisParams& a, const RelativeSpread& s, Rng& rng) {
  AxisParams out;
  out.resonance_hz = perturb(a.resonance_hz, s.resonance, rng);
  out.gain = perturb(a.gain, s.gain, rng);
  out.damping_ratio = perturb(a.damping_ratio, s.damping, rng);
  return out;
}

ActuatorParams draw_actuator(const FleetSpec& spec, int id, Rng& rng) {
  for (int attempt = 0; attempt < kMaxDrawAttempts; ++attempt) {
    ActuatorParams a = spec.nominal;
    a.id = id;
    a.x_axis = perturb_axis(spec.nominal.x_axis, spec.relative_spread, rng);
    a.y_axis = perturb_axis(spec.nominal.y_axis, spec.relative_spread, rng);
    a.coupling_coeff =
        perturb(spec.nominal.coupling_coeff, spec.relative_spread.coupling, rng);
    if (a.valid()) return a;
  }
  throw InvalidArgument("fleet spread too large: no valid actuator after " +
                        std::to_string(kMaxDrawAttempts) + " draws");
}

}  // namespace

double AxisParams::omega() const { return 2.0 * std::numbers::pi * resonance_hz; }

bool AxisParams::valid() const {
  return finite_positive(resonance_hz) && finite_positive(gain) &&
         finite_positive(damping_ratio) && damping_ratio < 1.0;
}

bool ActuatorParams::valid() const {
  if (!x_axis.valid() || !y_axis.valid()) return false;
  if (!(coupling_coeff >= 0.0 && coupling_coeff < 0.2)) return false;
  // Drift is linear, so checking both ends of the range covers every temperature.
  for (double t : {kMinTemperatureC, kMaxTemperatureC}) {
    if (!drift_axis(x_axis, thermal, t).valid() || !drift_axis(y_axis, thermal, t).valid())
      return false;
  }
  return true;
}

void FleetSpec::validate() const {
  if (n_train <= 0 || n_test <= 0)
    throw InvalidArgument("fleet needs n_train > 0 and n_test > 0");
  const RelativeSpread& s = relative_spread;
  for (double v : {s.resonance, s.gain, s.damping, s.coupling}) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument("relative spread entries must be finite and >= 0");
  }
  if (!nominal.valid()) throw InvalidArgument("nominal actuator parameters are invalid");
}

Fleet sample_fleet(const FleetSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Fleet fleet;
  fleet.train.reserve(static_cast<std::size_t>(spec.n_train));
  fleet.test.reserve(static_cast<std::size_t>(spec.n_test));
  int id = 0;
  for (int i = 0; i < spec.n_train; ++i) fleet.train.push_back(draw_actuator(spec, id++, rng));
  for (int i = 0; i < spec.n_test; ++i) fleet.test.push_back(draw_actuator(spec, id++, rng));
  return fleet;
}

ActuatorParams effective_params(const ActuatorParams& actuator, double temperature_c) {
  check_temperature(temperature_c);
  if (temperature_c == kReferenceTemperatureC) return actuator;
  ActuatorParams out = actuator;
  out.x_axis = drift_axis(actuator.x_axis, actuator.thermal, temperature_c);
  out.y_axis = drift_axis(actuator.y_axis, actuator.thermal, temperature_c);
  return out;
}

RawState measure_state(const ActuatorParams& actuator, double temperature_c,
                       double noise_frac, Rng& rng) {
  if (!(noise_frac >= 0.0)) throw InvalidArgument("noise_frac must be >= 0");
  const ActuatorParams eff = effective_params(actuator, temperature_c);
  auto noisy = [&](double v) { return perturb(v, noise_frac, rng); };
  RawState s;
  s.omega_x = noisy(eff.x_axis.resonance_hz);
  s.gain_x = noisy(eff.x_axis.gain);
  s.omega_y = noisy(eff.y_axis.resonance_hz);
  s.gain_y = noisy(eff.y_axis.gain);
  return s;
}

DiscreteAxis::DiscreteAxis(const AxisParams& axis, double dt) : dt_(dt) {
  if (!axis.valid()) throw InvalidArgument("invalid axis parameters");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  const double w = axis.omega();
  const double w2 = w * w;

  // M = [A B; 0 0]  =>  exp(M dt) = [Ad Bd; 0 1]
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 1) = 1.0;
  m(1, 0) = -w2;
  m(1, 1) = -2.0 * axis.damping_ratio * w;
  m(1, 2) = w2 * axis.gain;
  const Eigen::Matrix3d phi = (m * dt).exp();

  a00_ = phi(0, 0);
  a01_ = phi(0, 1);
  a10_ = phi(1, 0);
  a11_ = phi(1, 1);
  b0_ = phi(0, 2);
  b1_ = phi(1, 2);
}

AxisStep step_dynamics(const AxisParams& axis, double pos, double vel, double drive,
                       double coupled_drive, double coupling, double dt) {
  for (double v : {pos, vel, drive, coupled_drive, coupling, dt}) {
    if (!std::isfinite(v)) throw InvalidArgument("step_dynamics: non-finite input");
  }
  const DiscreteAxis model(axis, dt);
  const auto [p, v] = model.step(pos, vel, drive + coupling * coupled_drive);
  return {p, v};
}

}  // namespace pidrl
