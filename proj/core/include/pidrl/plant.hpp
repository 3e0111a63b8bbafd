#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pidrl {

using Rng = std::mt19937_64;

inline constexpr double kReferenceTemperatureC = 25.0;
inline constexpr double kMinTemperatureC = 5.0;
inline constexpr double kMaxTemperatureC = 73.0;

/// Thrown when a value violates a documented precondition or type invariant.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One axis of a resonant actuator: x'' = w^2 (G u - x) - 2 zeta w x'.
struct AxisParams {
  double resonance_hz = 50.0;
  double gain = 1.0;
  double damping_ratio = 0.15;

  [[nodiscard]] double omega() const;  // rad/s
  [[nodiscard]] bool valid() const;
  friend bool operator==(const AxisParams&, const AxisParams&) = default;
};

/// Linear drift rates, fraction per degree C away from the reference temperature.
struct ThermalCoeffs {
  double resonance = -0.0015;
  double gain = 0.001;
  double damping = -0.004;
  friend bool operator==(const ThermalCoeffs&, const ThermalCoeffs&) = default;
};

struct ActuatorParams {
  int id = 0;
  AxisParams x_axis;
  AxisParams y_axis;
  double coupling_coeff = 0.05;
  ThermalCoeffs thermal;

  /// Both axes valid, coupling in [0, 0.2), and the effective parameters
  /// stay in range over the whole supported temperature span.
  [[nodiscard]] bool valid() const;
  friend bool operator==(const ActuatorParams&, const ActuatorParams&) = default;
};

/// Fractional standard deviation of manufacturing variation per parameter.
struct RelativeSpread {
  double resonance = 0.15;
  double gain = 0.15;
  double damping = 0.3;
  double coupling = 0.0;
};

struct FleetSpec {
  ActuatorParams nominal;
  RelativeSpread relative_spread;
  int n_train = 32;
  int n_test = 16;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Fleet {
  std::vector<ActuatorParams> train;
  std::vector<ActuatorParams> test;
};

/// Measured observation of an actuator: per-axis resonance (Hz) and gain.
struct RawState {
  double omega_x = 0.0;
  double gain_x = 0.0;
  double omega_y = 0.0;
  double gain_y = 0.0;

  [[nodiscard]] std::array<double, 4> as_array() const {
    return {omega_x, gain_x, omega_y, gain_y};
  }
  friend bool operator==(const RawState&, const RawState&) = default;
};

/// Draws `n_train + n_test` actuators, each parameter as
/// nominal * (1 + N(0, spread)), redrawn until the actuator is valid.
/// Train ids are 0..n_train-1 and test ids continue from n_train.
/// Throws InvalidArgument when a draw needs more than 1000 attempts.
Fleet sample_fleet(const FleetSpec& spec);

/// Applies p * (1 + k_p * (T - 25)) to resonance, gain and damping of both axes.
ActuatorParams effective_params(const ActuatorParams& actuator, double temperature_c);

/// Effective resonance and gain at `temperature_c`, each scaled by
/// (1 + N(0, noise_frac)). Draws fresh noise on every call.
RawState measure_state(const ActuatorParams& actuator, double temperature_c,
                       double noise_frac, Rng& rng);

/// Exact zero-order-hold discretisation of one axis at a fixed step.
/// state' = A state + B u for piecewise-constant drive u.
class DiscreteAxis {
 public:
  DiscreteAxis() = default;
  DiscreteAxis(const AxisParams& axis, double dt);

  [[nodiscard]] std::pair<double, double> step(double pos, double vel,
                                               double drive) const {
    return {a00_ * pos + a01_ * vel + b0_ * drive,
            a10_ * pos + a11_ * vel + b1_ * drive};
  }

  [[nodiscard]] double dt() const { return dt_; }

 private:
  double dt_ = 0.0;
  double a00_ = 1.0, a01_ = 0.0, a10_ = 0.0, a11_ = 1.0;
  double b0_ = 0.0, b1_ = 0.0;
};

struct AxisStep {
  double pos;
  double vel;
};

/// Advances one axis by `dt` with effective drive u = drive + coupling * coupled_drive.
AxisStep step_dynamics(const AxisParams& axis, double pos, double vel, double drive,
                       double coupled_drive, double coupling, double dt);

}  // namespace pidrl
