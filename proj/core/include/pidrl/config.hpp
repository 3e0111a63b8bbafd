#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pidrl/baseline.hpp"
#include "pidrl/control.hpp"
#include "pidrl/evalkit.hpp"
#include "pidrl/mdp.hpp"
#include "pidrl/plant.hpp"
#include "pidrl/ppo.hpp"

namespace pidrl {

/// Malformed configuration: bad JSON, wrong types, unknown keys, or values
/// that fail validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainingSection {
  PpoConfig ppo;
  double temperature_c = kReferenceTemperatureC;
  double measurement_noise = 0.01;
  double episode_ms = 100.0;
};

struct BaselineSection {
  /// Grid centre; when absent the mean ZN seed over the train fleet is used.
  std::optional<AxisGains> centre;
  AxisGains span{4.0, 4.0, 4.0};
  int points_p = 11;
  int points_i = 11;
  int points_d = 11;
  int precision = 6;
  double consistency_tolerance = 0.1;
  double temperature_c = kReferenceTemperatureC;
  double duration_ms = 100.0;
  double zn_step_mm = 1.0;
};

struct EvalSection {
  int events = 100;
  std::vector<double> temperatures{kReferenceTemperatureC};
  std::vector<double> sweep_temperatures{5.0, 25.0, 35.0, 53.0, 73.0};
  std::vector<double> margins{0.15, 0.1, 0.05, 0.025};
  double duration_ms = 100.0;
  double cdf_step_ms = 0.5;
  double st_target_ms = 20.0;
  double measurement_noise = 0.01;
  double states_measured_at_c = kReferenceTemperatureC;
  /// Leading events whose traces on the first test actuator are written out.
  int trace_events = 1;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  FleetSpec fleet;  // nominal actuator, spreads, counts; its seed is derived
  LoopConfig loop;
  Plane plane;
  RewardSpec reward;
  ActionBounds bounds;
  TrainingSection training;
  BaselineSection baseline;
  EvalSection eval;
  std::string out_dir = "runs";

  void validate() const;
};

/// Parses JSON text onto the defaults. Missing keys keep their default,
/// unknown keys throw ConfigError naming the full key path.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);

/// The fully resolved configuration, every field present.
nlohmann::json config_to_json(const ExperimentConfig& config);
std::string config_fingerprint(const ExperimentConfig& config);

/// Named sub-stream of the master seed ("fleet", "training", "eval", ...).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

/// Fleet spec with its seed taken from the master seed.
FleetSpec resolved_fleet_spec(const ExperimentConfig& config);

Environment make_environment(const ExperimentConfig& config,
                             const std::vector<ActuatorParams>& train_fleet);

SearchSetup make_search_setup(const ExperimentConfig& config, int workers);
EvalOptions make_eval_options(const ExperimentConfig& config, int workers);
GridSpec make_grid(const ExperimentConfig& config, const AxisGains& centre);

}  // namespace pidrl
