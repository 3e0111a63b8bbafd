#pragma once

#include <string>
#include <vector>

#include "pidrl/control.hpp"
#include "pidrl/mdp.hpp"

namespace pidrl {

/// Result of a relay-free ultimate-gain search on one axis.
struct UltimatePoint {
  double ku = 0.0;  // ultimate proportional gain
  double tu = 0.0;  // ultimate period, s
};

struct ZnOptions {
  double step_mm = 1.0;
  double rel_tolerance = 1e-4;  // bisection stops when the bracket is this narrow
  int periods = 10;
  double sustain_tolerance = 0.02;
  LoopConfig loop;
};

/// Amplitude growth of a P-only loop after a small step: peak-to-peak swing
/// `periods` cycles later divided by the first full swing. 0 when the
/// response is not oscillatory, +inf when the drive saturates after the first
/// swing. `period_s` receives the mean spacing of the maxima when non-null.
double oscillation_growth(const AxisParams& axis, double p, const ZnOptions& options,
                          double* period_s = nullptr);

struct ZnSeed {
  bool tunable = false;
  UltimatePoint x_ultimate;
  UltimatePoint y_ultimate;
  AxisGains x;
  AxisGains y;
};

/// Classic Ziegler-Nichols PID per axis from the ultimate point found by
/// bisection on P over (0, limit / step]. Not tunable when no sustained
/// oscillation exists in that range.
ZnSeed zn_seed(const ActuatorParams& actuator, double temperature_c,
               const ZnOptions& options = {});

/// 0.6 Ku, 1.2 Ku / Tu, 0.075 Ku Tu.
AxisGains zn_gains(const UltimatePoint& u);

/// Centre-to-corner and back for all four corners, both directions of both
/// diagonals, and the four edges traversed one way round the perimeter.
std::vector<SwitchEvent> extreme_events(const Plane& plane);

struct GridSpec {
  AxisGains centre{2.0, 500.0, 0.006};
  AxisGains span{4.0, 4.0, 4.0};  // points cover [c / span, c * span]
  int points_p = 11;
  int points_i = 11;
  int points_d = 11;
  int precision = 6;

  void validate() const;
};

/// Log-spaced values per gain kind, rounded to `precision` decimals, clamped
/// into the action bounds and de-duplicated; enumerated p-major.
std::vector<AxisGains> grid_points(const GridSpec& grid, const ActionBounds& bounds);

struct SearchSetup {
  Plane plane;
  LoopConfig loop;
  RewardSpec reward;
  double temperature_c = kReferenceTemperatureC;
  double duration_ms = 100.0;
  /// Test mean ST must be within this fraction of the train mean.
  double consistency_tolerance = 0.1;
  int workers = 1;
};

struct GridEntry {
  AxisGains gains;
  double train_mean_st_ms = 0.0;
  double test_mean_st_ms = 0.0;
  double max_os_mm = 0.0;       // over the train fleet
  bool os_ok = false;           // every train OS within the limit
  bool settled = false;         // no unsettled or diverged train switch
  bool consistent = false;
  bool viable = false;
};

struct SearchResult {
  AxisGains best;
  bool viable = false;
  std::vector<GridEntry> log;  // one entry per point, in input order
};

/// Evaluates one shared gain set over the extreme events on both fleets.
GridEntry evaluate_point(const AxisGains& gains, const std::vector<ActuatorParams>& train,
                         const std::vector<ActuatorParams>& test,
                         const SearchSetup& setup);

/// Strict ordering used to pick the winner: viable first, then lower train
/// mean ST, lower test mean ST, and lexicographic gains.
bool better_entry(const GridEntry& a, const GridEntry& b);

SearchResult grid_search(const std::vector<ActuatorParams>& train,
                         const std::vector<ActuatorParams>& test,
                         const std::vector<AxisGains>& points, const SearchSetup& setup);

}  // namespace pidrl
