#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pidrl/control.hpp"
#include "pidrl/mdp.hpp"
#include "pidrl/snapshot.hpp"

namespace pidrl {

/// A trained policy (per-actuator gains) or one generic gain set.
using GainsSource = std::variant<PolicySnapshot, PidGains>;

std::string method_tag(const GainsSource& source);  // "DRL" or "DEFAULT"

/// `count` independent events drawn with `sample_event`, ids 0..count-1.
std::vector<SwitchEvent> sample_eval_events(const Plane& plane, int count, std::uint64_t seed);

/// Stable digest of an event list, used to refuse comparisons across lists.
std::string events_hash(const std::vector<SwitchEvent>& events);

struct EvalOptions {
  LoopConfig loop;
  double duration_ms = 100.0;
  double margin_mm = 0.15;
  /// Extra margins at which settling times are also recorded.
  std::vector<double> cdf_margins;
  double states_measured_at_c = kReferenceTemperatureC;
  double measurement_noise = 0.01;
  std::uint64_t seed = 0;  // measurement noise stream
  int workers = 1;
};

struct EvalRecord {
  int event_id = 0;
  int actuator_id = 0;
  PidGains gains;
  SwitchMetrics metrics;
  std::vector<AxisPair> st_at_margin;  // parallel to EvalOptions::cdf_margins
};

struct EvalRun {
  std::string method;
  double temperature_c = kReferenceTemperatureC;
  std::string events_hash;
  std::string config_fingerprint;
  std::vector<double> cdf_margins;
  std::vector<EvalRecord> records;  // event-major, then actuator in fleet order
};

/// Per-actuator gains as the given source would set them: DRL states are
/// measured once at `states_measured_at_c`, with noise drawn from a stream
/// keyed by (seed, actuator id).
std::vector<PidGains> resolve_gains(const GainsSource& source,
                                    const std::vector<ActuatorParams>& fleet,
                                    const EvalOptions& options);

/// Every event on every actuator at `temperature_c`.
EvalRun run_eval(const GainsSource& source, const std::vector<ActuatorParams>& fleet,
                 const std::vector<SwitchEvent>& events, double temperature_c,
                 const EvalOptions& options);

/// Same, with gains already resolved (one entry per fleet member).
EvalRun run_eval(const std::string& method, const std::vector<PidGains>& gains,
                 const std::vector<ActuatorParams>& fleet,
                 const std::vector<SwitchEvent>& events, double temperature_c,
                 const EvalOptions& options);

/// Pooled per-axis settling times, unsettled entries at the trace duration.
std::vector<double> st_values(const EvalRun& run);
std::vector<double> os_values(const EvalRun& run);

struct Summary {
  std::size_t n = 0;  // per-axis observations
  double st_mean = 0.0;
  double st_std = 0.0;  // population
  double st_max = 0.0;
  double st_fraction_ok = 0.0;
  std::size_t unsettled = 0;
  double os_mean = 0.0;
  double os_std = 0.0;
  double os_max = 0.0;
  double os_fraction_ok = 0.0;
};

/// Statistics over pooled per-axis values; unsettled values never count as
/// within the settling target.
Summary summarize(const EvalRun& run, double st_target_ms, double os_max_mm);

struct Histogram {
  std::vector<double> edges;
  std::vector<double> counts;
  double total = 0.0;
};

/// Equal-width bins over [lo, hi]; the last bin is closed, values outside
/// are clamped into the end bins.
Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins);

/// Jensen-Shannon distance with base-2 logarithms, in [0, 1].
double js_distance(const Histogram& a, const Histogram& b);

struct CdfPoint {
  double t_ms = 0.0;
  double fraction = 0.0;
};

/// Fraction of settling times (nullopt = never) that are <= t, per grid time.
std::vector<CdfPoint> cdf_from_settling(const std::vector<std::optional<double>>& st,
                                        const std::vector<double>& t_grid_ms);

/// Fraction of (trace, axis) pairs settled at `margin_mm` by each grid time.
std::vector<CdfPoint> cdf_in_margin(const std::vector<Trace>& traces, double margin_mm,
                                    const std::vector<double>& t_grid_ms);

/// Same, from settling times recorded in a run at cdf_margins[margin_index].
std::vector<CdfPoint> cdf_in_margin(const EvalRun& run, std::size_t margin_index,
                                    const std::vector<double>& t_grid_ms);

struct EventDiff {
  double mean = 0.0;
  double std = 0.0;
  double mean_abs = 0.0;
  std::size_t n = 0;
  std::size_t excluded = 0;  // reference ST of zero
};

/// Per (event, actuator, axis): d = (ST_other - ST_ref) / ST_ref.
EventDiff per_event_diff(const EvalRun& reference, const EvalRun& other);

struct SweepResult {
  std::vector<EvalRun> runs;  // one per temperature, in input order
  std::vector<double> jsd_vs_reference;
  std::vector<EventDiff> diff_vs_reference;
};

inline constexpr int kHistogramBins = 40;

/// Runs at every temperature with gains fixed from the reference-temperature
/// measurement, then compares each run's ST histogram and per-event times
/// against the 25 C run.
SweepResult temperature_sweep(const GainsSource& source, const std::vector<ActuatorParams>& fleet,
                              const std::vector<SwitchEvent>& events,
                              const std::vector<double>& temperatures,
                              const EvalOptions& options);

/// The same JSD used by the sweep, for two runs on one event list.
double run_js_distance(const EvalRun& a, const EvalRun& b, double duration_ms);

}  // namespace pidrl
