#include "pidrl/baseline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <tuple>

#include "pidrl/parallel.hpp"

namespace pidrl {

double oscillation_growth(const AxisParams& axis, double p, const ZnOptions& options,
                          double* period_s) {
  const LoopConfig& loop = options.loop;
  const DiscreteAxis plant(axis, loop.dt);
  const double target = options.step_mm;
  const AxisGains gains{p, 0.0, 0.0};
  const std::size_t needed = static_cast<std::size_t>(options.periods) + 3;
  const auto max_ticks = static_cast<std::size_t>(std::llround(4.0 / loop.dt));

  std::vector<double> delay(static_cast<std::size_t>(loop.latency_ticks), 0.0);
  std::size_t head = 0;
  PidState state{0.0, target};
  double pos = 0.0;
  double vel = 0.0;
  double prev = 0.0;
  double prev2 = 0.0;
  std::vector<std::size_t> maxima_at;
  std::vector<double> maxima;
  std::vector<double> minima;  // minimum since the latest maximum
  double running_min = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < max_ticks && maxima.size() < needed; ++k) {
    const PidOutput out = pid_step(gains, target - pos, state, loop.dt, loop.output_limit);
    state = out.state;
    if (!maxima.empty() && std::abs(out.drive) >= loop.output_limit) {
      if (period_s) *period_s = 0.0;
      return std::numeric_limits<double>::infinity();
    }
    double applied = out.drive;
    if (!delay.empty()) {
      applied = delay[head];
      delay[head] = out.drive;
      head = (head + 1) % delay.size();
    }
    prev2 = prev;
    prev = pos;
    std::tie(pos, vel) = plant.step(pos, vel, applied);
    if (!std::isfinite(pos)) return std::numeric_limits<double>::infinity();

    running_min = std::min(running_min, pos);
    // prev is a local maximum when it rose from prev2 and pos does not exceed it.
    if (k >= 2 && prev > prev2 && prev >= pos) {
      if (!maxima.empty()) minima.push_back(running_min);
      maxima.push_back(prev);
      maxima_at.push_back(k - 1);
      running_min = pos;
    }
  }
  if (maxima.size() < needed) return 0.0;

  // Cycle j spans maxima j..j+1; cycle 0 carries the step transient.
  const auto swing = [&](std::size_t j) { return maxima[j] - minima[j]; };
  const std::size_t first = 1;
  const std::size_t last = first + static_cast<std::size_t>(options.periods);
  const double a0 = swing(first);
  if (!(a0 > 1e-12 * options.step_mm)) return 0.0;
  if (period_s) {
    *period_s = static_cast<double>(maxima_at[last] - maxima_at[first]) * loop.dt /
                static_cast<double>(options.periods);
  }
  return swing(last) / a0;
}

AxisGains zn_gains(const UltimatePoint& u) {
  return {0.6 * u.ku, 1.2 * u.ku / u.tu, 0.075 * u.ku * u.tu};
}

namespace {

bool ultimate_point(const AxisParams& axis, const ZnOptions& options, UltimatePoint& out) {
  double lo = 0.0;
  double hi = options.loop.output_limit / options.step_mm;
  if (oscillation_growth(axis, hi, options) < 1.0) return false;
  while (hi - lo > options.rel_tolerance * hi) {
    const double mid = 0.5 * (lo + hi);
    if (oscillation_growth(axis, mid, options) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double ku = 0.5 * (lo + hi);
  double period = 0.0;
  const double growth = oscillation_growth(axis, ku, options, &period);
  if (!(std::abs(growth - 1.0) <= options.sustain_tolerance) || !(period > 0.0)) return false;
  out = {ku, period};
  return true;
}

}  // namespace

ZnSeed zn_seed(const ActuatorParams& actuator, double temperature_c, const ZnOptions& options) {
  options.loop.validate();
  if (!(options.step_mm > 0.0) || options.periods < 1)
    throw InvalidArgument("zn_seed: step and period count must be positive");
  const ActuatorParams eff = effective_params(actuator, temperature_c);
  ZnSeed seed;
  seed.tunable = ultimate_point(eff.x_axis, options, seed.x_ultimate) &&
                 ultimate_point(eff.y_axis, options, seed.y_ultimate);
  if (seed.tunable) {
    seed.x = zn_gains(seed.x_ultimate);
    seed.y = zn_gains(seed.y_ultimate);
  }
  return seed;
}

std::vector<SwitchEvent> extreme_events(const Plane& plane) {
  plane.validate();
  if (plane.rows < 3 || plane.cols < 3)
    throw InvalidArgument("extreme_events: plane needs at least 3 rows and 3 cols");
  const int r1 = plane.rows - 1;
  const int c1 = plane.cols - 1;
  const Point2 centre = plane.position(r1 / 2, c1 / 2);
  // Corners in order round the perimeter.
  const std::array<Point2, 4> corner = {plane.position(0, 0), plane.position(0, c1),
                                        plane.position(r1, c1), plane.position(r1, 0)};
  std::vector<SwitchEvent> events;
  const auto add = [&](Point2 a, Point2 b) {
    events.push_back({static_cast<int>(events.size()), a, b});
  };
  for (const Point2& c : corner) add(centre, c);
  for (const Point2& c : corner) add(c, centre);
  for (int k = 0; k < 4; ++k) add(corner[k], corner[(k + 2) % 4]);
  for (int k = 0; k < 4; ++k) add(corner[k], corner[(k + 1) % 4]);
  return events;
}

void GridSpec::validate() const {
  for (double c : {centre.p, centre.i, centre.d}) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("grid centres must be positive");
  }
  for (double s : {span.p, span.i, span.d}) {
    if (!(s >= 1.0) || !std::isfinite(s)) throw InvalidArgument("grid spans must be >= 1");
  }
  if (points_p < 1 || points_i < 1 || points_d < 1)
    throw InvalidArgument("grid needs at least one point per dimension");
  if (precision < 0 || precision > 12) throw InvalidArgument("grid precision must be in [0, 12]");
}

namespace {

std::vector<double> axis_values(double centre, double span, int n, int precision,
                                const Interval& bounds) {
  const double scale = std::pow(10.0, precision);
  std::vector<double> values;
  for (int k = 0; k < n; ++k) {
    const double frac = n == 1 ? 0.5 : static_cast<double>(k) / (n - 1);
    double v = centre * std::pow(span, 2.0 * frac - 1.0);
    v = std::round(v * scale) / scale;
    v = std::clamp(v, bounds.lo, bounds.hi);
    if (values.empty() || v != values.back()) values.push_back(v);
  }
  return values;
}

}  // namespace

std::vector<AxisGains> grid_points(const GridSpec& grid, const ActionBounds& bounds) {
  grid.validate();
  bounds.validate();
  const auto ps = axis_values(grid.centre.p, grid.span.p, grid.points_p, grid.precision, bounds.p);
  const auto is = axis_values(grid.centre.i, grid.span.i, grid.points_i, grid.precision, bounds.i);
  const auto ds = axis_values(grid.centre.d, grid.span.d, grid.points_d, grid.precision, bounds.d);
  std::vector<AxisGains> points;
  points.reserve(ps.size() * is.size() * ds.size());
  for (double p : ps) {
    for (double i : is) {
      for (double d : ds) points.push_back({p, i, d});
    }
  }
  return points;
}

namespace {

struct FleetStats {
  double mean_st = 0.0;
  double max_os = 0.0;
  bool settled = true;
};

FleetStats run_fleet(const AxisGains& gains, const std::vector<PlantModel>& plants,
                     const std::vector<SwitchEvent>& events, const SearchSetup& setup) {
  FleetStats stats;
  const PidGains shared = PidGains::shared(gains);
  double sum = 0.0;
  std::size_t count = 0;
  for (const PlantModel& plant : plants) {
    for (const SwitchEvent& e : events) {
      const Trace trace = run_switch(plant, shared, e, setup.duration_ms, setup.loop);
      const SwitchMetrics m = measure_switch(trace, setup.reward.margin_mm);
      sum += m.st_x_or_duration() + m.st_y_or_duration();
      count += 2;
      stats.max_os = std::max({stats.max_os, m.os_x, m.os_y});
      if (m.diverged || !m.st_x || !m.st_y) stats.settled = false;
    }
  }
  stats.mean_st = sum / static_cast<double>(count);
  return stats;
}

std::vector<PlantModel> build_plants(const std::vector<ActuatorParams>& fleet,
                                     const SearchSetup& setup) {
  std::vector<PlantModel> plants;
  plants.reserve(fleet.size());
  for (const ActuatorParams& a : fleet) plants.emplace_back(a, setup.temperature_c, setup.loop.dt);
  return plants;
}

GridEntry evaluate_on(const AxisGains& gains, const std::vector<PlantModel>& train,
                      const std::vector<PlantModel>& test,
                      const std::vector<SwitchEvent>& events, const SearchSetup& setup) {
  const FleetStats tr = run_fleet(gains, train, events, setup);
  const FleetStats te = run_fleet(gains, test, events, setup);
  GridEntry entry;
  entry.gains = gains;
  entry.train_mean_st_ms = tr.mean_st;
  entry.test_mean_st_ms = te.mean_st;
  entry.max_os_mm = tr.max_os;
  entry.os_ok = tr.max_os <= setup.reward.l_os_mm;
  entry.settled = tr.settled;
  entry.consistent =
      std::abs(te.mean_st - tr.mean_st) <= setup.consistency_tolerance * tr.mean_st;
  entry.viable = entry.os_ok && entry.settled && entry.consistent;
  return entry;
}

void check_setup(const std::vector<ActuatorParams>& train, const std::vector<ActuatorParams>& test,
                 const SearchSetup& setup) {
  if (train.empty() || test.empty()) throw InvalidArgument("grid search needs both fleets");
  setup.loop.validate();
  setup.reward.validate();
  if (!(setup.duration_ms > 0.0)) throw InvalidArgument("grid search duration must be positive");
  if (!(setup.consistency_tolerance >= 0.0))
    throw InvalidArgument("consistency tolerance must be >= 0");
}

}  // namespace

GridEntry evaluate_point(const AxisGains& gains, const std::vector<ActuatorParams>& train,
                         const std::vector<ActuatorParams>& test, const SearchSetup& setup) {
  check_setup(train, test, setup);
  return evaluate_on(gains, build_plants(train, setup), build_plants(test, setup),
                     extreme_events(setup.plane), setup);
}

bool better_entry(const GridEntry& a, const GridEntry& b) {
  const auto key = [](const GridEntry& e) {
    return std::make_tuple(!e.viable, !e.os_ok, !e.settled, !e.consistent, e.train_mean_st_ms,
                           e.test_mean_st_ms, e.gains.p, e.gains.i, e.gains.d);
  };
  return key(a) < key(b);
}

SearchResult grid_search(const std::vector<ActuatorParams>& train,
                         const std::vector<ActuatorParams>& test,
                         const std::vector<AxisGains>& points, const SearchSetup& setup) {
  check_setup(train, test, setup);
  if (points.empty()) throw InvalidArgument("grid search needs at least one point");
  const auto train_plants = build_plants(train, setup);
  const auto test_plants = build_plants(test, setup);
  const auto events = extreme_events(setup.plane);

  SearchResult result;
  result.log.resize(points.size());
  parallel_for(points.size(), setup.workers, [&](std::size_t k) {
    result.log[k] = evaluate_on(points[k], train_plants, test_plants, events, setup);
  });
  const GridEntry& best = *std::min_element(result.log.begin(), result.log.end(), better_entry);
  result.best = best.gains;
  result.viable = best.viable;
  return result;
}

}  // namespace pidrl
