#include "pidrl/evalkit.hpp"

#include <algorithm>
#include <cmath>

#include "pidrl/io.hpp"
#include "pidrl/parallel.hpp"

namespace pidrl {

std::string method_tag(const GainsSource& source) {
  return std::holds_alternative<PolicySnapshot>(source) ? "DRL" : "DEFAULT";
}

std::vector<SwitchEvent> sample_eval_events(const Plane& plane, int count, std::uint64_t seed) {
  plane.validate();
  if (count < 1) throw InvalidArgument("event count must be positive");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x6576616cu};
  Rng rng(seq);
  std::vector<SwitchEvent> events;
  events.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) events.push_back(sample_event(plane, rng, k));
  return events;
}

std::string events_hash(const std::vector<SwitchEvent>& events) {
  std::string text;
  for (const SwitchEvent& e : events) {
    text += std::to_string(e.event_id) + ',' + format_double(e.source.x) + ',' +
            format_double(e.source.y) + ',' + format_double(e.dest.x) + ',' +
            format_double(e.dest.y) + '\n';
  }
  return sha256_hex(text);
}

std::vector<PidGains> resolve_gains(const GainsSource& source,
                                    const std::vector<ActuatorParams>& fleet,
                                    const EvalOptions& options) {
  std::vector<PidGains> gains;
  gains.reserve(fleet.size());
  if (const auto* generic = std::get_if<PidGains>(&source)) {
    gains.assign(fleet.size(), *generic);
    return gains;
  }
  const auto& snapshot = std::get<PolicySnapshot>(source);
  for (const ActuatorParams& a : fleet) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                      static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(a.id), 0x6d656173u};
    Rng rng(seq);
    const RawState raw =
        measure_state(a, options.states_measured_at_c, options.measurement_noise, rng);
    gains.push_back(infer(snapshot, raw));
  }
  return gains;
}

EvalRun run_eval(const std::string& method, const std::vector<PidGains>& gains,
                 const std::vector<ActuatorParams>& fleet,
                 const std::vector<SwitchEvent>& events, double temperature_c,
                 const EvalOptions& options) {
  if (fleet.empty() || events.empty()) throw InvalidArgument("run_eval needs actuators and events");
  if (gains.size() != fleet.size()) throw InvalidArgument("run_eval: one gain set per actuator");
  options.loop.validate();
  for (double m : options.cdf_margins) {
    if (!(m > 0.0)) throw InvalidArgument("cdf margins must be positive");
  }

  std::vector<PlantModel> plants;
  plants.reserve(fleet.size());
  for (const ActuatorParams& a : fleet) plants.emplace_back(a, temperature_c, options.loop.dt);

  EvalRun run;
  run.method = method;
  run.temperature_c = temperature_c;
  run.events_hash = events_hash(events);
  run.cdf_margins = options.cdf_margins;
  run.records.resize(events.size() * fleet.size());
  parallel_for(run.records.size(), options.workers, [&](std::size_t k) {
    const std::size_t e = k / fleet.size();
    const std::size_t a = k % fleet.size();
    const Trace trace =
        run_switch(plants[a], gains[a], events[e], options.duration_ms, options.loop);
    EvalRecord& rec = run.records[k];
    rec.event_id = events[e].event_id;
    rec.actuator_id = fleet[a].id;
    rec.gains = gains[a];
    rec.metrics = measure_switch(trace, options.margin_mm);
    for (double m : options.cdf_margins) rec.st_at_margin.push_back(settling_time(trace, m));
  });
  return run;
}

EvalRun run_eval(const GainsSource& source, const std::vector<ActuatorParams>& fleet,
                 const std::vector<SwitchEvent>& events, double temperature_c,
                 const EvalOptions& options) {
  return run_eval(method_tag(source), resolve_gains(source, fleet, options), fleet, events,
                  temperature_c, options);
}

std::vector<double> st_values(const EvalRun& run) {
  std::vector<double> v;
  v.reserve(2 * run.records.size());
  for (const EvalRecord& r : run.records) {
    v.push_back(r.metrics.st_x_or_duration());
    v.push_back(r.metrics.st_y_or_duration());
  }
  return v;
}

std::vector<double> os_values(const EvalRun& run) {
  std::vector<double> v;
  v.reserve(2 * run.records.size());
  for (const EvalRecord& r : run.records) {
    v.push_back(r.metrics.os_x);
    v.push_back(r.metrics.os_y);
  }
  return v;
}

namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
  double max = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(v.size()));
  m.max = *std::max_element(v.begin(), v.end());
  return m;
}

}  // namespace

Summary summarize(const EvalRun& run, double st_target_ms, double os_max_mm) {
  if (run.records.empty()) throw InvalidArgument("summarize: empty run");
  Summary s;
  const auto st = st_values(run);
  const auto os = os_values(run);
  s.n = st.size();
  const Moments ms = moments(st);
  s.st_mean = ms.mean;
  s.st_std = ms.std;
  s.st_max = ms.max;
  const Moments mo = moments(os);
  s.os_mean = mo.mean;
  s.os_std = mo.std;
  s.os_max = mo.max;

  std::size_t st_ok = 0;
  std::size_t os_ok = 0;
  for (const EvalRecord& r : run.records) {
    for (const auto& axis : {r.metrics.st_x, r.metrics.st_y}) {
      if (!axis) {
        ++s.unsettled;
      } else if (*axis <= st_target_ms) {
        ++st_ok;
      }
    }
    os_ok += (r.metrics.os_x <= os_max_mm ? 1 : 0) + (r.metrics.os_y <= os_max_mm ? 1 : 0);
  }
  s.st_fraction_ok = static_cast<double>(st_ok) / static_cast<double>(s.n);
  s.os_fraction_ok = static_cast<double>(os_ok) / static_cast<double>(s.n);
  return s;
}

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins) {
  if (bins < 1 || !(hi > lo)) throw InvalidArgument("histogram needs bins >= 1 and hi > lo");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) h.edges[k] = lo + (hi - lo) * k / bins;
  h.counts.assign(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("histogram value is not finite");
    auto k = static_cast<long>(std::floor((v - lo) / (hi - lo) * bins));
    k = std::clamp<long>(k, 0, bins - 1);
    h.counts[static_cast<std::size_t>(k)] += 1.0;
  }
  h.total = static_cast<double>(values.size());
  return h;
}

double js_distance(const Histogram& a, const Histogram& b) {
  if (a.edges != b.edges || a.counts.size() != b.counts.size())
    throw InvalidArgument("js_distance: histograms have different bins");
  if (!(a.total > 0.0) || !(b.total > 0.0)) throw InvalidArgument("js_distance: empty histogram");
  double divergence = 0.0;
  for (std::size_t k = 0; k < a.counts.size(); ++k) {
    const double p = a.counts[k] / a.total;
    const double q = b.counts[k] / b.total;
    const double m = 0.5 * (p + q);
    // Pairwise so that swapping the arguments is exact.
    const double tp = p > 0.0 ? p * std::log2(p / m) : 0.0;
    const double tq = q > 0.0 ? q * std::log2(q / m) : 0.0;
    divergence += 0.5 * (tp + tq);
  }
  return std::sqrt(std::clamp(divergence, 0.0, 1.0));
}

std::vector<CdfPoint> cdf_from_settling(const std::vector<std::optional<double>>& st,
                                        const std::vector<double>& t_grid_ms) {
  if (st.empty()) throw InvalidArgument("cdf needs at least one settling time");
  std::vector<double> settled;
  for (const auto& s : st) {
    if (s) settled.push_back(*s);
  }
  std::sort(settled.begin(), settled.end());
  std::vector<CdfPoint> curve;
  curve.reserve(t_grid_ms.size());
  for (double t : t_grid_ms) {
    const auto count = std::upper_bound(settled.begin(), settled.end(), t) - settled.begin();
    curve.push_back({t, static_cast<double>(count) / static_cast<double>(st.size())});
  }
  return curve;
}

namespace {

void check_grid(const std::vector<double>& t_grid_ms, double duration_ms) {
  for (double t : t_grid_ms) {
    if (t > duration_ms + 1e-9) throw InvalidArgument("cdf time grid exceeds trace duration");
  }
}

}  // namespace

std::vector<CdfPoint> cdf_in_margin(const std::vector<Trace>& traces, double margin_mm,
                                    const std::vector<double>& t_grid_ms) {
  std::vector<std::optional<double>> st;
  for (const Trace& trace : traces) {
    check_grid(t_grid_ms, trace.duration_ms());
    const AxisPair p = settling_time(trace, margin_mm);
    st.push_back(p.x);
    st.push_back(p.y);
  }
  return cdf_from_settling(st, t_grid_ms);
}

std::vector<CdfPoint> cdf_in_margin(const EvalRun& run, std::size_t margin_index,
                                    const std::vector<double>& t_grid_ms) {
  if (margin_index >= run.cdf_margins.size()) throw InvalidArgument("cdf margin index out of range");
  std::vector<std::optional<double>> st;
  for (const EvalRecord& r : run.records) {
    check_grid(t_grid_ms, r.metrics.duration_ms);
    st.push_back(r.st_at_margin[margin_index].x);
    st.push_back(r.st_at_margin[margin_index].y);
  }
  return cdf_from_settling(st, t_grid_ms);
}

namespace {

void require_same_events(const EvalRun& a, const EvalRun& b) {
  bool same = a.events_hash == b.events_hash && a.records.size() == b.records.size();
  for (std::size_t k = 0; same && k < a.records.size(); ++k) {
    same = a.records[k].event_id == b.records[k].event_id &&
           a.records[k].actuator_id == b.records[k].actuator_id;
  }
  if (!same) throw InvalidArgument("runs were evaluated on different event lists");
}

}  // namespace

EventDiff per_event_diff(const EvalRun& reference, const EvalRun& other) {
  require_same_events(reference, other);
  std::vector<double> d;
  EventDiff out;
  for (std::size_t k = 0; k < reference.records.size(); ++k) {
    const SwitchMetrics& r = reference.records[k].metrics;
    const SwitchMetrics& o = other.records[k].metrics;
    const std::pair<double, double> axes[] = {{r.st_x_or_duration(), o.st_x_or_duration()},
                                              {r.st_y_or_duration(), o.st_y_or_duration()}};
    for (const auto& [ref, oth] : axes) {
      if (ref == 0.0) {
        ++out.excluded;
        continue;
      }
      d.push_back((oth - ref) / ref);
    }
  }
  out.n = d.size();
  if (d.empty()) return out;
  const Moments m = moments(d);
  out.mean = m.mean;
  out.std = m.std;
  for (double x : d) out.mean_abs += std::abs(x);
  out.mean_abs /= static_cast<double>(d.size());
  return out;
}

double run_js_distance(const EvalRun& a, const EvalRun& b, double duration_ms) {
  require_same_events(a, b);
  return js_distance(make_histogram(st_values(a), 0.0, duration_ms, kHistogramBins),
                     make_histogram(st_values(b), 0.0, duration_ms, kHistogramBins));
}

SweepResult temperature_sweep(const GainsSource& source, const std::vector<ActuatorParams>& fleet,
                              const std::vector<SwitchEvent>& events,
                              const std::vector<double>& temperatures,
                              const EvalOptions& options) {
  const auto ref = std::find(temperatures.begin(), temperatures.end(), kReferenceTemperatureC);
  if (ref == temperatures.end()) throw InvalidArgument("temperature sweep must include 25 C");
  const std::vector<PidGains> gains = resolve_gains(source, fleet, options);
  SweepResult out;
  for (double t : temperatures) {
    out.runs.push_back(run_eval(method_tag(source), gains, fleet, events, t, options));
  }
  const EvalRun& reference = out.runs[static_cast<std::size_t>(ref - temperatures.begin())];
  for (const EvalRun& run : out.runs) {
    out.jsd_vs_reference.push_back(run_js_distance(reference, run, options.duration_ms));
    out.diff_vs_reference.push_back(per_event_diff(reference, run));
  }
  return out;
}

}  // namespace pidrl
