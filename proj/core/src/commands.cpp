#include "pidrl/commands.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "pidrl/agent.hpp"
#include "pidrl/artifacts.hpp"
#include "pidrl/baseline.hpp"
#include "pidrl/evalkit.hpp"
#include "pidrl/io.hpp"
#include "pidrl/snapshot.hpp"

namespace pidrl {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

template <typename... Args>
void say(const RunContext& ctx, fmt::format_string<Args...> f, Args&&... args) {
  if (!ctx.quiet) fmt::print("{}\n", fmt::format(f, std::forward<Args>(args)...));
}

std::vector<ActuatorParams> read_fleet(const fs::path& dir, const char* name) {
  return load_fleet(dir / name);
}

std::string temp_tag(double t) { return format_double(t) + "C"; }

struct Stats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Stats stats_of(const std::vector<ActuatorParams>& fleet, double (*get)(const ActuatorParams&)) {
  Stats s{0.0, get(fleet.front()), get(fleet.front())};
  for (const ActuatorParams& a : fleet) {
    s.mean += get(a) / static_cast<double>(fleet.size());
    s.min = std::min(s.min, get(a));
    s.max = std::max(s.max, get(a));
  }
  return s;
}

}  // namespace

CommandOutcome cmd_fleet(const RunContext& ctx) {
  const ExperimentConfig& config = ctx.config;
  const Fleet fleet = sample_fleet(resolved_fleet_spec(config));

  ArtifactDir out(ctx.out, "fleet");
  out.write(kTrainFleetFile, fleet_to_csv(fleet.train));
  out.write(kTestFleetFile, fleet_to_csv(fleet.test));
  out.finish(config_to_json(config), config.seed);

  say(ctx, "fleet: {} train + {} test actuators -> {}", fleet.train.size(), fleet.test.size(),
      ctx.out.string());
  const std::pair<const char*, double (*)(const ActuatorParams&)> fields[] = {
      {"x resonance (Hz)", [](const ActuatorParams& a) { return a.x_axis.resonance_hz; }},
      {"x gain", [](const ActuatorParams& a) { return a.x_axis.gain; }},
      {"x damping", [](const ActuatorParams& a) { return a.x_axis.damping_ratio; }},
      {"y resonance (Hz)", [](const ActuatorParams& a) { return a.y_axis.resonance_hz; }},
      {"y gain", [](const ActuatorParams& a) { return a.y_axis.gain; }},
      {"y damping", [](const ActuatorParams& a) { return a.y_axis.damping_ratio; }},
  };
  for (const auto& [name, get] : fields) {
    const Stats tr = stats_of(fleet.train, get);
    const Stats te = stats_of(fleet.test, get);
    say(ctx, "  {:<17} train mean {:.4g} [{:.4g}, {:.4g}]  test mean {:.4g} [{:.4g}, {:.4g}]",
        name, tr.mean, tr.min, tr.max, te.mean, te.min, te.max);
  }
  return {};
}

CommandOutcome cmd_train(const RunContext& ctx, const fs::path& fleet_dir) {
  const ExperimentConfig& config = ctx.config;
  const auto train_fleet = read_fleet(fleet_dir, kTrainFleetFile);
  const Environment env = make_environment(config, train_fleet);
  PpoConfig ppo = config.training.ppo;
  ppo.workers = ctx.workers;

  const AgentTraining run = train_agent(env, ppo);
  const PolicySnapshot snapshot =
      make_snapshot(run.result.best, env, config_fingerprint(config));

  ArtifactDir out(ctx.out, "train");
  out.add_input(kTrainFleetFile, fleet_dir / kTrainFleetFile);
  out.write("snapshot.json", to_json_text(snapshot));
  out.write("train_log.csv", train_log_csv(run.result.log));
  out.write("transitions.csv", transitions_csv(run.transitions));
  out.set("converged", run.result.converged);
  out.set("episodes", run.transitions.size());
  out.set("warnings", run.result.warnings);
  out.finish(config_to_json(config), config.seed);

  const auto& log = run.result.log;
  say(ctx, "train: {} batches, {} episodes, {}", log.size(), run.transitions.size(),
      run.result.converged ? "converged" : "budget exhausted");
  if (!log.empty()) {
    const auto best = std::max_element(log.begin(), log.end(), [](const auto& a, const auto& b) {
      return a.mean_reward < b.mean_reward;
    });
    say(ctx, "  first batch mean reward {:.4f}, last {:.4f}, best {:.4f} (batch {})",
        log.front().mean_reward, log.back().mean_reward, best->mean_reward, best->batch);
  }
  for (const std::string& w : run.result.warnings) say(ctx, "  warning: {}", w);
  return {run.result.warnings};
}

CommandOutcome cmd_tune_baseline(const RunContext& ctx, const fs::path& fleet_dir) {
  const ExperimentConfig& config = ctx.config;
  const auto train_fleet = read_fleet(fleet_dir, kTrainFleetFile);
  const auto test_fleet = read_fleet(fleet_dir, kTestFleetFile);
  CommandOutcome outcome;

  BaselineGains result;
  result.zn_total = static_cast<int>(train_fleet.size());
  ZnOptions zn;
  zn.step_mm = config.baseline.zn_step_mm;
  zn.loop = config.loop;
  AxisGains zn_mean;
  for (const ActuatorParams& a : train_fleet) {
    const ZnSeed s = zn_seed(a, config.baseline.temperature_c, zn);
    if (!s.tunable) continue;
    ++result.zn_tunable;
    zn_mean.p += 0.5 * (s.x.p + s.y.p);
    zn_mean.i += 0.5 * (s.x.i + s.y.i);
    zn_mean.d += 0.5 * (s.x.d + s.y.d);
  }
  if (result.zn_tunable < result.zn_total) {
    outcome.warnings.push_back(fmt::format("{} of {} train actuators are NOT_TUNABLE",
                                           result.zn_total - result.zn_tunable, result.zn_total));
  }
  if (config.baseline.centre) {
    result.centre = *config.baseline.centre;
  } else {
    if (result.zn_tunable == 0)
      throw InvalidArgument("no train actuator is ZN tunable and no grid centre is configured");
    const double n = result.zn_tunable;
    result.centre = {zn_mean.p / n, zn_mean.i / n, zn_mean.d / n};
  }

  const auto points = grid_points(make_grid(config, result.centre), config.bounds);
  const SearchResult search =
      grid_search(train_fleet, test_fleet, points, make_search_setup(config, ctx.workers));
  result.gains = search.best;
  result.viable = search.viable;
  result.grid_fingerprint = grid_fingerprint(points);
  if (!search.viable) outcome.warnings.push_back("no viable grid point; result is NONVIABLE");

  ArtifactDir out(ctx.out, "tune-baseline");
  out.add_input(kTrainFleetFile, fleet_dir / kTrainFleetFile);
  out.add_input(kTestFleetFile, fleet_dir / kTestFleetFile);
  out.write("gains.json", baseline_gains_json(result));
  out.write("search_log.csv", search_log_csv(search.log));
  out.set("warnings", outcome.warnings);
  out.finish(config_to_json(config), config.seed);

  const auto viable = std::count_if(search.log.begin(), search.log.end(),
                                    [](const GridEntry& e) { return e.viable; });
  say(ctx, "tune-baseline: centre P {:.6g} I {:.6g} D {:.6g}; {} points, {} viable", result.centre.p,
      result.centre.i, result.centre.d, points.size(), viable);
  say(ctx, "  best P {} I {} D {} ({})", format_double(result.gains.p),
      format_double(result.gains.i), format_double(result.gains.d),
      result.viable ? "VIABLE" : "NONVIABLE");
  for (const std::string& w : outcome.warnings) say(ctx, "  warning: {}", w);
  return outcome;
}

CommandOutcome cmd_eval(const RunContext& ctx, const EvalInputs& inputs,
                        const std::vector<double>& temperatures) {
  const ExperimentConfig& config = ctx.config;
  if (!inputs.snapshot && !inputs.gains)
    throw InvalidArgument("eval needs a policy snapshot, baseline gains, or both");
  if (temperatures.empty()) throw InvalidArgument("eval needs at least one temperature");
  const auto test_fleet = read_fleet(inputs.fleet_dir, kTestFleetFile);

  ArtifactDir out(ctx.out, "eval");
  out.add_input(kTestFleetFile, inputs.fleet_dir / kTestFleetFile);
  std::vector<GainsSource> sources;
  if (inputs.snapshot) {
    sources.emplace_back(load_snapshot(*inputs.snapshot));
    out.add_input("snapshot.json", *inputs.snapshot);
  }
  if (inputs.gains) {
    const BaselineGains g = baseline_gains_from_json(read_text_file(*inputs.gains));
    sources.emplace_back(PidGains::shared(g.gains));
    out.add_input("gains.json", *inputs.gains);
  }

  const auto events =
      sample_eval_events(config.plane, config.eval.events, derive_seed(config.seed, "events"));
  const EvalOptions options = make_eval_options(config, ctx.workers);
  out.write("events.csv", events_csv(events));

  std::vector<double> t_grid;
  const auto steps = static_cast<int>(std::floor(config.eval.duration_ms / config.eval.cdf_step_ms + 1e-9));
  for (int k = 0; k <= steps; ++k) t_grid.push_back(k * config.eval.cdf_step_ms);

  CommandOutcome outcome;
  std::vector<SummaryRow> summaries;
  std::vector<JsdRow> jsd_rows;
  std::vector<DiffRow> diff_rows;
  const auto ref_it = std::find(temperatures.begin(), temperatures.end(), kReferenceTemperatureC);
  std::vector<int> ids;
  for (const ActuatorParams& a : test_fleet) ids.push_back(a.id);

  for (const GainsSource& source : sources) {
    const std::string tag = method_tag(source);
    const std::vector<PidGains> gains = resolve_gains(source, test_fleet, options);
    out.write(fmt::format("gains_{}.csv", tag), gains_csv(ids, gains));

    std::vector<EvalRun> runs;
    for (double t : temperatures) {
      EvalRun run = run_eval(tag, gains, test_fleet, events, t, options);
      run.config_fingerprint = config_fingerprint(config);
      const std::string stem = fmt::format("{}_{}", tag, temp_tag(t));
      out.write(fmt::format("metrics_{}.csv", stem), metrics_csv(run));
      for (std::size_t m = 0; m < config.eval.margins.size(); ++m) {
        out.write(fmt::format("cdf_{}_m{}.csv", stem, format_double(config.eval.margins[m])),
                  cdf_csv(cdf_in_margin(run, m, t_grid)));
      }
      const PlantModel first(test_fleet.front(), t, config.loop.dt);
      const int n_traces = std::min<int>(config.eval.trace_events, static_cast<int>(events.size()));
      for (int e = 0; e < n_traces; ++e) {
        const Trace trace =
            run_switch(first, gains.front(), events[e], config.eval.duration_ms, config.loop);
        out.write(fmt::format("trace_{}_e{}_a{}.csv", stem, events[e].event_id,
                              test_fleet.front().id),
                  trace_csv(trace));
      }
      const auto diverged = std::count_if(run.records.begin(), run.records.end(),
                                          [](const EvalRecord& r) { return r.metrics.diverged; });
      if (diverged > 0) {
        outcome.warnings.push_back(
            fmt::format("{} at {}: {} diverged switches", tag, temp_tag(t), diverged));
      }
      const Summary s = summarize(run, config.eval.st_target_ms, config.reward.l_os_mm);
      summaries.push_back({tag, t, s});
      say(ctx, "{:<7} {:>4}  mean ST {:7.3f} ms  std {:6.3f}  max {:7.3f}  <= {} ms: {:5.1f}%  "
               "max OS {:.3f} mm",
          tag, temp_tag(t), s.st_mean, s.st_std, s.st_max, format_double(config.eval.st_target_ms),
          100.0 * s.st_fraction_ok, s.os_max);
      runs.push_back(std::move(run));
    }
    if (ref_it != temperatures.end()) {
      const EvalRun& ref = runs[static_cast<std::size_t>(ref_it - temperatures.begin())];
      for (const EvalRun& run : runs) {
        jsd_rows.push_back(
            {run.temperature_c, tag, run_js_distance(ref, run, config.eval.duration_ms)});
        diff_rows.push_back({run.temperature_c, tag, per_event_diff(ref, run)});
      }
    }
  }
  out.write("summary.csv", summary_csv(summaries));
  if (ref_it != temperatures.end()) {
    out.write("jsd.csv", jsd_csv(jsd_rows));
    out.write("per_event_diff.csv", diff_csv(diff_rows));
  }
  out.set("events_hash", events_hash(events));
  out.set("temperatures", temperatures);
  out.set("warnings", outcome.warnings);
  out.finish(config_to_json(config), config.seed);
  for (const std::string& w : outcome.warnings) say(ctx, "  warning: {}", w);
  return outcome;
}

CommandOutcome cmd_report(const RunContext& ctx, const std::vector<fs::path>& runs) {
  if (runs.empty()) throw InvalidArgument("report needs at least one run directory");
  std::string hash;
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> columns;
  const std::vector<std::string> metrics = {"n",          "st_mean_ms",     "st_std_ms",
                                            "st_max_ms",  "st_fraction_ok", "unsettled",
                                            "os_max_mm",  "os_fraction_ok"};
  ArtifactDir out(ctx.out, "report");
  for (const fs::path& dir : runs) {
    const json manifest = [&] {
      try {
        return json::parse(read_text_file(dir / "manifest.json"));
      } catch (const json::exception& e) {
        throw InvalidArgument("unreadable manifest in " + dir.string() + ": " + e.what());
      }
    }();
    if (!manifest.contains("events_hash"))
      throw InvalidArgument(dir.string() + " is not an eval run directory");
    const std::string h = manifest.at("events_hash").get<std::string>();
    if (hash.empty()) hash = h;
    if (h != hash)
      throw InvalidArgument("runs were evaluated on different event lists: " + dir.string());
    out.add_input(dir.filename().string() + "/summary.csv", dir / "summary.csv");
    const CsvTable t = read_csv(dir / "summary.csv");
    for (const auto& row : t.rows) {
      labels.push_back(fmt::format("{}:{}@{}", dir.filename().string(), row[t.column("method")],
                                   temp_tag(std::stod(row[t.column("temperature_c")]))));
      std::vector<std::string> col;
      for (const std::string& m : metrics) col.push_back(row[t.column(m)]);
      columns.push_back(std::move(col));
    }
  }
  std::vector<std::string> header{"metric"};
  header.insert(header.end(), labels.begin(), labels.end());
  CsvWriter csv(header);
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    std::vector<std::string> row{metrics[m]};
    for (const auto& col : columns) row.push_back(col[m]);
    csv.row(row);
  }
  out.write("report.csv", csv.text());
  out.set("events_hash", hash);
  out.finish(config_to_json(ctx.config), ctx.config.seed);

  if (!ctx.quiet) {
    std::string line = fmt::format("{:<16}", "metric");
    for (const std::string& l : labels) line += fmt::format(" {:>24}", l);
    fmt::print("{}\n", line);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      line = fmt::format("{:<16}", metrics[m]);
      for (const auto& col : columns) line += fmt::format(" {:>24.10}", col[m]);
      fmt::print("{}\n", line);
    }
  }
  return {};
}

}  // namespace pidrl
