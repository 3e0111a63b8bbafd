#include "pidrl/artifacts.hpp"

#include "pidrl/io.hpp"

namespace pidrl {

namespace {

using nlohmann::json;

std::string num(double v) { return format_double(v); }
std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }
std::string flag(bool b) { return b ? "1" : "0"; }

}  // namespace

std::string trace_csv(const Trace& trace) {
  CsvWriter csv({"t_ms", "x_mm", "y_mm", "target_x_mm", "target_y_mm"});
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    csv.row({num(static_cast<double>(k) * trace.dt * 1e3), num(trace.samples[k].x),
             num(trace.samples[k].y), num(trace.target.x), num(trace.target.y)});
  }
  return csv.text();
}

std::string metrics_csv(const EvalRun& run) {
  CsvWriter csv({"event_id", "actuator_id", "temperature_c", "st_x_ms", "st_y_ms", "os_x_mm",
                 "os_y_mm", "settled_x", "settled_y"});
  for (const EvalRecord& r : run.records) {
    const SwitchMetrics& m = r.metrics;
    csv.row({std::to_string(r.event_id), std::to_string(r.actuator_id), num(run.temperature_c),
             opt(m.st_x), opt(m.st_y), num(m.os_x), num(m.os_y), flag(m.st_x.has_value()),
             flag(m.st_y.has_value())});
  }
  return csv.text();
}

std::string transitions_csv(const std::vector<Transition>& transitions) {
  CsvWriter csv({"episode", "actuator_id", "s1", "s2", "s3", "s4", "a1", "a2", "a3", "a4", "a5",
                 "a6", "st_x", "st_y", "os_x", "os_y", "reward"});
  for (const Transition& t : transitions) {
    std::vector<std::string> row{std::to_string(t.episode), std::to_string(t.actuator_id)};
    for (double s : t.state) row.push_back(num(s));
    for (double a : t.action.raw) row.push_back(num(a));
    row.push_back(opt(t.metrics.st_x));
    row.push_back(opt(t.metrics.st_y));
    row.push_back(num(t.metrics.os_x));
    row.push_back(num(t.metrics.os_y));
    row.push_back(num(t.reward));
    csv.row(row);
  }
  return csv.text();
}

std::string train_log_csv(const std::vector<TrainLogRecord>& log) {
  CsvWriter csv({"batch", "episodes_seen", "mean_reward", "min_reward", "clip_fraction",
                 "policy_loss", "value_loss", "entropy"});
  for (const TrainLogRecord& r : log) {
    csv.row({std::to_string(r.batch), std::to_string(r.episodes_seen), num(r.mean_reward),
             num(r.min_reward), num(r.clip_fraction), num(r.policy_loss), num(r.value_loss),
             num(r.entropy)});
  }
  return csv.text();
}

std::string search_log_csv(const std::vector<GridEntry>& log) {
  CsvWriter csv({"p", "i", "d", "train_mean_st_ms", "test_mean_st_ms", "max_os_mm", "viable"});
  for (const GridEntry& e : log) {
    csv.row({num(e.gains.p), num(e.gains.i), num(e.gains.d), num(e.train_mean_st_ms),
             num(e.test_mean_st_ms), num(e.max_os_mm), flag(e.viable)});
  }
  return csv.text();
}

std::string events_csv(const std::vector<SwitchEvent>& events) {
  CsvWriter csv({"event_id", "source_x_mm", "source_y_mm", "dest_x_mm", "dest_y_mm"});
  for (const SwitchEvent& e : events) {
    csv.row({std::to_string(e.event_id), num(e.source.x), num(e.source.y), num(e.dest.x),
             num(e.dest.y)});
  }
  return csv.text();
}

std::vector<SwitchEvent> events_from_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  if (t.header != std::vector<std::string>{"event_id", "source_x_mm", "source_y_mm",
                                            "dest_x_mm", "dest_y_mm"})
    throw InvalidArgument("events file has an unexpected header");
  std::vector<SwitchEvent> events;
  for (const auto& r : t.rows) {
    events.push_back({std::stoi(r[0]), {std::stod(r[1]), std::stod(r[2])},
                      {std::stod(r[3]), std::stod(r[4])}});
  }
  return events;
}

std::string cdf_csv(const std::vector<CdfPoint>& curve) {
  CsvWriter csv({"t_ms", "fraction"});
  for (const CdfPoint& p : curve) csv.row({num(p.t_ms), num(p.fraction)});
  return csv.text();
}

std::string gains_csv(const std::vector<int>& actuator_ids, const std::vector<PidGains>& gains) {
  if (actuator_ids.size() != gains.size()) throw InvalidArgument("gains_csv: size mismatch");
  CsvWriter csv({"actuator_id", "p_x", "i_x", "d_x", "p_y", "i_y", "d_y"});
  for (std::size_t k = 0; k < gains.size(); ++k) {
    std::vector<std::string> row{std::to_string(actuator_ids[k])};
    for (double g : gains[k].as_array()) row.push_back(num(g));
    csv.row(row);
  }
  return csv.text();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  CsvWriter csv({"method", "temperature_c", "n", "st_mean_ms", "st_std_ms", "st_max_ms",
                 "st_fraction_ok", "unsettled", "os_mean_mm", "os_std_mm", "os_max_mm",
                 "os_fraction_ok"});
  for (const SummaryRow& r : rows) {
    const Summary& s = r.summary;
    csv.row({r.method, num(r.temperature_c), std::to_string(s.n), num(s.st_mean), num(s.st_std),
             num(s.st_max), num(s.st_fraction_ok), std::to_string(s.unsettled), num(s.os_mean),
             num(s.os_std), num(s.os_max), num(s.os_fraction_ok)});
  }
  return csv.text();
}

std::string jsd_csv(const std::vector<JsdRow>& rows) {
  CsvWriter csv({"temperature_c", "method", "jsd_vs_25"});
  for (const JsdRow& r : rows) csv.row({num(r.temperature_c), r.method, num(r.jsd_vs_25)});
  return csv.text();
}

std::string diff_csv(const std::vector<DiffRow>& rows) {
  CsvWriter csv({"temperature_c", "method", "mean", "std", "mean_abs", "n", "excluded"});
  for (const DiffRow& r : rows) {
    csv.row({num(r.temperature_c), r.method, num(r.diff.mean), num(r.diff.std),
             num(r.diff.mean_abs), std::to_string(r.diff.n), std::to_string(r.diff.excluded)});
  }
  return csv.text();
}

std::string baseline_gains_json(const BaselineGains& g) {
  json j;
  j["gains"] = {{"p", g.gains.p}, {"i", g.gains.i}, {"d", g.gains.d}};
  j["viable"] = g.viable;
  j["grid_fingerprint"] = g.grid_fingerprint;
  j["centre"] = {{"p", g.centre.p}, {"i", g.centre.i}, {"d", g.centre.d}};
  j["zn_tunable"] = g.zn_tunable;
  j["zn_total"] = g.zn_total;
  return j.dump(1) + "\n";
}

BaselineGains baseline_gains_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    BaselineGains g;
    g.gains = {j.at("gains").at("p").get<double>(), j.at("gains").at("i").get<double>(),
               j.at("gains").at("d").get<double>()};
    g.viable = j.at("viable").get<bool>();
    g.grid_fingerprint = j.at("grid_fingerprint").get<std::string>();
    g.centre = {j.at("centre").at("p").get<double>(), j.at("centre").at("i").get<double>(),
                j.at("centre").at("d").get<double>()};
    g.zn_tunable = j.at("zn_tunable").get<int>();
    g.zn_total = j.at("zn_total").get<int>();
    return g;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed baseline gains file: ") + e.what());
  }
}

std::string grid_fingerprint(const std::vector<AxisGains>& points) {
  std::string text;
  for (const AxisGains& g : points) text += num(g.p) + ',' + num(g.i) + ',' + num(g.d) + '\n';
  return sha256_hex(text);
}

ArtifactDir::ArtifactDir(std::filesystem::path dir, std::string command)
    : dir_(std::move(dir)), command_(std::move(command)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_))
    throw IoError("cannot create output directory " + dir_.string());
}

void ArtifactDir::write(const std::string& name, const std::string& content) {
  write_text_file(dir_ / name, content);
  outputs_[name] = sha256_hex(content);
}

void ArtifactDir::add_input(const std::string& name, const std::filesystem::path& path) {
  inputs_[name] = sha256_file(path);
}

void ArtifactDir::finish(const json& resolved_config, std::uint64_t seed) {
  write("config.json", resolved_config.dump(1) + "\n");
  json m;
  m["command"] = command_;
  m["seed"] = seed;
  m["config_fingerprint"] = sha256_hex(resolved_config.dump());
  m["inputs"] = inputs_;
  m["outputs"] = outputs_;
  for (const auto& [k, v] : extra_.items()) m[k] = v;
  write_text_file(dir_ / "manifest.json", m.dump(1) + "\n");
}

}  // namespace pidrl
