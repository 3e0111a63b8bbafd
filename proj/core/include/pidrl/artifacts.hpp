#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pidrl/baseline.hpp"
#include "pidrl/control.hpp"
#include "pidrl/evalkit.hpp"
#include "pidrl/mdp.hpp"
#include "pidrl/ppo.hpp"

namespace pidrl {

// CSV documents with fixed column order. Numbers use the shortest
// round-trip form so identical runs produce identical bytes.

std::string trace_csv(const Trace& trace);
std::string metrics_csv(const EvalRun& run);
std::string transitions_csv(const std::vector<Transition>& transitions);
std::string train_log_csv(const std::vector<TrainLogRecord>& log);
std::string search_log_csv(const std::vector<GridEntry>& log);
std::string events_csv(const std::vector<SwitchEvent>& events);
std::vector<SwitchEvent> events_from_csv(std::string_view text);
std::string cdf_csv(const std::vector<CdfPoint>& curve);
std::string gains_csv(const std::vector<int>& actuator_ids, const std::vector<PidGains>& gains);

struct SummaryRow {
  std::string method;
  double temperature_c = kReferenceTemperatureC;
  Summary summary;
};
std::string summary_csv(const std::vector<SummaryRow>& rows);

struct JsdRow {
  double temperature_c = 0.0;
  std::string method;
  double jsd_vs_25 = 0.0;
};
std::string jsd_csv(const std::vector<JsdRow>& rows);

struct DiffRow {
  double temperature_c = 0.0;
  std::string method;
  EventDiff diff;
};
std::string diff_csv(const std::vector<DiffRow>& rows);

/// Baseline result file: the generic gains, viability and grid fingerprint.
struct BaselineGains {
  AxisGains gains;
  bool viable = false;
  std::string grid_fingerprint;
  AxisGains centre;
  int zn_tunable = 0;
  int zn_total = 0;
};
std::string baseline_gains_json(const BaselineGains& g);
BaselineGains baseline_gains_from_json(const std::string& text);
std::string grid_fingerprint(const std::vector<AxisGains>& points);

/// Collects the files written into one output directory and emits a
/// manifest with their hashes, the inputs' hashes, the seed and the
/// resolved config.
class ArtifactDir {
 public:
  ArtifactDir(std::filesystem::path dir, std::string command);

  void write(const std::string& name, const std::string& content);
  void add_input(const std::string& name, const std::filesystem::path& path);
  void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }
  /// Writes config.json and manifest.json; call once, last.
  void finish(const nlohmann::json& resolved_config, std::uint64_t seed);

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::string command_;
  std::map<std::string, std::string> outputs_;
  std::map<std::string, std::string> inputs_;
  nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace pidrl
