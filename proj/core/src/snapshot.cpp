#include "pidrl/snapshot.hpp"

#include <nlohmann/json.hpp>

#include "pidrl/io.hpp"

namespace pidrl {

namespace {

using nlohmann::json;

json mlp_to_json(const Mlp& net) {
  return {{"layer_dims", net.layer_dims()}, {"params", net.params()}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net(j.at("layer_dims").get<std::vector<int>>());
  net.set_params(j.at("params").get<std::vector<double>>());
  return net;
}

json interval_to_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

Interval interval_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("bounds entry must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string to_json_text(const PolicySnapshot& s) {
  std::vector<double> log_std(s.networks.policy.log_std.data(),
                              s.networks.policy.log_std.data() + s.networks.policy.log_std.size());
  json j;
  j["format_version"] = s.format_version;
  j["config_fingerprint"] = s.config_fingerprint;
  j["feature_scales"] = {{"frequency", s.scales.frequency}, {"gain", s.scales.gain}};
  j["action_bounds"] = {{"p", interval_to_json(s.bounds.p)},
                        {"i", interval_to_json(s.bounds.i)},
                        {"d", interval_to_json(s.bounds.d)}};
  j["policy"] = mlp_to_json(s.networks.policy.mean_net);
  j["log_std"] = log_std;
  j["value"] = mlp_to_json(s.networks.value_net);
  return j.dump(1) + "\n";
}

PolicySnapshot snapshot_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("snapshot is not valid JSON: ") + e.what());
  }
  try {
    PolicySnapshot s;
    s.format_version = j.at("format_version").get<int>();
    if (s.format_version != kSnapshotFormatVersion)
      throw InvalidArgument("unsupported snapshot format version " +
                            std::to_string(s.format_version));
    s.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    s.scales.frequency = j.at("feature_scales").at("frequency").get<double>();
    s.scales.gain = j.at("feature_scales").at("gain").get<double>();
    const json& b = j.at("action_bounds");
    s.bounds.p = interval_from_json(b.at("p"));
    s.bounds.i = interval_from_json(b.at("i"));
    s.bounds.d = interval_from_json(b.at("d"));
    s.bounds.validate();
    s.networks.policy.mean_net = mlp_from_json(j.at("policy"));
    const auto log_std = j.at("log_std").get<std::vector<double>>();
    s.networks.policy.log_std =
        Eigen::Map<const Eigen::VectorXd>(log_std.data(), static_cast<Eigen::Index>(log_std.size()));
    s.networks.value_net = mlp_from_json(j.at("value"));
    if (s.networks.policy.mean_net.output_dim() != 6 ||
        s.networks.policy.log_std.size() != 6 || s.networks.policy.mean_net.input_dim() != 4)
      throw InvalidArgument("snapshot policy must map 4 features to 6 actions");
    return s;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed snapshot: ") + e.what());
  }
}

void save_snapshot(const PolicySnapshot& snapshot, const std::filesystem::path& path) {
  write_text_file(path, to_json_text(snapshot));
}

PolicySnapshot load_snapshot(const std::filesystem::path& path) {
  return snapshot_from_json_text(read_text_file(path));
}

PidGains infer(const PolicySnapshot& snapshot, const RawState& raw) {
  const NormalizedState s = normalize_state(raw, snapshot.scales);
  const Eigen::VectorXd mu = snapshot.networks.policy.mean(to_vector(s));
  RawAction a{};
  for (int k = 0; k < 6; ++k) a[k] = mu[k];
  return map_action(a, snapshot.bounds);
}

}  // namespace pidrl
