#include "pidrl/config.hpp"

#include <set>
#include <type_traits>

#include "pidrl/evalkit.hpp"
#include "pidrl/io.hpp"

namespace pidrl {

namespace {

using nlohmann::json;

// Reads fields from a JSON object onto existing defaults and remembers which
// keys were consumed so leftovers can be reported.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config section '" + path_ + "' must be an object");
  }

  template <typename T>
  void field(const char* key, T& out) {
    used_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      read(*it, out);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + path_ + key + "': " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("config key '" + path_ + key + "': " + e.what());
    }
  }

  template <typename Fn>
  void section(const char* key, Fn&& fn) {
    used_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    Reader sub(*it, path_ + key + ".");
    fn(sub);
    sub.finish();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.contains(key)) throw ConfigError("unknown config key '" + path_ + key + "'");
    }
  }

 private:
  template <typename T>
  static void read(const json& v, T& out) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("expected a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
          throw ConfigError("expected a non-negative integer");
      }
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("expected a number");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) throw ConfigError("expected an array of numbers");
      out.clear();
      for (const json& x : v) {
        double d = 0.0;
        read(x, d);
        out.push_back(d);
      }
    } else if constexpr (std::is_same_v<T, Interval>) {
      if (!v.is_array() || v.size() != 2) throw ConfigError("expected [lo, hi]");
      read(v[0], out.lo);
      read(v[1], out.hi);
    } else if constexpr (std::is_same_v<T, std::optional<AxisGains>>) {
      if (v.is_null()) {
        out.reset();
        return;
      }
      AxisGains g;
      Reader r(v, "");
      r.field("p", g.p);
      r.field("i", g.i);
      r.field("d", g.d);
      r.finish();
      out = g;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> used_;
};

class Writer {
 public:
  json j = json::object();

  template <typename T>
  void field(const char* key, const T& v) {
    if constexpr (std::is_same_v<T, Interval>) {
      j[key] = json::array({v.lo, v.hi});
    } else if constexpr (std::is_same_v<T, std::optional<AxisGains>>) {
      j[key] = v ? json{{"p", v->p}, {"i", v->i}, {"d", v->d}} : json(nullptr);
    } else {
      j[key] = v;
    }
  }

  template <typename Fn>
  void section(const char* key, Fn&& fn) {
    Writer sub;
    fn(sub);
    j[key] = std::move(sub.j);
  }
};

template <typename V>
void visit_axis(V& v, AxisParams& a) {
  v.field("resonance_hz", a.resonance_hz);
  v.field("gain", a.gain);
  v.field("damping_ratio", a.damping_ratio);
}

template <typename V>
void visit_gains(V& v, AxisGains& g) {
  v.field("p", g.p);
  v.field("i", g.i);
  v.field("d", g.d);
}

// One description of the layout serves both parsing and the resolved echo.
template <typename V>
void visit_config(V& v, ExperimentConfig& c) {
  v.field("seed", c.seed);
  v.section("fleet", [&](V& s) {
    s.field("n_train", c.fleet.n_train);
    s.field("n_test", c.fleet.n_test);
    s.section("relative_spread", [&](V& r) {
      r.field("resonance", c.fleet.relative_spread.resonance);
      r.field("gain", c.fleet.relative_spread.gain);
      r.field("damping", c.fleet.relative_spread.damping);
      r.field("coupling", c.fleet.relative_spread.coupling);
    });
  });
  v.section("plant", [&](V& s) {
    s.section("x_axis", [&](V& a) { visit_axis(a, c.fleet.nominal.x_axis); });
    s.section("y_axis", [&](V& a) { visit_axis(a, c.fleet.nominal.y_axis); });
    s.field("coupling_coeff", c.fleet.nominal.coupling_coeff);
  });
  v.section("thermal", [&](V& s) {
    s.field("resonance", c.fleet.nominal.thermal.resonance);
    s.field("gain", c.fleet.nominal.thermal.gain);
    s.field("damping", c.fleet.nominal.thermal.damping);
  });
  v.section("loop", [&](V& s) {
    s.field("dt", c.loop.dt);
    s.field("output_limit", c.loop.output_limit);
    s.field("latency_ticks", c.loop.latency_ticks);
    s.field("divergence_bound_mm", c.loop.divergence_bound_mm);
  });
  v.section("plane", [&](V& s) {
    s.field("rows", c.plane.rows);
    s.field("cols", c.plane.cols);
    s.field("extent_mm", c.plane.extent_mm);
  });
  v.section("reward", [&](V& s) {
    s.field("l_st_ms", c.reward.l_st_ms);
    s.field("l_os_mm", c.reward.l_os_mm);
    s.field("st_unit_ms", c.reward.st_unit_ms);
    s.field("margin_mm", c.reward.margin_mm);
  });
  v.section("action_bounds", [&](V& s) {
    s.field("p", c.bounds.p);
    s.field("i", c.bounds.i);
    s.field("d", c.bounds.d);
  });
  v.section("ppo", [&](V& s) {
    PpoConfig& p = c.training.ppo;
    s.field("clip_epsilon", p.clip_epsilon);
    s.field("learning_rate", p.learning_rate);
    s.field("batch_size", p.batch_size);
    s.field("update_epochs", p.update_epochs);
    s.field("minibatch_size", p.minibatch_size);
    s.field("entropy_coeff", p.entropy_coeff);
    s.field("value_coeff", p.value_coeff);
    s.field("max_episodes", p.max_episodes);
    s.field("convergence_window", p.convergence_window);
    s.field("convergence_tolerance", p.convergence_tolerance);
    s.field("hidden_units", p.hidden_units);
    s.field("initial_log_std", p.initial_log_std);
  });
  v.section("training", [&](V& s) {
    s.field("temperature_c", c.training.temperature_c);
    s.field("measurement_noise", c.training.measurement_noise);
    s.field("episode_ms", c.training.episode_ms);
  });
  v.section("baseline", [&](V& s) {
    BaselineSection& b = c.baseline;
    s.field("centre", b.centre);
    s.section("span", [&](V& g) { visit_gains(g, b.span); });
    s.section("points", [&](V& g) {
      g.field("p", b.points_p);
      g.field("i", b.points_i);
      g.field("d", b.points_d);
    });
    s.field("precision", b.precision);
    s.field("consistency_tolerance", b.consistency_tolerance);
    s.field("temperature_c", b.temperature_c);
    s.field("duration_ms", b.duration_ms);
    s.field("zn_step_mm", b.zn_step_mm);
  });
  v.section("eval", [&](V& s) {
    EvalSection& e = c.eval;
    s.field("events", e.events);
    s.field("temperatures", e.temperatures);
    s.field("sweep_temperatures", e.sweep_temperatures);
    s.field("margins", e.margins);
    s.field("duration_ms", e.duration_ms);
    s.field("cdf_step_ms", e.cdf_step_ms);
    s.field("st_target_ms", e.st_target_ms);
    s.field("measurement_noise", e.measurement_noise);
    s.field("states_measured_at_c", e.states_measured_at_c);
    s.field("trace_events", e.trace_events);
  });
  v.section("io", [&](V& s) { s.field("out_dir", c.out_dir); });
}

void check_temperatures(const std::vector<double>& temps, const char* what) {
  if (temps.empty()) throw ConfigError(std::string(what) + " must not be empty");
  for (double t : temps) {
    if (!(t >= kMinTemperatureC && t <= kMaxTemperatureC))
      throw ConfigError(std::string(what) + " must lie in [5, 73] C");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    resolved_fleet_spec(*this).validate();
    loop.validate();
    plane.validate();
    reward.validate();
    bounds.validate();
    training.ppo.validate();
    make_grid(*this, baseline.centre.value_or(AxisGains{1.0, 1.0, 1.0})).validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (!(training.measurement_noise >= 0.0) || !(eval.measurement_noise >= 0.0))
    throw ConfigError("measurement noise must be >= 0");
  if (!(training.episode_ms > 0.0) || !(baseline.duration_ms > 0.0) ||
      !(eval.duration_ms > 0.0))
    throw ConfigError("trace durations must be positive");
  if (!(baseline.consistency_tolerance >= 0.0))
    throw ConfigError("baseline consistency_tolerance must be >= 0");
  if (!(baseline.zn_step_mm > 0.0)) throw ConfigError("baseline zn_step_mm must be positive");
  if (eval.events < 1) throw ConfigError("eval events must be >= 1");
  if (eval.trace_events < 0) throw ConfigError("eval trace_events must be >= 0");
  if (!(eval.cdf_step_ms > 0.0) || !(eval.st_target_ms > 0.0))
    throw ConfigError("eval cdf_step_ms and st_target_ms must be positive");
  for (double m : eval.margins) {
    if (!(m > 0.0)) throw ConfigError("eval margins must be positive");
  }
  check_temperatures(eval.temperatures, "eval temperatures");
  check_temperatures(eval.sweep_temperatures, "eval sweep_temperatures");
  check_temperatures({training.temperature_c, baseline.temperature_c, eval.states_measured_at_c},
                     "section temperatures");
  if (out_dir.empty()) throw ConfigError("io out_dir must not be empty");
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig config;
  Reader reader(j, "");
  visit_config(reader, config);
  reader.finish();
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path));
}

json config_to_json(const ExperimentConfig& config) {
  ExperimentConfig copy = config;
  Writer writer;
  visit_config(writer, copy);
  return writer.j;
}

std::string config_fingerprint(const ExperimentConfig& config) {
  return sha256_hex(config_to_json(config).dump());
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
  // FNV-1a of the stream name, mixed with the master seed by splitmix64.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char ch : stream) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ull;
  }
  std::uint64_t z = master ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

FleetSpec resolved_fleet_spec(const ExperimentConfig& config) {
  FleetSpec spec = config.fleet;
  spec.seed = derive_seed(config.seed, "fleet");
  return spec;
}

Environment make_environment(const ExperimentConfig& config,
                             const std::vector<ActuatorParams>& train_fleet) {
  Environment env;
  env.train_fleet = train_fleet;
  env.plane = config.plane;
  env.bounds = config.bounds;
  env.reward = config.reward;
  env.scales = FeatureScales::order_of_magnitude(config.fleet.nominal);
  env.loop = config.loop;
  env.temperature_c = config.training.temperature_c;
  env.measurement_noise = config.training.measurement_noise;
  env.episode_ms = config.training.episode_ms;
  env.seed = derive_seed(config.seed, "training");
  return env;
}

SearchSetup make_search_setup(const ExperimentConfig& config, int workers) {
  SearchSetup s;
  s.plane = config.plane;
  s.loop = config.loop;
  s.reward = config.reward;
  s.temperature_c = config.baseline.temperature_c;
  s.duration_ms = config.baseline.duration_ms;
  s.consistency_tolerance = config.baseline.consistency_tolerance;
  s.workers = workers;
  return s;
}

EvalOptions make_eval_options(const ExperimentConfig& config, int workers) {
  EvalOptions o;
  o.loop = config.loop;
  o.duration_ms = config.eval.duration_ms;
  o.margin_mm = config.reward.margin_mm;
  o.cdf_margins = config.eval.margins;
  o.states_measured_at_c = config.eval.states_measured_at_c;
  o.measurement_noise = config.eval.measurement_noise;
  o.seed = derive_seed(config.seed, "eval");
  o.workers = workers;
  return o;
}

GridSpec make_grid(const ExperimentConfig& config, const AxisGains& centre) {
  GridSpec g;
  g.centre = centre;
  g.span = config.baseline.span;
  g.points_p = config.baseline.points_p;
  g.points_i = config.baseline.points_i;
  g.points_d = config.baseline.points_d;
  g.precision = config.baseline.precision;
  return g;
}

}  // namespace pidrl
