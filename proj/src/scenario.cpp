#include "ofdmest/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <type_traits>

namespace ofdmest {

namespace {

using nlohmann::json;

// Typed access to one JSON object that rejects unknown keys.
class Fields {
 public:
  Fields(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(name("") + ": expected a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) { return j_.at(key); }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(name(key) + ": expected true or false");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(name(key) + ": expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError(name(key) + ": expected a non-negative integer");
      out = v.get<T>();
    } else {
      if (!v.is_number()) throw ConfigError(name(key) + ": expected a number");
      out = v.get<T>();
      if (!std::isfinite(static_cast<double>(out))) throw ConfigError(name(key) + ": must be finite");
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(name(it.key()) + ": unknown field");
    }
  }

 private:
  std::string name(const std::string& key) const {
    if (prefix_.empty()) return key.empty() ? std::string("config") : key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }

  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

Vec2 point_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(field + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

SystemConfig system_from_json(const json& j) {
  SystemConfig s;
  Fields f(j, "system");
  f.read("n_subcarriers", s.n_subcarriers);
  f.read("n_symbols", s.n_symbols);
  f.read("n_rx", s.n_rx);
  f.read("n_tx", s.n_tx);
  f.read("subcarrier_spacing", s.subcarrier_spacing);
  f.read("symbol_time", s.symbol_time);
  f.read("carrier_freq", s.carrier_freq);
  f.read("noise_var", s.noise_var);
  f.read("tx_power", s.tx_power);
  f.finish();
  return s;
}

OptimizerConfig optimizer_from_json(const json& j) {
  OptimizerConfig o;
  Fields f(j, "optimizer");
  f.read("max_paths", o.max_paths);
  f.read("max_iterations", o.max_iterations);
  f.read("eps_var", o.eps_var);
  f.read("eps_obj", o.eps_obj);
  f.read("eps_paths", o.eps_paths);
  f.read("momentum_init", o.momentum_init);
  f.read("momentum_decay", o.momentum_decay);
  f.read("sor_base", o.sor_base);
  f.read("sor_amp", o.sor_amp);
  f.read("sor_tau", o.sor_tau);
  f.finish();
  return o;
}

Offsets offsets_from_json(const json& j) {
  Offsets o;
  Fields f(j, "offsets");
  f.read("tau_o", o.tau_o);
  f.read("f_o", o.f_o);
  f.finish();
  return o;
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  Fields f(j, "trajectory");
  if (f.has("waypoints")) {
    const json& w = f.raw("waypoints");
    if (!w.is_array()) throw ConfigError("trajectory.waypoints: expected an array of [x, y]");
    t.waypoints.clear();
    for (std::size_t i = 0; i < w.size(); ++i) {
      t.waypoints.push_back(point_from_json(w[i], "trajectory.waypoints[" + std::to_string(i) + "]"));
    }
  }
  f.read("duration", t.duration);
  f.read("rounds", t.rounds);
  f.read("orientation", t.orientation);
  f.finish();
  return t;
}

json point_to_json(Vec2 v) { return json::array({v.x, v.y}); }

template <class Fn>
void rethrow_as_config(const std::string& prefix, Fn&& fn) {
  try {
    fn();
  } catch (const DomainError& e) {
    throw ConfigError(prefix + e.what());
  }
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::single: return "single";
    case ExperimentKind::ensemble: return "ensemble";
    case ExperimentKind::sequential: return "sequential";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view s) {
  if (s == "single") return ExperimentKind::single;
  if (s == "ensemble") return ExperimentKind::ensemble;
  if (s == "sequential") return ExperimentKind::sequential;
  throw ConfigError("kind: expected one of single, ensemble, sequential (got '" + std::string(s) + "')");
}

void Trajectory::validate() const {
  if (waypoints.empty()) throw ConfigError("trajectory.waypoints: at least one waypoint required");
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (!std::isfinite(waypoints[i].x) || !std::isfinite(waypoints[i].y)) {
      throw ConfigError("trajectory.waypoints[" + std::to_string(i) + "]: must be finite");
    }
  }
  if (!(duration > 0)) throw ConfigError("trajectory.duration: must be > 0");
  if (rounds < 1) throw ConfigError("trajectory.rounds: must be >= 1");
  if (!std::isfinite(orientation)) throw ConfigError("trajectory.orientation: must be finite");
}

double Trajectory::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) total += norm(waypoints[i] - waypoints[i - 1]);
  return total;
}

Pose Trajectory::pose_at(double s) const {
  Pose p{waypoints.front(), orientation};
  const double total = length();
  if (total == 0.0) return p;
  double travel = std::clamp(s / duration, 0.0, 1.0) * total;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Vec2 seg = waypoints[i] - waypoints[i - 1];
    const double len = norm(seg);
    if (travel <= len || i + 1 == waypoints.size()) {
      const double frac = len > 0 ? std::min(travel / len, 1.0) : 0.0;
      p.position = waypoints[i - 1] + frac * seg;
      return p;
    }
    travel -= len;
  }
  p.position = waypoints.back();
  return p;
}

Vec2 Trajectory::velocity_at(double s) const {
  const double total = length();
  if (total == 0.0) return {};
  const double speed = total / duration;
  double travel = std::clamp(s / duration, 0.0, 1.0) * total;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Vec2 seg = waypoints[i] - waypoints[i - 1];
    const double len = norm(seg);
    if (len > 0 && (travel < len || i + 1 == waypoints.size())) return (speed / len) * seg;
    travel -= len;
  }
  return {};
}

double Trajectory::round_time(std::size_t r) const {
  return duration * static_cast<double>(r) / static_cast<double>(rounds);
}

void ScenarioConfig::validate() const {
  rethrow_as_config("system.", [&] { system.validate(); });
  rethrow_as_config("", [&] { optimizer.validate(); });
  rethrow_as_config("environment.", [&] { environment.validate(); });
  if (!std::isfinite(offsets.tau_o)) throw ConfigError("offsets.tau_o: must be finite");
  if (!std::isfinite(offsets.f_o)) throw ConfigError("offsets.f_o: must be finite");
  if (ensemble_size < 1) throw ConfigError("ensemble_size: must be >= 1");
  trajectory.validate();
  if (!(gate > 0)) throw ConfigError("gate: must be > 0");
  if (!(prior_variance > 0)) throw ConfigError("prior_variance: must be > 0");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

ScenarioConfig scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  ScenarioConfig cfg;
  Fields f(j, "");
  if (f.has("kind")) {
    if (!f.raw("kind").is_string()) throw ConfigError("kind: expected a string");
    cfg.kind = experiment_kind_from_string(f.raw("kind").get<std::string>());
  }
  if (f.has("system")) cfg.system = system_from_json(f.raw("system"));
  if (f.has("optimizer")) cfg.optimizer = optimizer_from_json(f.raw("optimizer"));
  if (f.has("offsets")) cfg.offsets = offsets_from_json(f.raw("offsets"));
  if (f.has("trajectory")) cfg.trajectory = trajectory_from_json(f.raw("trajectory"));
  f.read("environment", cfg.environment_file);
  f.read("ensemble_size", cfg.ensemble_size);
  f.read("first_trial", cfg.first_trial);
  f.read("seed", cfg.seed);
  f.read("noise_free", cfg.noise_free);
  f.read("gate", cfg.gate);
  f.read("prior_variance", cfg.prior_variance);
  f.read("jobs", cfg.jobs);
  f.read("output_dir", cfg.output_dir);
  f.finish();

  if (!cfg.environment_file.empty()) {
    std::filesystem::path env_path(cfg.environment_file);
    if (env_path.is_relative() && !base_dir.empty()) env_path = base_dir / env_path;
    if (!std::filesystem::exists(env_path)) {
      throw ConfigError("environment: file not found '" + env_path.string() + "'");
    }
    cfg.environment_file = env_path.string();
    rethrow_as_config("environment: ", [&] { cfg.environment = load_environment(cfg.environment_file); });
  }
  cfg.validate();
  return cfg;
}

json scenario_to_json(const ScenarioConfig& cfg) {
  const auto& s = cfg.system;
  const auto& o = cfg.optimizer;
  json waypoints = json::array();
  for (const auto& w : cfg.trajectory.waypoints) waypoints.push_back(point_to_json(w));
  json j = {
      {"kind", std::string(to_string(cfg.kind))},
      {"system",
       {{"n_subcarriers", s.n_subcarriers},
        {"n_symbols", s.n_symbols},
        {"n_rx", s.n_rx},
        {"n_tx", s.n_tx},
        {"subcarrier_spacing", s.subcarrier_spacing},
        {"symbol_time", s.symbol_time},
        {"carrier_freq", s.carrier_freq},
        {"noise_var", s.noise_var},
        {"tx_power", s.tx_power}}},
      {"optimizer",
       {{"max_paths", o.max_paths},
        {"max_iterations", o.max_iterations},
        {"eps_var", o.eps_var},
        {"eps_obj", o.eps_obj},
        {"eps_paths", o.eps_paths},
        {"momentum_init", o.momentum_init},
        {"momentum_decay", o.momentum_decay},
        {"sor_base", o.sor_base},
        {"sor_amp", o.sor_amp},
        {"sor_tau", o.sor_tau}}},
      {"offsets", {{"tau_o", cfg.offsets.tau_o}, {"f_o", cfg.offsets.f_o}}},
      {"trajectory",
       {{"waypoints", waypoints},
        {"duration", cfg.trajectory.duration},
        {"rounds", cfg.trajectory.rounds},
        {"orientation", cfg.trajectory.orientation}}},
      {"ensemble_size", cfg.ensemble_size},
      {"first_trial", cfg.first_trial},
      {"seed", cfg.seed},
      {"noise_free", cfg.noise_free},
      {"gate", cfg.gate},
      {"prior_variance", cfg.prior_variance},
      {"jobs", cfg.jobs},
      {"output_dir", cfg.output_dir},
  };
  if (!cfg.environment_file.empty()) j["environment"] = cfg.environment_file;
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace ofdmest
