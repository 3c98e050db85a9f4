#include "ofdmest/geosim.hpp"

#include <algorithm>
#include <fstream>
#include <random>

namespace ofdmest {

namespace {

// Strict crossing; shared endpoints and collinear touching do not count.
bool properly_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool blocked(Vec2 from, Vec2 to, const std::vector<Wall>& walls, int skip) {
  for (std::size_t i = 0; i < walls.size(); ++i) {
    if (static_cast<int>(i) == skip) continue;
    if (properly_intersect(from, to, walls[i].a, walls[i].b)) return true;
  }
  return false;
}

Vec2 mirror(Vec2 p, const Wall& w) {
  const Vec2 d = w.b - w.a;
  const double s = dot(p - w.a, d) / dot(d, d);
  const Vec2 foot = w.a + s * d;
  return 2.0 * foot - p;
}

bool visible(double angle) { return angle > -kPi / 2 && angle < kPi / 2; }

Vec2 vec_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw DomainError(std::string(field) + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Pose pose_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_object()) throw DomainError(std::string(field) + ": expected object");
  if (!j.contains("position")) throw DomainError(std::string(field) + ".position: missing");
  if (!j.contains("orientation") || !j["orientation"].is_number()) {
    throw DomainError(std::string(field) + ".orientation: missing or not a number");
  }
  return {vec_from_json(j["position"], (std::string(field) + ".position").c_str()),
          j["orientation"].get<double>()};
}

nlohmann::json vec_to_json(Vec2 v) { return nlohmann::json::array({v.x, v.y}); }

}  // namespace

void Environment::validate() const {
  const auto finite = [](Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); };
  for (std::size_t i = 0; i < walls.size(); ++i) {
    const auto& w = walls[i];
    const std::string name = "walls[" + std::to_string(i) + "]";
    if (!finite(w.a) || !finite(w.b)) throw DomainError(name + ": endpoints must be finite");
    if (norm(w.b - w.a) == 0.0) throw DomainError(name + ": zero-length segment");
    if (!(w.reflection > 0.0 && w.reflection <= 1.0)) throw DomainError(name + ".reflection: must lie in (0, 1]");
  }
  if (!finite(bs.position) || !std::isfinite(bs.orientation)) throw DomainError("bs: pose must be finite");
  if (!finite(ue.position) || !std::isfinite(ue.orientation)) throw DomainError("ue: pose must be finite");
  if (!finite(ue_velocity)) throw DomainError("ue_velocity: must be finite");
  if (bs.position == ue.position) throw DomainError("ue: coincides with bs");
}

double array_angle(const Pose& pose, Vec2 direction) {
  return wrap_phase(std::atan2(direction.y, direction.x) - pose.orientation);
}

std::vector<GeomPath> trace_paths(const Environment& env, double carrier_freq) {
  env.validate();
  const Vec2 bs = env.bs.position;
  const Vec2 ue = env.ue.position;
  std::vector<GeomPath> out;

  const auto finish = [&](GeomPath p, Vec2 first_hop) {
    p.tof = p.distance / kSpeedOfLight;
    const Vec2 dir = (1.0 / norm(first_hop)) * first_hop;
    p.doppler = carrier_freq * dot(env.ue_velocity, dir) / kSpeedOfLight;
    if (visible(p.aoa) && visible(p.aod)) out.push_back(p);
  };

  if (!blocked(ue, bs, env.walls, -1)) {
    GeomPath p;
    p.distance = norm(bs - ue);
    p.aoa = array_angle(env.bs, ue - bs);
    p.aod = array_angle(env.ue, bs - ue);
    p.is_los = true;
    p.refl_coeff = 1.0;
    finish(p, bs - ue);
  }

  for (std::size_t i = 0; i < env.walls.size(); ++i) {
    const Wall& w = env.walls[i];
    const Vec2 d = w.b - w.a;
    const double side_bs = cross(d, bs - w.a);
    const double side_ue = cross(d, ue - w.a);
    if (side_bs == 0.0 || side_ue == 0.0 || (side_bs > 0) != (side_ue > 0)) continue;

    const Vec2 image = mirror(bs, w);
    const Vec2 ray = image - ue;
    const double denom = cross(ray, d);
    if (denom == 0.0) continue;
    const double s = cross(ray, ue - w.a) / denom;  // position along the wall
    if (s < 0.0 || s > 1.0) continue;
    const Vec2 hit = w.a + s * d;

    const int skip = static_cast<int>(i);
    if (blocked(ue, hit, env.walls, skip) || blocked(hit, bs, env.walls, skip)) continue;

    GeomPath p;
    p.distance = norm(ray);
    p.aoa = array_angle(env.bs, hit - bs);
    p.aod = array_angle(env.ue, hit - ue);
    p.reflection_point = hit;
    p.wall = skip;
    p.refl_coeff = w.reflection;
    finish(p, hit - ue);
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const GeomPath& l, const GeomPath& r) { return l.distance < r.distance; });
  return out;
}

PathParams path_to_params(const GeomPath& path, const Offsets& off, const SystemConfig& cfg,
                          std::uint64_t gain_phase_seed) {
  std::mt19937_64 rng(gain_phase_seed);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  const double magnitude = std::sqrt(path.refl_coeff / (4.0 * kPi * path.distance * path.distance));

  PathParams p;
  p.b = std::polar(magnitude, wrap_phase(phase(rng)));
  p.omega1 = wrap_phase(-2.0 * kPi * (path.tof + off.tau_o) * cfg.subcarrier_spacing);
  p.omega2 = wrap_phase(2.0 * kPi * (path.doppler + off.f_o) * cfg.symbol_time);
  p.phi = path.aoa;
  p.theta = path.aod;
  return p;
}

double sweep_angle(std::size_t t, std::size_t n_symbols) {
  return -kPi / 2 + (static_cast<double>(t) + 0.5) * kPi / static_cast<double>(n_symbols);
}

PilotTensor sweep_precoder_pilots(const SystemConfig& cfg) {
  cfg.validate();
  PilotTensor x(cfg.n_subcarriers, cfg.n_symbols, cfg.n_tx);
  const double amplitude =
      std::sqrt(cfg.tx_power / static_cast<double>(cfg.n_subcarriers)) / std::sqrt(static_cast<double>(cfg.n_tx));
  for (std::size_t t = 0; t < cfg.n_symbols; ++t) {
    const auto a = steering(sweep_angle(t, cfg.n_symbols), cfg.n_tx);
    for (std::size_t n = 0; n < cfg.n_subcarriers; ++n) {
      for (std::size_t v = 0; v < cfg.n_tx; ++v) x(n, t, v) = amplitude * std::conj(a[v]);
    }
  }
  return x;
}

Environment default_environment() {
  Environment env;
  const Vec2 sw{-4.0, -4.0};
  const Vec2 se{24.0, -4.0};
  const Vec2 ne{24.0, 36.0};
  const Vec2 nw{-4.0, 36.0};
  env.walls = {{sw, se, 0.2}, {se, ne, 0.2}, {ne, nw, 0.2}, {nw, sw, 0.2}};
  env.bs = {{5.0, 30.0}, -kPi / 2};
  env.ue = {{10.0, 10.0}, std::atan2(20.0, -5.0)};
  env.ue_velocity = {1.0, 0.0};
  return env;
}

Environment environment_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("environment: expected a JSON object");
  Environment env;
  if (j.contains("walls")) {
    if (!j["walls"].is_array()) throw DomainError("walls: expected an array");
    for (std::size_t i = 0; i < j["walls"].size(); ++i) {
      const auto& w = j["walls"][i];
      const std::string name = "walls[" + std::to_string(i) + "]";
      if (!w.is_object() || !w.contains("from") || !w.contains("to")) {
        throw DomainError(name + ": expected {\"from\": [x, y], \"to\": [x, y]}");
      }
      Wall wall{vec_from_json(w["from"], (name + ".from").c_str()), vec_from_json(w["to"], (name + ".to").c_str()),
                w.value("reflection", 0.2)};
      env.walls.push_back(wall);
    }
  }
  if (!j.contains("bs")) throw DomainError("bs: missing");
  if (!j.contains("ue")) throw DomainError("ue: missing");
  env.bs = pose_from_json(j["bs"], "bs");
  env.ue = pose_from_json(j["ue"], "ue");
  if (j.contains("ue_velocity")) env.ue_velocity = vec_from_json(j["ue_velocity"], "ue_velocity");
  env.validate();
  return env;
}

nlohmann::json environment_to_json(const Environment& env) {
  nlohmann::json walls = nlohmann::json::array();
  for (const auto& w : env.walls) {
    walls.push_back({{"from", vec_to_json(w.a)}, {"to", vec_to_json(w.b)}, {"reflection", w.reflection}});
  }
  return {{"walls", walls},
          {"bs", {{"position", vec_to_json(env.bs.position)}, {"orientation", env.bs.orientation}}},
          {"ue", {{"position", vec_to_json(env.ue.position)}, {"orientation", env.ue.orientation}}},
          {"ue_velocity", vec_to_json(env.ue_velocity)}};
}

Environment load_environment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("environment file: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError("environment file '" + path + "': " + e.what());
  }
  return environment_from_json(j);
}

}  // namespace ofdmest
