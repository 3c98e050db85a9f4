#pragma once

// 2-D geometric multipath simulator: line of sight plus first-order specular
// reflections by the image method, and the swept-precoder pilot sequence.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ofdmest/model.hpp"

namespace ofdmest {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 unit_from_angle(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Position plus array broadside direction (rad, counterclockwise from +x).
struct Pose {
  Vec2 position;
  double orientation = 0.0;
};

struct Wall {
  Vec2 a;
  Vec2 b;
  double reflection = 0.2;  // power reflection coefficient
};

struct Environment {
  std::vector<Wall> walls;
  Pose bs;
  Pose ue;
  Vec2 ue_velocity;

  void validate() const;
};

struct GeomPath {
  double distance = 0.0;  // m
  double aoa = 0.0;       // rad, BS array frame
  double aod = 0.0;       // rad, UE array frame
  std::optional<Vec2> reflection_point;
  bool is_los = false;
  int wall = -1;            // reflecting wall index, -1 for LOS
  double refl_coeff = 1.0;  // power coefficient
  double tof = 0.0;         // s
  double doppler = 0.0;     // Hz
};

struct Offsets {
  double tau_o = 0.1e-6;  // s
  double f_o = 2.4e6;     // Hz
};

/// Angle of a global direction seen from an array with the given broadside, in (-pi, pi].
double array_angle(const Pose& pose, Vec2 direction);

/// LOS (if unobstructed) then one path per visible first-order reflection, sorted by distance.
/// Paths whose AoA or AoD falls outside (-pi/2, pi/2) are dropped.
std::vector<GeomPath> trace_paths(const Environment& env, double carrier_freq);

/// Geometry to model parameters. The gain phase is drawn from gain_phase_seed.
PathParams path_to_params(const GeomPath& path, const Offsets& off, const SystemConfig& cfg,
                          std::uint64_t gain_phase_seed);

/// Single-stream pilots with a precoder matched to an angle swept over the symbols.
PilotTensor sweep_precoder_pilots(const SystemConfig& cfg);

/// Matched angle of symbol t: cell midpoints of a uniform grid over (-pi/2, pi/2).
double sweep_angle(std::size_t t, std::size_t n_symbols);

/// Room fixture used by the default scenarios (BS at (5, 30) facing south).
Environment default_environment();

Environment environment_from_json(const nlohmann::json& j);
nlohmann::json environment_to_json(const Environment& env);
Environment load_environment(const std::string& path);

}  // namespace ofdmest
