#pragma once

// Experiment configuration: JSON schema, defaults and validation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ofdmest/estimator.hpp"
#include "ofdmest/geosim.hpp"
#include "ofdmest/model.hpp"

namespace ofdmest {

/// Invalid or unreadable configuration. The message starts with the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { single, ensemble, sequential };

std::string_view to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(std::string_view s);

/// Piecewise-linear UE route traversed at constant speed.
struct Trajectory {
  std::vector<Vec2> waypoints{{3.0, 4.0}, {16.0, 4.0}, {16.0, 16.0}};
  double duration = 5.0;  // s
  std::size_t rounds = 50;
  double orientation = kPi / 2;  // UE broadside, rad

  void validate() const;
  double length() const;
  /// Position and velocity at time s in [0, duration].
  Pose pose_at(double s) const;
  Vec2 velocity_at(double s) const;
  /// Time of round r: r * duration / rounds.
  double round_time(std::size_t r) const;
};

struct ScenarioConfig {
  ExperimentKind kind = ExperimentKind::single;
  SystemConfig system;
  OptimizerConfig optimizer;
  Offsets offsets;
  std::string environment_file;  // empty: built-in room fixture
  Environment environment = default_environment();
  std::size_t ensemble_size = 128;
  std::size_t first_trial = 0;
  Trajectory trajectory;
  std::uint64_t seed = 7;
  bool noise_free = false;
  double gate = 0.5;
  double prior_variance = 0.005;
  std::size_t jobs = 0;  // 0: all available cores
  std::string output_dir = "out";

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Parses a scenario; `base_dir` resolves a relative environment path.
ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Stateless 64-bit seed mixer (splitmix64 finalizer over both inputs).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ofdmest
