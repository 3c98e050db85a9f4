#pragma once

// Experiment runners (single shot, Monte Carlo ensemble, sequential MAP vs ML)
// and their output files.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ofdmest/estimator.hpp"
#include "ofdmest/eval.hpp"
#include "ofdmest/geosim.hpp"
#include "ofdmest/scenario.hpp"

namespace ofdmest {

/// One estimation problem: a UE pose, its ground truth and the estimate.
struct TrialRecord {
  std::size_t index = 0;  // ensemble trial or trajectory round
  std::uint64_t seed = 0;
  Pose ue;
  Vec2 ue_velocity;
  std::vector<GeomPath> geometry;
  ParamVector truth;  // parallel to geometry
  EstimationResult estimate;
  MatchReport match;
};

/// Trials of one estimator, ordered by index.
struct Track {
  std::string estimator;  // "ML" or "MAP"
  std::vector<TrialRecord> trials;
};

struct RunResult {
  ExperimentKind kind = ExperimentKind::single;
  std::vector<Track> tracks;
};

/// Aggregate over trials, computed from counts in index order.
struct Summary {
  std::size_t trials = 0;
  std::size_t true_paths = 0;
  std::size_t estimated_paths = 0;
  std::size_t assigned = 0;
  double precision = 1.0;
  double recall = 1.0;
  double mean_inner_iterations = 0.0;
  ErrorAccumulator errors;
};

Summary summarize(const std::vector<TrialRecord>& trials);

/// Ensemble UE pose of trial `index`: uniform on [1,19]^2, facing the BS within +-pi/2.
Pose ensemble_pose(const Environment& env, std::uint64_t trial_seed);

/// Per-trial seed derived from the scenario seed.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t index);

/// Simulates and estimates one snapshot with flat priors.
TrialRecord run_trial(const ScenarioConfig& cfg, const Pose& ue, Vec2 ue_velocity, std::size_t index,
                      std::uint64_t seed);

RunResult run_single(const ScenarioConfig& cfg);
RunResult run_ensemble(const ScenarioConfig& cfg);
/// ML and MAP on identical realizations along the configured trajectory.
RunResult run_sequential(const ScenarioConfig& cfg);
RunResult run_experiment(const ScenarioConfig& cfg);

/// Concatenates per-estimator trials of two runs of the same kind, ordered by index.
RunResult merge_runs(const RunResult& a, const RunResult& b);

/// Contents of metrics.csv.
struct Metrics {
  static constexpr int kVersion = 1;

  struct SummaryRow {
    std::string estimator;
    std::size_t trials = 0;
    std::size_t true_paths = 0;
    std::size_t estimated_paths = 0;
    std::size_t assigned = 0;
    double precision = 0.0;
    double recall = 0.0;
    double mean_inner_iterations = 0.0;
  };
  struct ErrorRow {
    std::string estimator;
    std::string statistic;  // "MSE" or "RMSE"
    std::array<double, 6> values{};  // kErrorColumns order; NaN without assigned pairs
  };

  int version = kVersion;
  std::string kind;
  std::vector<SummaryRow> summary;
  std::vector<ErrorRow> errors;
};

Metrics compute_metrics(const RunResult& run);
std::string format_metrics(const Metrics& m);
/// Inverse of format_metrics. Throws std::runtime_error on malformed input or version mismatch.
Metrics parse_metrics(std::string_view text);

nlohmann::json trials_json(const RunResult& run);
/// Reflector estimates from AoA/AoD ray intersection; estimates matched to a LOS path are excluded.
std::string format_reflectors(const RunResult& run, const Environment& env);
std::string format_trace(const RunResult& run);

/// Writes metrics.csv, trials.json, reflectors.csv and trace.csv into `dir`.
void write_outputs(const RunResult& run, const ScenarioConfig& cfg, const std::filesystem::path& dir);

}  // namespace ofdmest
