#pragma once

// Scoring of estimated paths against ground truth, and reflector mapping by
// intersecting the AoA and AoD rays.

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "ofdmest/geosim.hpp"
#include "ofdmest/model.hpp"

namespace ofdmest {

struct Assignment {
  std::size_t truth = 0;
  std::size_t estimate = 0;
  double distance = 0.0;
};

struct MatchReport {
  std::vector<Assignment> assignments;
  std::vector<std::size_t> misdetections;  // unassigned estimate indices
  std::vector<std::size_t> misses;         // unassigned truth indices
  double precision = 1.0;
  double recall = 0.0;
};

/// Normalized distance: |b| error relative to true |b|; phases and angles in rad, circular ones wrapped.
double match_distance(const PathParams& truth, const PathParams& estimate);

/// Greedy assignment on the smallest remaining distance not exceeding `gate`.
/// Inactive entries (b == 0) on either side are ignored.
MatchReport greedy_match(const ParamVector& truth, const ParamVector& estimate, double gate = 0.5);

/// Column order of the error tables: |b|, angle b, phi, theta, omega1, omega2.
inline constexpr std::array<std::string_view, 6> kErrorColumns = {"abs_b", "angle_b", "phi", "theta", "omega1",
                                                                   "omega2"};

/// Signed errors (estimate - truth) of one pair in kErrorColumns order.
std::array<double, 6> parameter_errors(const PathParams& truth, const PathParams& estimate);

struct ParamErrorTable {
  std::array<double, 6> mse{};
  std::array<double, 6> rmse{};
  std::size_t pairs = 0;
};

/// Accumulates squared errors over many reports; merging is order-independent up to rounding.
struct ErrorAccumulator {
  std::array<double, 6> sum_sq{};
  std::size_t pairs = 0;

  void add(const MatchReport& report, const ParamVector& truth, const ParamVector& estimate);
  void merge(const ErrorAccumulator& other);
  ParamErrorTable table() const;
};

/// Per-parameter MSE/RMSE over the report's assignments. Throws DomainError when there are none.
ParamErrorTable error_table(const MatchReport& report, const ParamVector& truth, const ParamVector& estimate);

/// Intersection of the BS ray (pose + AoA) with the UE ray (pose + AoD), if both rays meet in front.
std::optional<Vec2> intersect_rays(const Pose& bs, double aoa, const Pose& ue, double aod);

}  // namespace ofdmest
