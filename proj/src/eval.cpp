#include "ofdmest/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ofdmest {

std::array<double, 6> parameter_errors(const PathParams& truth, const PathParams& estimate) {
  return {std::abs(estimate.b) - std::abs(truth.b),
          phase_diff(std::arg(estimate.b), std::arg(truth.b)),
          estimate.phi - truth.phi,
          estimate.theta - truth.theta,
          phase_diff(estimate.omega1, truth.omega1),
          phase_diff(estimate.omega2, truth.omega2)};
}

double match_distance(const PathParams& truth, const PathParams& estimate) {
  auto e = parameter_errors(truth, estimate);
  const double scale = std::abs(truth.b);
  e[0] = scale > 0 ? e[0] / scale : e[0];
  double acc = 0.0;
  for (const double v : e) acc += v * v;
  return std::sqrt(acc);
}

MatchReport greedy_match(const ParamVector& truth, const ParamVector& estimate, double gate) {
  struct Candidate {
    double distance;
    std::size_t truth;
    std::size_t estimate;
  };
  std::vector<Candidate> candidates;
  std::vector<std::size_t> truth_active;
  std::vector<std::size_t> est_active;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].active()) truth_active.push_back(i);
  }
  for (std::size_t j = 0; j < estimate.size(); ++j) {
    if (estimate[j].active()) est_active.push_back(j);
  }
  for (const std::size_t i : truth_active) {
    for (const std::size_t j : est_active) {
      const double d = match_distance(truth[i], estimate[j]);
      if (d <= gate) candidates.push_back({d, i, j});
    }
  }
  // Ties broken by index so the result does not depend on sort stability.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.truth != b.truth) return a.truth < b.truth;
    return a.estimate < b.estimate;
  });

  std::vector<bool> truth_used(truth.size(), false);
  std::vector<bool> est_used(estimate.size(), false);
  MatchReport report;
  for (const auto& c : candidates) {
    if (truth_used[c.truth] || est_used[c.estimate]) continue;
    truth_used[c.truth] = true;
    est_used[c.estimate] = true;
    report.assignments.push_back({c.truth, c.estimate, c.distance});
  }
  for (const std::size_t j : est_active) {
    if (!est_used[j]) report.misdetections.push_back(j);
  }
  for (const std::size_t i : truth_active) {
    if (!truth_used[i]) report.misses.push_back(i);
  }

  const double hits = static_cast<double>(report.assignments.size());
  const double claimed = hits + static_cast<double>(report.misdetections.size());
  const double actual = hits + static_cast<double>(report.misses.size());
  report.precision = claimed > 0 ? hits / claimed : 1.0;
  report.recall = actual > 0 ? hits / actual : 1.0;
  return report;
}

void ErrorAccumulator::add(const MatchReport& report, const ParamVector& truth, const ParamVector& estimate) {
  for (const auto& a : report.assignments) {
    const auto e = parameter_errors(truth.at(a.truth), estimate.at(a.estimate));
    for (std::size_t k = 0; k < e.size(); ++k) sum_sq[k] += e[k] * e[k];
    ++pairs;
  }
}

void ErrorAccumulator::merge(const ErrorAccumulator& other) {
  for (std::size_t k = 0; k < sum_sq.size(); ++k) sum_sq[k] += other.sum_sq[k];
  pairs += other.pairs;
}

ParamErrorTable ErrorAccumulator::table() const {
  if (pairs == 0) throw DomainError("error_table: no assigned pairs");
  ParamErrorTable t;
  t.pairs = pairs;
  for (std::size_t k = 0; k < sum_sq.size(); ++k) {
    t.mse[k] = sum_sq[k] / static_cast<double>(pairs);
    t.rmse[k] = std::sqrt(t.mse[k]);
  }
  return t;
}

ParamErrorTable error_table(const MatchReport& report, const ParamVector& truth, const ParamVector& estimate) {
  ErrorAccumulator acc;
  acc.add(report, truth, estimate);
  return acc.table();
}

std::optional<Vec2> intersect_rays(const Pose& bs, double aoa, const Pose& ue, double aod) {
  const Vec2 d1 = unit_from_angle(bs.orientation + aoa);
  const Vec2 d2 = unit_from_angle(ue.orientation + aod);
  const double det = cross(d1, d2);
  if (std::fabs(det) < 1e-9) return std::nullopt;
  const Vec2 gap = ue.position - bs.position;
  const double s = cross(gap, d2) / det;
  const double r = cross(gap, d1) / det;
  if (s <= 0.0 || r <= 0.0) return std::nullopt;
  return bs.position + s * d1;
}

}  // namespace ofdmest
