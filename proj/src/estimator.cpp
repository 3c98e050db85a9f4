#include "ofdmest/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace ofdmest {

namespace {

constexpr double kAngleLimit = kPi / 2 - 1e-9;
constexpr double kRelativeFloor = 1e-3;

bool is_angle(Coordinate c) { return c == Coordinate::phi || c == Coordinate::theta; }

double read(const PathParams& p, Coordinate c) {
  switch (c) {
    case Coordinate::omega1: return p.omega1;
    case Coordinate::omega2: return p.omega2;
    case Coordinate::phi: return p.phi;
    case Coordinate::theta: return p.theta;
    case Coordinate::gain: break;
  }
  throw DomainError("coordinate_update: gain is updated in closed form");
}

double difference(Coordinate c, double a, double b) { return is_angle(c) ? a - b : phase_diff(a, b); }

double into_domain(Coordinate c, double x) {
  return is_angle(c) ? std::clamp(x, -kAngleLimit, kAngleLimit) : wrap_phase(x);
}

double relative_change(double now, double before) {
  return std::fabs(now - before) / std::max(std::fabs(before), kRelativeFloor);
}

double relative_phase_change(double now, double before) {
  return std::fabs(phase_diff(now, before)) / std::max(std::fabs(before), kRelativeFloor);
}

double max_relative_change(const PathParams& now, const PathParams& before) {
  double worst = relative_change(std::abs(now.b), std::abs(before.b));
  if (now.b != cplx{} && before.b != cplx{}) {
    worst = std::max(worst, relative_phase_change(std::arg(now.b), std::arg(before.b)));
  } else if (now.b != before.b) {
    worst = std::max(worst, 1.0);
  }
  worst = std::max(worst, relative_phase_change(now.omega1, before.omega1));
  worst = std::max(worst, relative_phase_change(now.omega2, before.omega2));
  worst = std::max(worst, relative_change(now.phi, before.phi));
  worst = std::max(worst, relative_change(now.theta, before.theta));
  return worst;
}

}  // namespace

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::converged_var: return "converged-var";
    case Termination::converged_obj: return "converged-obj";
    case Termination::max_iterations: return "max-iters";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  const auto fail = [](const std::string& what) { throw DomainError("optimizer." + what); };
  if (max_paths < 1) fail("max_paths: must be >= 1");
  if (max_iterations < 1) fail("max_iterations: must be >= 1");
  if (!(eps_var > 0)) fail("eps_var: must be > 0");
  if (!(eps_obj > 0)) fail("eps_obj: must be > 0");
  if (!(eps_paths > 0)) fail("eps_paths: must be > 0");
  if (!(momentum_init >= 0)) fail("momentum_init: must be >= 0");
  if (!(momentum_decay >= 0 && momentum_decay <= 1)) fail("momentum_decay: must lie in [0, 1]");
  if (!(sor_tau > 0)) fail("sor_tau: must be > 0");
  if (!std::isfinite(sor_base) || !std::isfinite(sor_amp)) fail("sor_base/sor_amp: must be finite");
}

double OptimizerConfig::sor_coefficient(std::size_t it) const {
  const double lambda = sor_base + sor_amp * std::exp(-static_cast<double>(it) / sor_tau);
  return std::clamp(lambda, 0.5, 1.5);
}

OptimizerConfig OptimizerConfig::exact() {
  OptimizerConfig c;
  c.momentum_init = 0.0;
  c.sor_base = 1.0;
  c.sor_amp = 0.0;
  return c;
}

double EstimationResult::mean_inner_iterations() const {
  if (iterations_per_path.empty()) return 0.0;
  const double total = std::accumulate(iterations_per_path.begin(), iterations_per_path.end(), 0.0);
  return total / static_cast<double>(iterations_per_path.size());
}

CoordinateStep coordinate_update(FitState& fit, std::size_t l, Coordinate c, const Relaxation& relax,
                                 CoordinateHistory& history) {
  const double current = read(fit.path(l), c);
  const ObjectiveSlice slice = fit.slice(l, c);
  const TrigSeries series = slice.derivative();

  CoordinateStep step;
  if (series.is_zero()) {
    step.optimum = current;
    step.value = current;
    step.degenerate = true;
    return step;
  }

  // The incumbent is always a candidate, so an exact step never increases f.
  double best = current;
  double best_value = slice.value(slice_variable(c, current));
  for (const double x : roots(series)) {
    double candidate = x;
    if (is_angle(c)) {
      if (std::fabs(x) >= kPi * (1.0 - 1e-9)) continue;
      candidate = std::asin(x / kPi);
    }
    const double v = slice.value(x);
    if (v < best_value) {
      best_value = v;
      best = candidate;
    }
  }

  const double momentum = history.previous ? difference(c, current, *history.previous) : 0.0;
  const double boosted = best + relax.momentum * momentum;
  double next = into_domain(c, current + relax.sor * difference(c, boosted, current));
  if (relax.momentum == 0.0 && relax.sor == 1.0) next = best;

  history.previous = current;
  fit.set_coordinate(l, c, next);
  step.optimum = best;
  step.value = next;
  return step;
}

std::vector<std::size_t> path_order(std::size_t max_paths) {
  if (max_paths == 1) return {0};
  std::vector<std::size_t> order;
  for (std::size_t group = 2; group <= max_paths; ++group) {
    for (std::size_t l = 0; l < group; ++l) order.push_back(l);
  }
  return order;
}

EstimationResult estimate_params(const ReceivedTensor& y, const PilotTensor& pilots, const SystemConfig& cfg,
                                 const OptimizerConfig& opt, const Priors& priors,
                                 std::span<const PathParams> initial) {
  opt.validate();
  priors.validate();
  FitState fit(y, pilots, cfg, priors, ParamVector(opt.max_paths));

  EstimationResult result;
  std::vector<bool> visited(opt.max_paths, false);
  static constexpr std::array<Coordinate, 4> kPhaseSteps = {Coordinate::omega1, Coordinate::omega2,
                                                            Coordinate::theta, Coordinate::phi};

  for (const std::size_t l : path_order(opt.max_paths)) {
    result.visit_order.push_back(l);
    if (!visited[l]) {
      fit.set_path(l, l < initial.size() ? initial[l] : PathParams{});
      visited[l] = true;
    }

    std::array<CoordinateHistory, 4> history{};
    double eta = opt.momentum_init;
    Termination reason = Termination::max_iterations;
    std::size_t it = 1;
    for (; it <= opt.max_iterations; ++it) {
      const PathParams before = fit.path(l);
      const double f0 = fit.objective();
      const Relaxation relax{eta, opt.sor_coefficient(it)};

      // b, omega1, b, omega2, b, theta, b, phi
      for (std::size_t k = 0; k < kPhaseSteps.size(); ++k) {
        fit.set_gain(l, fit.optimal_gain(l));
        result.objective_trace.push_back(fit.objective());
        coordinate_update(fit, l, kPhaseSteps[k], relax, history[k]);
        result.objective_trace.push_back(fit.objective());
      }

      const double f1 = fit.objective();
      if (max_relative_change(fit.path(l), before) < opt.eps_var) {
        reason = Termination::converged_var;
        break;
      }
      if (std::fabs(f0 - f1) < opt.eps_obj) {
        reason = Termination::converged_obj;
        break;
      }
      eta *= opt.momentum_decay;
    }
    result.iterations_per_path.push_back(std::min(it, opt.max_iterations));
    result.terminations.push_back(reason);
  }

  ParamVector params = fit.params();
  std::stable_sort(params.begin(), params.end(),
                   [](const PathParams& a, const PathParams& b) { return std::abs(a.b) > std::abs(b.b); });
  result.num_paths = estimate_L(y, pilots, cfg, params, opt.eps_paths, Priors{});
  for (std::size_t l = result.num_paths; l < params.size(); ++l) params[l] = PathParams{};
  result.params = std::move(params);
  return result;
}

std::size_t select_path_count(std::span<const double> f, double eps) {
  const std::size_t m = f.size();
  for (std::size_t i = 1; i < m; ++i) {
    const double drop = f[i - 1] - f[i];
    const double threshold = eps * (f[0] - f[i - 1]) / static_cast<double>(i);
    if (drop < threshold) return i;
  }
  return m;
}

std::size_t estimate_L(const ReceivedTensor& y, const PilotTensor& pilots, const SystemConfig& cfg,
                       const ParamVector& params, double eps, const Priors& priors) {
  std::vector<std::size_t> order(params.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(params[a].b) > std::abs(params[b].b); });
  while (!order.empty() && !params[order.back()].active()) order.pop_back();
  if (order.empty()) return 0;

  std::vector<double> partial;
  partial.reserve(order.size());
  for (std::size_t i = 1; i <= order.size(); ++i) {
    partial.push_back(objective_subset(params, std::span(order).first(i), y, pilots, cfg, priors));
  }
  const double empty = objective_subset(params, {}, y, pilots, cfg, priors);

  // A path counts only if it lowers f by a fraction eps of the noise-only objective E[f] = N_c N_s N_r.
  const double floor = eps * static_cast<double>(cfg.observations());
  std::size_t significant = 0;
  double last = empty;
  for (const double f : partial) {
    if (last - f < floor) break;
    ++significant;
    last = f;
  }
  return std::min(select_path_count(partial, eps), significant);
}

Priors priors_from_estimate(const EstimationResult& previous, double variance) {
  Priors priors;
  for (std::size_t l = 0; l < previous.num_paths && l < previous.params.size(); ++l) {
    const PathParams& p = previous.params[l];
    PathPrior prior;
    prior.b = GainPrior{p.b, variance};
    prior.omega1 = PhasePrior{p.omega1, variance};
    prior.omega2 = PhasePrior{p.omega2, variance};
    prior.phi = PhasePrior{p.phi, variance};
    prior.theta = PhasePrior{p.theta, variance};
    priors.paths.push_back(prior);
  }
  return priors;
}

std::vector<EstimationResult> sequential_estimate(std::span<const Observation> rounds, const SystemConfig& cfg,
                                                  const OptimizerConfig& opt, double variance) {
  if (rounds.empty()) throw DomainError("sequential_estimate: trajectory must contain at least one round");
  if (!(variance > 0)) throw DomainError("sequential_estimate: variance must be > 0");
  std::vector<EstimationResult> out;
  out.reserve(rounds.size());
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    if (i == 0) {
      out.push_back(estimate_params(rounds[i].y, rounds[i].pilots, cfg, opt));
      continue;
    }
    const EstimationResult& prev = out.back();
    const Priors priors = priors_from_estimate(prev, variance);
    const std::span<const PathParams> warm(prev.params.data(), prev.num_paths);
    out.push_back(estimate_params(rounds[i].y, rounds[i].pilots, cfg, opt, priors, warm));
  }
  return out;
}

}  // namespace ofdmest
