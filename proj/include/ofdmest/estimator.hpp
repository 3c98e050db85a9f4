#pragma once

// Sequential ML/MAP multipath estimation by augmented exact alternating
// coordinate descent.
//
// Along each phase-like coordinate of one path, with everything else held
// fixed, the objective is a trigonometric polynomial in
//   x = omega1 (K = N_c), x = omega2 (K = N_s),
//   x = pi*sin(theta) (K = N_t), x = pi*sin(phi) (K = N_r).
// ObjectiveSlice stores that polynomial; its derivative is the Fourier series
// whose roots are the exact coordinate-descent candidates.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ofdmest/model.hpp"
#include "ofdmest/trigroots.hpp"

namespace ofdmest {

enum class Coordinate { gain, omega1, omega2, theta, phi };

std::string_view to_string(Coordinate c);

/// f(x) = offset + sum_{k>=1} Re(harmonics[k] e^{jkx}); harmonics[0] is unused.
struct ObjectiveSlice {
  Coordinate coordinate = Coordinate::omega1;
  std::vector<cplx> harmonics;
  double offset = 0.0;

  double value(double x) const;
  /// df/dx as a TrigSeries with at least two terms.
  TrigSeries derivative() const;
};

/// Slice variable of a coordinate value: identity for omega, pi*sin for angles.
double slice_variable(Coordinate c, double value);

/// Incremental model state for one estimation run: per-path unit responses and
/// the residual y - sum_l b_l gamma_l. Holds references to y, pilots, cfg and
/// priors, which must outlive it.
class FitState {
 public:
  FitState(const ReceivedTensor& y, const PilotTensor& pilots, const SystemConfig& cfg, const Priors& priors,
           ParamVector params);

  const ParamVector& params() const { return params_; }
  const PathParams& path(std::size_t l) const { return params_.at(l); }
  const SystemConfig& config() const { return cfg_; }
  const Priors& priors() const { return priors_; }

  double likelihood() const;
  double prior() const;
  double objective() const { return likelihood() + prior(); }

  /// Objective along `c` (not gain) of path l with all else fixed.
  ObjectiveSlice slice(std::size_t l, Coordinate c) const;

  /// Closed-form minimizer of the objective over b_l (complex-normal or flat prior).
  cplx optimal_gain(std::size_t l) const;

  void set_path(std::size_t l, const PathParams& p);
  void set_gain(std::size_t l, cplx b);
  void set_coordinate(std::size_t l, Coordinate c, double value);

  /// Rebuilds all caches from params.
  void recompute();

 private:
  void rebuild_response(std::size_t l);

  const ReceivedTensor& y_;
  const PilotTensor& pilots_;
  const SystemConfig& cfg_;
  const Priors& priors_;
  ParamVector params_;
  std::vector<std::vector<cplx>> tx_gain_;   // per path: a(theta)^T x_{n,t}
  std::vector<std::vector<cplx>> response_;  // per path: gamma_{n,t,u}
  std::vector<cplx> residual_;
  std::vector<cplx> pilot_autocorr_;  // sum_{n,t} conj(sum_k x^{k+m} conj(x^k)), m = 0..N_t-1
};

/// Fourier series of df/dx along each coordinate of path l (see file comment for x).
TrigSeries deriv_series_omega1(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                               const SystemConfig& cfg, const Priors& priors, std::size_t path);
TrigSeries deriv_series_omega2(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                               const SystemConfig& cfg, const Priors& priors, std::size_t path);
TrigSeries deriv_series_sinphi(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                               const SystemConfig& cfg, const Priors& priors, std::size_t path);
TrigSeries deriv_series_sintheta(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                                 const SystemConfig& cfg, const Priors& priors, std::size_t path);

/// Exact gain update for path l.
cplx update_b(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
              const SystemConfig& cfg, const Priors& priors, std::size_t path);

struct OptimizerConfig {
  std::size_t max_paths = 6;        // L_max
  std::size_t max_iterations = 60;  // it_max, inner iterations per outer step
  double eps_var = 1e-5;
  double eps_obj = 1e-6;
  double eps_paths = 0.5;  // relative decrease threshold for path-count selection
  double momentum_init = 0.1;
  double momentum_decay = 0.99;
  double sor_base = 0.98;
  double sor_amp = 0.22;
  double sor_tau = 15.0;

  void validate() const;
  /// lambda_it = sor_base + sor_amp * exp(-it / sor_tau), clamped to [0.5, 1.5].
  double sor_coefficient(std::size_t it) const;

  /// Plain exact coordinate descent: no momentum, lambda = 1.
  static OptimizerConfig exact();
};

/// Momentum/relaxation applied to one coordinate update.
struct Relaxation {
  double momentum = 0.0;  // eta_m
  double sor = 1.0;       // lambda_m
};

/// Last value the coordinate held before its latest update (xi_{m-1}).
struct CoordinateHistory {
  std::optional<double> previous;
};

struct CoordinateStep {
  double optimum = 0.0;  // best candidate before momentum/relaxation
  double value = 0.0;    // value written back
  bool degenerate = false;
};

/// One augmented exact update of a phase-like coordinate of path l.
CoordinateStep coordinate_update(FitState& fit, std::size_t l, Coordinate c, const Relaxation& relax,
                                 CoordinateHistory& history);

enum class Termination { converged_var, converged_obj, max_iterations };

std::string_view to_string(Termination t);

struct EstimationResult {
  ParamVector params;  // sorted by decreasing |b|; slots >= num_paths have b = 0
  std::size_t num_paths = 0;
  std::vector<double> objective_trace;  // after every coordinate update
  std::vector<std::size_t> iterations_per_path;
  std::vector<Termination> terminations;
  std::vector<std::size_t> visit_order;  // path slot of each outer iteration

  double mean_inner_iterations() const;
};

/// Outer-loop path visiting order [0,1, 0,1,2, ..., 0..L_max-1].
std::vector<std::size_t> path_order(std::size_t max_paths);

/// Sequential coordinate descent over path slots. `initial`, when given, seeds the first visit of each slot instead of zeros.
EstimationResult estimate_params(const ReceivedTensor& y, const PilotTensor& pilots, const SystemConfig& cfg,
                                 const OptimizerConfig& opt, const Priors& priors = {},
                                 std::span<const PathParams> initial = {});

/// Decrease test over partial objectives f_1..f_M (f[i-1] uses the i strongest paths).
/// Returns the first i with f_i - f_{i+1} < eps (f_1 - f_i) / i, else M.
std::size_t select_path_count(std::span<const double> partial_objectives, double eps);

/// Number of active paths in `params` (relative-decrease rule plus a noise-floor gate).
std::size_t estimate_L(const ReceivedTensor& y, const PilotTensor& pilots, const SystemConfig& cfg,
                       const ParamVector& params, double eps, const Priors& priors = {});

/// Priors centred on the first num_paths estimates, all variances set to `variance`.
Priors priors_from_estimate(const EstimationResult& previous, double variance);

struct Observation {
  ReceivedTensor y;
  PilotTensor pilots;
};

/// Round 0 is ML; each later round uses the previous round's detections as priors and warm start.
std::vector<EstimationResult> sequential_estimate(std::span<const Observation> rounds, const SystemConfig& cfg,
                                                  const OptimizerConfig& opt, double variance);

}  // namespace ofdmest
