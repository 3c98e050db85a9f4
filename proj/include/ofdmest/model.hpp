#pragma once

// Uplink OFDM multipath signal model: domain types, forward synthesis and
// the negative log-posterior objective that the estimator minimizes.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace ofdmest {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

/// Thrown when a value violates a documented domain precondition.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Wraps a phase into (-pi, pi].
double wrap_phase(double x);

/// Signed shortest difference a - b on the circle, in (-pi, pi].
inline double phase_diff(double a, double b) { return wrap_phase(a - b); }

struct SystemConfig {
  std::size_t n_subcarriers = 40;
  std::size_t n_symbols = 50;
  std::size_t n_rx = 16;
  std::size_t n_tx = 4;
  double subcarrier_spacing = 240e3;  // Hz
  double symbol_time = 4.46e-6;       // s
  double carrier_freq = 60e9;         // Hz
  double noise_var = 1e-8;            // W
  double tx_power = 8.0;              // W

  /// Throws DomainError naming the first offending field.
  void validate() const;

  std::size_t observations() const { return n_subcarriers * n_symbols * n_rx; }
};

/// One multipath component. b == 0 marks an inactive slot.
struct PathParams {
  cplx b{0.0, 0.0};
  double omega1 = 0.0;  // rad per subcarrier index
  double omega2 = 0.0;  // rad per symbol index
  double phi = 0.0;     // angle of arrival, rad
  double theta = 0.0;   // angle of departure, rad

  bool active() const { return b != cplx{0.0, 0.0}; }
  /// True when every field lies in its constraint set.
  bool in_domain() const;
};

using ParamVector = std::vector<PathParams>;

/// Per-transmit-antenna pilots x[n][t][v], stored n-major.
class PilotTensor {
 public:
  PilotTensor() = default;
  PilotTensor(std::size_t n_subcarriers, std::size_t n_symbols, std::size_t n_tx);

  cplx& operator()(std::size_t n, std::size_t t, std::size_t v) {
    return data_[(n * n_symbols_ + t) * n_tx_ + v];
  }
  const cplx& operator()(std::size_t n, std::size_t t, std::size_t v) const {
    return data_[(n * n_symbols_ + t) * n_tx_ + v];
  }
  std::span<const cplx> at(std::size_t n, std::size_t t) const {
    return {data_.data() + (n * n_symbols_ + t) * n_tx_, n_tx_};
  }

  std::size_t n_subcarriers() const { return n_subcarriers_; }
  std::size_t n_symbols() const { return n_symbols_; }
  std::size_t n_tx() const { return n_tx_; }
  std::span<const cplx> data() const { return data_; }

  bool matches(const SystemConfig& cfg) const {
    return n_subcarriers_ == cfg.n_subcarriers && n_symbols_ == cfg.n_symbols && n_tx_ == cfg.n_tx;
  }

 private:
  std::size_t n_subcarriers_ = 0;
  std::size_t n_symbols_ = 0;
  std::size_t n_tx_ = 0;
  std::vector<cplx> data_;
};

/// Observations y[n][t][u], stored with u fastest.
class ReceivedTensor {
 public:
  ReceivedTensor() = default;
  ReceivedTensor(std::size_t n_subcarriers, std::size_t n_symbols, std::size_t n_rx);

  cplx& operator()(std::size_t n, std::size_t t, std::size_t u) {
    return data_[(n * n_symbols_ + t) * n_rx_ + u];
  }
  const cplx& operator()(std::size_t n, std::size_t t, std::size_t u) const {
    return data_[(n * n_symbols_ + t) * n_rx_ + u];
  }

  std::size_t n_subcarriers() const { return n_subcarriers_; }
  std::size_t n_symbols() const { return n_symbols_; }
  std::size_t n_rx() const { return n_rx_; }
  std::size_t size() const { return data_.size(); }
  std::span<const cplx> data() const { return data_; }
  std::span<cplx> data() { return data_; }

  bool matches(const SystemConfig& cfg) const {
    return n_subcarriers_ == cfg.n_subcarriers && n_symbols_ == cfg.n_symbols && n_rx_ == cfg.n_rx;
  }

 private:
  std::size_t n_subcarriers_ = 0;
  std::size_t n_symbols_ = 0;
  std::size_t n_rx_ = 0;
  std::vector<cplx> data_;
};

/// Prior on a phase-like coordinate: exp(-|e^{j mode'} - e^{j x'}|^2 / var), where x' is
/// the coordinate itself for omega1/omega2 and pi*sin(x) for the angles.
struct PhasePrior {
  double mode = 0.0;
  double var = 1.0;
};

/// Circular complex normal prior on the path gain.
struct GainPrior {
  cplx mode{0.0, 0.0};
  double var = 1.0;
};

/// Any absent member is a flat prior on that coordinate.
struct PathPrior {
  std::optional<GainPrior> b;
  std::optional<PhasePrior> omega1;
  std::optional<PhasePrior> omega2;
  std::optional<PhasePrior> phi;
  std::optional<PhasePrior> theta;
};

struct Priors {
  /// Entry l applies to path slot l; slots past the end are flat.
  std::vector<PathPrior> paths;

  const PathPrior* find(std::size_t path) const {
    return path < paths.size() ? &paths[path] : nullptr;
  }
  void validate() const;
};

/// ULA response [1, e^{-j pi sin a}, ..., e^{-j pi (N-1) sin a}]. Requires |angle| < pi/2.
std::vector<cplx> steering(double angle, std::size_t n_antennas);

/// Noise-free mean of y[n][t][u].
cplx mean_mu(const ParamVector& params, const PilotTensor& pilots, std::size_t n, std::size_t t,
             std::size_t u);

/// Composite channel matrix H_{n,t} (n_rx x n_tx).
Eigen::MatrixXcd channel_matrix(const ParamVector& params, const SystemConfig& cfg, std::size_t n,
                                std::size_t t);

/// Unit-gain response of one path over all (n, t, u), laid out like ReceivedTensor.
std::vector<cplx> path_response(const PathParams& path, const PilotTensor& pilots, std::size_t n_rx);

/// Noise-free mean tensor.
ReceivedTensor model_mean(const ParamVector& params, const PilotTensor& pilots, std::size_t n_rx);

enum class NoiseMode { enabled, disabled };

/// Mean plus circular complex Gaussian noise of variance cfg.noise_var.
ReceivedTensor synthesize_received(const ParamVector& params, const PilotTensor& pilots,
                                   const SystemConfig& cfg, std::uint64_t noise_seed,
                                   NoiseMode noise = NoiseMode::enabled);

/// (1/N0) * sum |y - mu|^2.
double neg_log_likelihood(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                          const SystemConfig& cfg);

/// Sum of the per-path prior penalties; flat priors contribute nothing.
double neg_log_prior(const ParamVector& params, const Priors& priors);

/// Prior penalty of a single path slot.
double neg_log_prior(const PathParams& path, const PathPrior* prior);

/// Full objective: likelihood plus prior.
double objective(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                 const SystemConfig& cfg, const Priors& priors);

/// Objective restricted to the listed path slots; the others are treated as absent.
double objective_subset(const ParamVector& params, std::span<const std::size_t> paths,
                        const ReceivedTensor& y, const PilotTensor& pilots, const SystemConfig& cfg,
                        const Priors& priors);

}  // namespace ofdmest
