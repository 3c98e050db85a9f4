#include "ofdmest/model.hpp"

#include <cmath>
#include <random>
#include <string>

namespace ofdmest {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw DomainError(std::string(field) + ": " + what);
}

std::vector<cplx> phase_ramp(double step, std::size_t count) {
  std::vector<cplx> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = std::polar(1.0, step * static_cast<double>(k));
  return out;
}

// a(theta)^T x_{n,t} for every (n, t).
std::vector<cplx> transmit_gain(double theta, const PilotTensor& pilots) {
  const auto a = phase_ramp(-kPi * std::sin(theta), pilots.n_tx());
  std::vector<cplx> out(pilots.n_subcarriers() * pilots.n_symbols());
  for (std::size_t n = 0; n < pilots.n_subcarriers(); ++n) {
    for (std::size_t t = 0; t < pilots.n_symbols(); ++t) {
      const auto x = pilots.at(n, t);
      cplx acc{};
      for (std::size_t v = 0; v < x.size(); ++v) acc += a[v] * x[v];
      out[n * pilots.n_symbols() + t] = acc;
    }
  }
  return out;
}

double phase_penalty(double mode, double value, double var) {
  return std::norm(std::polar(1.0, mode) - std::polar(1.0, value)) / var;
}

}  // namespace

double wrap_phase(double x) {
  if (x > -kPi && x <= kPi) return x;
  double r = std::remainder(x, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

void SystemConfig::validate() const {
  require(n_subcarriers >= 1, "n_subcarriers", "must be >= 1");
  require(n_symbols >= 1, "n_symbols", "must be >= 1");
  require(n_rx >= 1, "n_rx", "must be >= 1");
  require(n_tx >= 1, "n_tx", "must be >= 1");
  require(subcarrier_spacing > 0 && std::isfinite(subcarrier_spacing), "subcarrier_spacing", "must be > 0");
  require(symbol_time > 0 && std::isfinite(symbol_time), "symbol_time", "must be > 0");
  require(carrier_freq > 0 && std::isfinite(carrier_freq), "carrier_freq", "must be > 0");
  require(noise_var > 0 && std::isfinite(noise_var), "noise_var", "must be > 0");
  require(tx_power > 0 && std::isfinite(tx_power), "tx_power", "must be > 0");
}

bool PathParams::in_domain() const {
  const auto open_half = [](double a) { return a > -kPi / 2 && a < kPi / 2; };
  const auto half_open = [](double a) { return a > -kPi && a <= kPi; };
  return std::isfinite(b.real()) && std::isfinite(b.imag()) && half_open(omega1) && half_open(omega2) &&
         open_half(phi) && open_half(theta);
}

PilotTensor::PilotTensor(std::size_t n_subcarriers, std::size_t n_symbols, std::size_t n_tx)
    : n_subcarriers_(n_subcarriers), n_symbols_(n_symbols), n_tx_(n_tx),
      data_(n_subcarriers * n_symbols * n_tx) {}

ReceivedTensor::ReceivedTensor(std::size_t n_subcarriers, std::size_t n_symbols, std::size_t n_rx)
    : n_subcarriers_(n_subcarriers), n_symbols_(n_symbols), n_rx_(n_rx),
      data_(n_subcarriers * n_symbols * n_rx) {}

void Priors::validate() const {
  for (std::size_t l = 0; l < paths.size(); ++l) {
    const auto& p = paths[l];
    const auto bad = [l](const char* field) {
      throw DomainError("priors[" + std::to_string(l) + "]." + field + ": variance must be > 0");
    };
    if (p.b && !(p.b->var > 0)) bad("b");
    if (p.omega1 && !(p.omega1->var > 0)) bad("omega1");
    if (p.omega2 && !(p.omega2->var > 0)) bad("omega2");
    if (p.phi && !(p.phi->var > 0)) bad("phi");
    if (p.theta && !(p.theta->var > 0)) bad("theta");
  }
}

std::vector<cplx> steering(double angle, std::size_t n_antennas) {
  if (!(angle > -kPi / 2 && angle < kPi / 2)) {
    throw DomainError("steering: angle must lie in (-pi/2, pi/2)");
  }
  if (n_antennas == 0) throw DomainError("steering: n_antennas must be >= 1");
  return phase_ramp(-kPi * std::sin(angle), n_antennas);
}

cplx mean_mu(const ParamVector& params, const PilotTensor& pilots, std::size_t n, std::size_t t,
             std::size_t u) {
  const auto x = pilots.at(n, t);
  cplx mu{};
  for (const auto& p : params) {
    if (!p.active()) continue;
    const auto a = steering(p.theta, pilots.n_tx());
    cplx ax{};
    for (std::size_t v = 0; v < x.size(); ++v) ax += a[v] * x[v];
    const double phase = p.omega1 * static_cast<double>(n) + p.omega2 * static_cast<double>(t) -
                         kPi * static_cast<double>(u) * std::sin(p.phi);
    mu += p.b * std::polar(1.0, phase) * ax;
  }
  return mu;
}

Eigen::MatrixXcd channel_matrix(const ParamVector& params, const SystemConfig& cfg, std::size_t n,
                                std::size_t t) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(cfg.n_rx),
                                              static_cast<Eigen::Index>(cfg.n_tx));
  for (const auto& p : params) {
    if (!p.active()) continue;
    const auto ar = steering(p.phi, cfg.n_rx);
    const auto at = steering(p.theta, cfg.n_tx);
    const cplx g = p.b * std::polar(1.0, p.omega1 * static_cast<double>(n) +
                                             p.omega2 * static_cast<double>(t));
    const Eigen::Map<const Eigen::VectorXcd> vr(ar.data(), static_cast<Eigen::Index>(ar.size()));
    const Eigen::Map<const Eigen::VectorXcd> vt(at.data(), static_cast<Eigen::Index>(at.size()));
    h += g * vr * vt.transpose();
  }
  return h;
}

std::vector<cplx> path_response(const PathParams& path, const PilotTensor& pilots, std::size_t n_rx) {
  const std::size_t nc = pilots.n_subcarriers();
  const std::size_t ns = pilots.n_symbols();
  const auto e1 = phase_ramp(path.omega1, nc);
  const auto e2 = phase_ramp(path.omega2, ns);
  const auto e3 = phase_ramp(-kPi * std::sin(path.phi), n_rx);
  const auto ax = transmit_gain(path.theta, pilots);
  std::vector<cplx> out(nc * ns * n_rx);
  auto it = out.begin();
  for (std::size_t n = 0; n < nc; ++n) {
    for (std::size_t t = 0; t < ns; ++t) {
      const cplx g = e1[n] * e2[t] * ax[n * ns + t];
      for (std::size_t u = 0; u < n_rx; ++u) *it++ = g * e3[u];
    }
  }
  return out;
}

ReceivedTensor model_mean(const ParamVector& params, const PilotTensor& pilots, std::size_t n_rx) {
  ReceivedTensor mu(pilots.n_subcarriers(), pilots.n_symbols(), n_rx);
  auto out = mu.data();
  for (const auto& p : params) {
    if (!p.active()) continue;
    const auto g = path_response(p, pilots, n_rx);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] += p.b * g[i];
  }
  return mu;
}

ReceivedTensor synthesize_received(const ParamVector& params, const PilotTensor& pilots,
                                   const SystemConfig& cfg, std::uint64_t noise_seed, NoiseMode noise) {
  if (!pilots.matches(cfg)) throw DomainError("synthesize_received: pilot dimensions do not match config");
  ReceivedTensor y = model_mean(params, pilots, cfg.n_rx);
  if (noise == NoiseMode::enabled) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(cfg.noise_var / 2.0));
    for (auto& v : y.data()) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      v += cplx{re, im};
    }
  }
  return y;
}

double neg_log_likelihood(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                          const SystemConfig& cfg) {
  if (!y.matches(cfg) || !pilots.matches(cfg)) {
    throw DomainError("neg_log_likelihood: tensor dimensions do not match config");
  }
  const ReceivedTensor mu = model_mean(params, pilots, cfg.n_rx);
  double acc = 0.0;
  const auto yd = y.data();
  const auto md = mu.data();
  for (std::size_t i = 0; i < yd.size(); ++i) acc += std::norm(yd[i] - md[i]);
  return acc / cfg.noise_var;
}

double neg_log_prior(const PathParams& path, const PathPrior* prior) {
  if (prior == nullptr) return 0.0;
  double acc = 0.0;
  if (prior->omega1) acc += phase_penalty(prior->omega1->mode, path.omega1, prior->omega1->var);
  if (prior->omega2) acc += phase_penalty(prior->omega2->mode, path.omega2, prior->omega2->var);
  if (prior->phi) {
    acc += phase_penalty(kPi * std::sin(prior->phi->mode), kPi * std::sin(path.phi), prior->phi->var);
  }
  if (prior->theta) {
    acc += phase_penalty(kPi * std::sin(prior->theta->mode), kPi * std::sin(path.theta), prior->theta->var);
  }
  if (prior->b) acc += std::norm(path.b - prior->b->mode) / prior->b->var;
  return acc;
}

double neg_log_prior(const ParamVector& params, const Priors& priors) {
  double acc = 0.0;
  for (std::size_t l = 0; l < params.size(); ++l) acc += neg_log_prior(params[l], priors.find(l));
  return acc;
}

double objective(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                 const SystemConfig& cfg, const Priors& priors) {
  return neg_log_likelihood(params, y, pilots, cfg) + neg_log_prior(params, priors);
}

double objective_subset(const ParamVector& params, std::span<const std::size_t> paths,
                        const ReceivedTensor& y, const PilotTensor& pilots, const SystemConfig& cfg,
                        const Priors& priors) {
  ParamVector chosen;
  chosen.reserve(paths.size());
  double prior = 0.0;
  for (const std::size_t l : paths) {
    if (l >= params.size()) throw DomainError("objective_subset: path index out of range");
    chosen.push_back(params[l]);
    prior += neg_log_prior(params[l], priors.find(l));
  }
  return neg_log_likelihood(chosen, y, pilots, cfg) + prior;
}

}  // namespace ofdmest
