#include <cmath>
#include <string>

#include "ofdmest/estimator.hpp"

namespace ofdmest {

namespace {

const PhasePrior* phase_prior_of(const PathPrior* prior, Coordinate c) {
  if (prior == nullptr) return nullptr;
  switch (c) {
    case Coordinate::omega1: return prior->omega1 ? &*prior->omega1 : nullptr;
    case Coordinate::omega2: return prior->omega2 ? &*prior->omega2 : nullptr;
    case Coordinate::phi: return prior->phi ? &*prior->phi : nullptr;
    case Coordinate::theta: return prior->theta ? &*prior->theta : nullptr;
    case Coordinate::gain: return nullptr;
  }
  return nullptr;
}

double coordinate_value(const PathParams& p, Coordinate c) {
  switch (c) {
    case Coordinate::omega1: return p.omega1;
    case Coordinate::omega2: return p.omega2;
    case Coordinate::phi: return p.phi;
    case Coordinate::theta: return p.theta;
    case Coordinate::gain: break;
  }
  throw DomainError("coordinate_value: gain is not a scalar phase coordinate");
}

}  // namespace

std::string_view to_string(Coordinate c) {
  switch (c) {
    case Coordinate::gain: return "b";
    case Coordinate::omega1: return "omega1";
    case Coordinate::omega2: return "omega2";
    case Coordinate::theta: return "theta";
    case Coordinate::phi: return "phi";
  }
  return "?";
}

double slice_variable(Coordinate c, double value) {
  return (c == Coordinate::phi || c == Coordinate::theta) ? kPi * std::sin(value) : value;
}

double ObjectiveSlice::value(double x) const {
  double acc = offset;
  for (std::size_t k = 1; k < harmonics.size(); ++k) {
    acc += (harmonics[k] * std::polar(1.0, static_cast<double>(k) * x)).real();
  }
  return acc;
}

TrigSeries ObjectiveSlice::derivative() const {
  TrigSeries s(std::max<std::size_t>(harmonics.size(), 2));
  for (std::size_t k = 1; k < harmonics.size(); ++k) {
    const double kk = static_cast<double>(k);
    s.a[k] = -kk * harmonics[k].imag();
    s.b[k] = -kk * harmonics[k].real();
  }
  return s;
}

FitState::FitState(const ReceivedTensor& y, const PilotTensor& pilots, const SystemConfig& cfg,
                   const Priors& priors, ParamVector params)
    : y_(y), pilots_(pilots), cfg_(cfg), priors_(priors), params_(std::move(params)) {
  cfg_.validate();
  if (!y_.matches(cfg_)) throw DomainError("FitState: received tensor dimensions do not match config");
  if (!pilots_.matches(cfg_)) throw DomainError("FitState: pilot dimensions do not match config");

  pilot_autocorr_.assign(cfg_.n_tx, cplx{});
  for (std::size_t n = 0; n < cfg_.n_subcarriers; ++n) {
    for (std::size_t t = 0; t < cfg_.n_symbols; ++t) {
      const auto x = pilots_.at(n, t);
      for (std::size_t m = 0; m < cfg_.n_tx; ++m) {
        cplx r{};
        for (std::size_t k = 0; k + m < cfg_.n_tx; ++k) r += x[k + m] * std::conj(x[k]);
        pilot_autocorr_[m] += std::conj(r);
      }
    }
  }
  recompute();
}

void FitState::recompute() {
  tx_gain_.assign(params_.size(), {});
  response_.assign(params_.size(), {});
  residual_.assign(y_.data().begin(), y_.data().end());
  for (std::size_t l = 0; l < params_.size(); ++l) {
    rebuild_response(l);
    const cplx b = params_[l].b;
    if (b == cplx{}) continue;
    const auto& g = response_[l];
    for (std::size_t i = 0; i < residual_.size(); ++i) residual_[i] -= b * g[i];
  }
}

void FitState::rebuild_response(std::size_t l) {
  const PathParams& p = params_[l];
  const std::size_t nc = cfg_.n_subcarriers;
  const std::size_t ns = cfg_.n_symbols;
  const std::size_t nr = cfg_.n_rx;
  const std::size_t nt = cfg_.n_tx;

  auto& ax = tx_gain_[l];
  ax.assign(nc * ns, cplx{});
  std::vector<cplx> a(nt);
  for (std::size_t v = 0; v < nt; ++v) a[v] = std::polar(1.0, -kPi * static_cast<double>(v) * std::sin(p.theta));
  for (std::size_t n = 0; n < nc; ++n) {
    for (std::size_t t = 0; t < ns; ++t) {
      const auto x = pilots_.at(n, t);
      cplx acc{};
      for (std::size_t v = 0; v < nt; ++v) acc += a[v] * x[v];
      ax[n * ns + t] = acc;
    }
  }

  std::vector<cplx> e2(ns);
  std::vector<cplx> e3(nr);
  for (std::size_t t = 0; t < ns; ++t) e2[t] = std::polar(1.0, p.omega2 * static_cast<double>(t));
  for (std::size_t u = 0; u < nr; ++u) e3[u] = std::polar(1.0, -kPi * static_cast<double>(u) * std::sin(p.phi));

  auto& g = response_[l];
  g.resize(nc * ns * nr);
  std::size_t i = 0;
  for (std::size_t n = 0; n < nc; ++n) {
    const cplx e1 = std::polar(1.0, p.omega1 * static_cast<double>(n));
    for (std::size_t t = 0; t < ns; ++t) {
      const cplx head = e1 * e2[t] * ax[n * ns + t];
      for (std::size_t u = 0; u < nr; ++u) g[i++] = head * e3[u];
    }
  }
}

double FitState::likelihood() const {
  double acc = 0.0;
  for (const auto& r : residual_) acc += std::norm(r);
  return acc / cfg_.noise_var;
}

double FitState::prior() const { return neg_log_prior(params_, priors_); }

ObjectiveSlice FitState::slice(std::size_t l, Coordinate c) const {
  if (c == Coordinate::gain) throw DomainError("FitState::slice: gain has a closed-form update, not a slice");
  const PathParams& p = params_.at(l);
  const std::size_t nc = cfg_.n_subcarriers;
  const std::size_t ns = cfg_.n_symbols;
  const std::size_t nr = cfg_.n_rx;
  const std::size_t nt = cfg_.n_tx;
  const double scale = -2.0 / cfg_.noise_var;
  const auto& g = response_[l];
  const cplx b = p.b;

  ObjectiveSlice s;
  s.coordinate = c;
  const double x_now = slice_variable(c, coordinate_value(p, c));

  switch (c) {
    case Coordinate::omega1: {
      s.harmonics.assign(std::max<std::size_t>(nc, 2), cplx{});
      std::size_t i = 0;
      for (std::size_t n = 0; n < nc; ++n) {
        cplx acc{};
        for (std::size_t k = 0; k < ns * nr; ++k, ++i) {
          const cplx bg = b * g[i];
          acc += std::conj(residual_[i] + bg) * bg;
        }
        s.harmonics[n] = scale * std::polar(1.0, -x_now * static_cast<double>(n)) * acc;
      }
      break;
    }
    case Coordinate::omega2: {
      std::vector<cplx> acc(ns);
      std::size_t i = 0;
      for (std::size_t n = 0; n < nc; ++n) {
        for (std::size_t t = 0; t < ns; ++t) {
          for (std::size_t u = 0; u < nr; ++u, ++i) {
            const cplx bg = b * g[i];
            acc[t] += std::conj(residual_[i] + bg) * bg;
          }
        }
      }
      s.harmonics.assign(std::max<std::size_t>(ns, 2), cplx{});
      for (std::size_t t = 0; t < ns; ++t) {
        s.harmonics[t] = scale * std::polar(1.0, -x_now * static_cast<double>(t)) * acc[t];
      }
      break;
    }
    case Coordinate::phi: {
      std::vector<cplx> acc(nr);
      std::size_t i = 0;
      for (std::size_t nt_idx = 0; nt_idx < nc * ns; ++nt_idx) {
        for (std::size_t u = 0; u < nr; ++u, ++i) {
          const cplx bg = b * g[i];
          acc[u] += (residual_[i] + bg) * std::conj(bg);
        }
      }
      s.harmonics.assign(std::max<std::size_t>(nr, 2), cplx{});
      for (std::size_t u = 0; u < nr; ++u) {
        s.harmonics[u] = scale * std::polar(1.0, -x_now * static_cast<double>(u)) * acc[u];
      }
      break;
    }
    case Coordinate::theta: {
      // mu = beta_{n,t,u} * sum_v e^{-jvx} x^v with |beta| = |b|.
      std::vector<cplx> e3(nr);
      for (std::size_t u = 0; u < nr; ++u) e3[u] = std::polar(1.0, -kPi * static_cast<double>(u) * std::sin(p.phi));
      std::vector<cplx> e2(ns);
      for (std::size_t t = 0; t < ns; ++t) e2[t] = std::polar(1.0, p.omega2 * static_cast<double>(t));
      const auto& ax = tx_gain_[l];

      std::vector<cplx> acc(nt);
      std::size_t i = 0;
      for (std::size_t n = 0; n < nc; ++n) {
        const cplx e1 = std::polar(1.0, p.omega1 * static_cast<double>(n));
        for (std::size_t t = 0; t < ns; ++t) {
          const cplx head = e1 * e2[t];
          const cplx bax = b * ax[n * ns + t];
          cplx z_proj{};
          for (std::size_t u = 0; u < nr; ++u, ++i) {
            const cplx bg = bax * head * e3[u];
            z_proj += (residual_[i] + bg) * std::conj(e3[u]);
          }
          const cplx w = std::conj(b * head) * z_proj;
          const auto x = pilots_.at(n, t);
          for (std::size_t v = 0; v < nt; ++v) acc[v] += w * std::conj(x[v]);
        }
      }
      s.harmonics.assign(std::max<std::size_t>(nt, 2), cplx{});
      const double gain_energy = std::norm(b) * static_cast<double>(nr);
      for (std::size_t v = 0; v < nt; ++v) {
        s.harmonics[v] = scale * acc[v] - scale * gain_energy * pilot_autocorr_[v];
      }
      break;
    }
    case Coordinate::gain: break;
  }
  s.harmonics[0] = cplx{};

  if (const PhasePrior* pp = phase_prior_of(priors_.find(l), c)) {
    const double mode = slice_variable(c, pp->mode);
    s.harmonics[1] += (-2.0 / pp->var) * std::polar(1.0, -mode);
  }

  double harmonic_now = 0.0;
  for (std::size_t k = 1; k < s.harmonics.size(); ++k) {
    harmonic_now += (s.harmonics[k] * std::polar(1.0, static_cast<double>(k) * x_now)).real();
  }
  s.offset = objective() - harmonic_now;
  return s;
}

cplx FitState::optimal_gain(std::size_t l) const {
  const auto& g = response_.at(l);
  const cplx b = params_[l].b;
  cplx num{};
  double den = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    num += std::conj(g[i]) * (residual_[i] + b * g[i]);
    den += std::norm(g[i]);
  }
  const PathPrior* prior = priors_.find(l);
  if (prior != nullptr && prior->b) {
    const double nu = prior->b->var;
    return (nu * num + cfg_.noise_var * prior->b->mode) / (nu * den + cfg_.noise_var);
  }
  if (den == 0.0) throw DomainError("update_b: path response has zero energy under a flat prior");
  return num / den;
}

void FitState::set_path(std::size_t l, const PathParams& p) {
  const cplx old_b = params_.at(l).b;
  auto& g = response_[l];
  if (old_b != cplx{}) {
    for (std::size_t i = 0; i < g.size(); ++i) residual_[i] += old_b * g[i];
  }
  params_[l] = p;
  rebuild_response(l);
  if (p.b != cplx{}) {
    for (std::size_t i = 0; i < g.size(); ++i) residual_[i] -= p.b * g[i];
  }
}

void FitState::set_gain(std::size_t l, cplx b) {
  const cplx delta = params_.at(l).b - b;
  params_[l].b = b;
  if (delta == cplx{}) return;
  const auto& g = response_[l];
  for (std::size_t i = 0; i < g.size(); ++i) residual_[i] += delta * g[i];
}

void FitState::set_coordinate(std::size_t l, Coordinate c, double value) {
  PathParams p = params_.at(l);
  switch (c) {
    case Coordinate::omega1: p.omega1 = value; break;
    case Coordinate::omega2: p.omega2 = value; break;
    case Coordinate::phi: p.phi = value; break;
    case Coordinate::theta: p.theta = value; break;
    case Coordinate::gain: throw DomainError("set_coordinate: use set_gain for b");
  }
  set_path(l, p);
}

TrigSeries deriv_series_omega1(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                               const SystemConfig& cfg, const Priors& priors, std::size_t path) {
  return FitState(y, pilots, cfg, priors, params).slice(path, Coordinate::omega1).derivative();
}

TrigSeries deriv_series_omega2(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                               const SystemConfig& cfg, const Priors& priors, std::size_t path) {
  return FitState(y, pilots, cfg, priors, params).slice(path, Coordinate::omega2).derivative();
}

TrigSeries deriv_series_sinphi(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                               const SystemConfig& cfg, const Priors& priors, std::size_t path) {
  return FitState(y, pilots, cfg, priors, params).slice(path, Coordinate::phi).derivative();
}

TrigSeries deriv_series_sintheta(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
                                 const SystemConfig& cfg, const Priors& priors, std::size_t path) {
  return FitState(y, pilots, cfg, priors, params).slice(path, Coordinate::theta).derivative();
}

cplx update_b(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& pilots,
              const SystemConfig& cfg, const Priors& priors, std::size_t path) {
  return FitState(y, pilots, cfg, priors, params).optimal_gain(path);
}

}  // namespace ofdmest
