#pragma once

// Random instances and independent reference implementations shared by the
// unit tests and the acceptance binary.

#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include "ofdmest/estimator.hpp"
#include "ofdmest/model.hpp"
#include "ofdmest/trigroots.hpp"

namespace ofdmest::testing {

struct Instance {
  SystemConfig cfg;
  PilotTensor pilots;
  ReceivedTensor y;
  ParamVector params;
  Priors priors;
};

inline cplx random_complex(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng)};
}

inline PathParams random_path(std::mt19937_64& rng, double gain_scale = 1.0) {
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  std::uniform_real_distribution<double> angle(-1.3, 1.3);
  PathParams p;
  p.b = random_complex(rng, gain_scale);
  p.omega1 = phase(rng);
  p.omega2 = phase(rng);
  p.phi = angle(rng);
  p.theta = angle(rng);
  return p;
}

inline SystemConfig small_config(std::size_t nc = 8, std::size_t ns = 4, std::size_t nr = 4, std::size_t nt = 2) {
  SystemConfig cfg;
  cfg.n_subcarriers = nc;
  cfg.n_symbols = ns;
  cfg.n_rx = nr;
  cfg.n_tx = nt;
  cfg.noise_var = 1.0;
  return cfg;
}

inline PilotTensor random_pilots(std::mt19937_64& rng, const SystemConfig& cfg) {
  PilotTensor x(cfg.n_subcarriers, cfg.n_symbols, cfg.n_tx);
  for (std::size_t n = 0; n < cfg.n_subcarriers; ++n) {
    for (std::size_t t = 0; t < cfg.n_symbols; ++t) {
      for (std::size_t v = 0; v < cfg.n_tx; ++v) x(n, t, v) = random_complex(rng, 0.7);
    }
  }
  return x;
}

inline Priors random_priors(std::mt19937_64& rng, std::size_t paths) {
  std::uniform_real_distribution<double> var(0.2, 3.0);
  Priors pr;
  for (std::size_t l = 0; l < paths; ++l) {
    const PathParams mode = random_path(rng);
    PathPrior p;
    p.b = GainPrior{mode.b, var(rng)};
    p.omega1 = PhasePrior{mode.omega1, var(rng)};
    p.omega2 = PhasePrior{mode.omega2, var(rng)};
    p.phi = PhasePrior{mode.phi, var(rng)};
    p.theta = PhasePrior{mode.theta, var(rng)};
    pr.paths.push_back(p);
  }
  return pr;
}

/// Random data y (not generated by the model), so stationary points are generic.
inline Instance random_instance(std::mt19937_64& rng, bool with_priors, std::size_t paths = 2,
                                SystemConfig cfg = small_config()) {
  Instance in;
  in.cfg = cfg;
  in.pilots = random_pilots(rng, cfg);
  in.y = ReceivedTensor(cfg.n_subcarriers, cfg.n_symbols, cfg.n_rx);
  for (auto& v : in.y.data()) v = random_complex(rng, 2.0);
  for (std::size_t l = 0; l < paths; ++l) in.params.push_back(random_path(rng));
  if (with_priors) in.priors = random_priors(rng, paths);
  return in;
}

/// Triple-loop reference of the noise-free mean.
inline cplx reference_mu(const ParamVector& params, const PilotTensor& x, std::size_t n, std::size_t t,
                         std::size_t u) {
  cplx acc{};
  for (const auto& p : params) {
    cplx tx{};
    for (std::size_t v = 0; v < x.n_tx(); ++v) {
      tx += std::exp(cplx(0.0, -kPi * static_cast<double>(v) * std::sin(p.theta))) * x(n, t, v);
    }
    acc += p.b * std::exp(cplx(0.0, p.omega1 * static_cast<double>(n))) *
           std::exp(cplx(0.0, p.omega2 * static_cast<double>(t))) *
           std::exp(cplx(0.0, -kPi * static_cast<double>(u) * std::sin(p.phi))) * tx;
  }
  return acc;
}

inline double reference_likelihood(const ParamVector& params, const ReceivedTensor& y, const PilotTensor& x,
                                   double noise_var) {
  double acc = 0.0;
  for (std::size_t n = 0; n < y.n_subcarriers(); ++n) {
    for (std::size_t t = 0; t < y.n_symbols(); ++t) {
      for (std::size_t u = 0; u < y.n_rx(); ++u) acc += std::norm(y(n, t, u) - reference_mu(params, x, n, t, u));
    }
  }
  return acc / noise_var;
}

/// Sign-change scan on a uniform grid over (-pi, pi] refined by bisection.
inline std::vector<double> grid_roots(const TrigSeries& s, std::size_t points = 100000) {
  std::vector<double> out;
  const double h = 2.0 * kPi / static_cast<double>(points);
  double lo = -kPi;
  double f_lo = evaluate(s, lo);
  for (std::size_t i = 1; i <= points; ++i) {
    const double hi = -kPi + h * static_cast<double>(i);
    const double f_hi = evaluate(s, hi);
    if (f_hi == 0.0) {
      out.push_back(hi);
    } else if (f_lo != 0.0 && (f_lo > 0) != (f_hi > 0)) {
      double a = lo;
      double b = hi;
      double fa = f_lo;
      for (int k = 0; k < 80 && b - a > 1e-15; ++k) {
        const double m = 0.5 * (a + b);
        const double fm = evaluate(s, m);
        if ((fm > 0) == (fa > 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      out.push_back(0.5 * (a + b));
    }
    lo = hi;
    f_lo = f_hi;
  }
  return out;
}

inline TrigSeries random_series(std::mt19937_64& rng, std::size_t terms) {
  std::normal_distribution<double> n(0.0, 1.0);
  TrigSeries s(terms);
  for (std::size_t k = 0; k < terms; ++k) {
    s.a[k] = n(rng);
    s.b[k] = k == 0 ? 0.0 : n(rng);
  }
  return s;
}

inline double read_coordinate(const PathParams& p, Coordinate c) {
  switch (c) {
    case Coordinate::omega1: return p.omega1;
    case Coordinate::omega2: return p.omega2;
    case Coordinate::phi: return p.phi;
    case Coordinate::theta: return p.theta;
    case Coordinate::gain: break;
  }
  return 0.0;
}

inline void write_coordinate(PathParams& p, Coordinate c, double v) {
  switch (c) {
    case Coordinate::omega1: p.omega1 = v; break;
    case Coordinate::omega2: p.omega2 = v; break;
    case Coordinate::phi: p.phi = v; break;
    case Coordinate::theta: p.theta = v; break;
    case Coordinate::gain: break;
  }
}

inline TrigSeries derivative_series(Coordinate c, const Instance& in, std::size_t l) {
  switch (c) {
    case Coordinate::omega1: return deriv_series_omega1(in.params, in.y, in.pilots, in.cfg, in.priors, l);
    case Coordinate::omega2: return deriv_series_omega2(in.params, in.y, in.pilots, in.cfg, in.priors, l);
    case Coordinate::phi: return deriv_series_sinphi(in.params, in.y, in.pilots, in.cfg, in.priors, l);
    case Coordinate::theta: return deriv_series_sintheta(in.params, in.y, in.pilots, in.cfg, in.priors, l);
    case Coordinate::gain: break;
  }
  return TrigSeries(1);
}

struct GradientCheck {
  double worst_relative = 0.0;
  std::size_t points = 0;
};

/// Compares the derivative series with central differences of the full objective along one
/// coordinate at `points` random positions. For angles the series is in pi*sin(angle), so the
/// finite difference along the angle is divided by pi*cos(angle).
inline GradientCheck check_gradient(std::mt19937_64& rng, Instance in, std::size_t l, Coordinate c,
                                    std::size_t points, double step = 1e-6) {
  const bool angle = c == Coordinate::phi || c == Coordinate::theta;
  std::uniform_real_distribution<double> where(angle ? -1.3 : -kPi, angle ? 1.3 : kPi);
  const TrigSeries series = derivative_series(c, in, l);
  const auto f_at = [&](double v) {
    ParamVector p = in.params;
    write_coordinate(p[l], c, v);
    return objective(p, in.y, in.pilots, in.cfg, in.priors);
  };
  GradientCheck out;
  for (std::size_t i = 0; i < points; ++i) {
    const double v = where(rng);
    double fd = (f_at(v + step) - f_at(v - step)) / (2.0 * step);
    double x = v;
    if (angle) {
      fd /= kPi * std::cos(v);
      x = kPi * std::sin(v);
    }
    const double g = evaluate(series, x);
    const double denom = std::max({std::fabs(fd), std::fabs(g), 1e-3 * series.magnitude()});
    out.worst_relative = std::max(out.worst_relative, std::fabs(fd - g) / denom);
    ++out.points;
  }
  return out;
}

}  // namespace ofdmest::testing
