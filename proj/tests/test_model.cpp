#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ofdmest/model.hpp"
#include "support.hpp"

using namespace ofdmest;
using namespace ofdmest::testing;

TEST_CASE("steering vector values") {
  const auto a0 = steering(0.0, 4);
  for (const auto& v : a0) CHECK(std::abs(v - cplx(1, 0)) < 1e-15);

  const auto a1 = steering(kPi / 6, 2);
  CHECK(std::abs(a1[0] - cplx(1, 0)) < 1e-15);
  CHECK(std::abs(a1[1] - cplx(0, -1)) < 1e-15);

  const auto a2 = steering(-kPi / 6, 3);
  CHECK(std::abs(a2[1] - cplx(0, 1)) < 1e-15);
  CHECK(std::abs(a2[2] - cplx(-1, 0)) < 1e-15);

  CHECK_THROWS_AS(steering(kPi / 2, 4), DomainError);
  CHECK_THROWS_AS(steering(0.1, 0), DomainError);
}

TEST_CASE("steering vector is unit modulus with unit first entry") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> angle(-1.5, 1.5);
  for (int i = 0; i < 100; ++i) {
    const auto a = steering(angle(rng), 1 + static_cast<std::size_t>(i % 17));
    CHECK(a[0] == cplx(1, 0));
    for (const auto& v : a) CHECK(std::abs(std::abs(v) - 1.0) < 1e-14);
  }
}

TEST_CASE("wrap_phase lands in (-pi, pi]") {
  CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
  CHECK(phase_diff(3.0, -3.0) == doctest::Approx(6.0 - 2 * kPi));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> base(-kPi, kPi);
  std::uniform_int_distribution<int> turns(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    const double x = base(rng);
    const double w = wrap_phase(x + 2 * kPi * turns(rng));
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::fabs(phase_diff(w, x)) < 1e-9);
  }
}

TEST_CASE("mean_mu examples") {
  PilotTensor ones(3, 2, 4);
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t v = 0; v < 4; ++v) ones(n, t, v) = 1.0;

  PathParams unit;
  unit.b = 1.0;
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t u = 0; u < 2; ++u) CHECK(std::abs(mean_mu({unit}, ones, n, t, u) - cplx(4, 0)) < 1e-14);

  PathParams off = unit;
  off.b = 0.0;
  CHECK(std::abs(mean_mu({off}, ones, 1, 1, 1)) == 0.0);

  std::mt19937_64 rng(3);
  PathParams p = random_path(rng);
  PathParams q = p;
  q.b = -p.b;
  for (std::size_t n = 0; n < 3; ++n) CHECK(std::abs(mean_mu({p, q}, ones, n, 1, 1)) < 1e-14);
}

TEST_CASE("mean_mu and model_mean match the triple-loop reference") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng, false, 3, small_config(4, 3, 3, 2));
    const ReceivedTensor mu = model_mean(in.params, in.pilots, in.cfg.n_rx);
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t u = 0; u < 3; ++u) {
          const cplx ref = reference_mu(in.params, in.pilots, n, t, u);
          CHECK(std::abs(mean_mu(in.params, in.pilots, n, t, u) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
          CHECK(std::abs(mu(n, t, u) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
        }
  }
}

TEST_CASE("channel matrix") {
  SystemConfig cfg = small_config(2, 2, 3, 2);
  PathParams unit;
  unit.b = 1.0;
  const auto h = channel_matrix({unit}, cfg, 1, 1);
  CHECK(h.rows() == 3);
  CHECK(h.cols() == 2);
  for (Eigen::Index i = 0; i < h.size(); ++i) CHECK(std::abs(h(i) - cplx(1, 0)) < 1e-15);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng, false, 2, small_config(3, 3, 4, 3));
    const auto one = channel_matrix({in.params[0]}, in.cfg, 2, 1);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(one);
    CHECK(svd.singularValues()(1) < 1e-12 * svd.singularValues()(0));

    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t t = 0; t < 3; ++t) {
        const auto H = channel_matrix(in.params, in.cfg, n, t);
        Eigen::VectorXcd x(3);
        for (std::size_t v = 0; v < 3; ++v) x(static_cast<Eigen::Index>(v)) = in.pilots(n, t, v);
        const Eigen::VectorXcd hx = H * x;
        for (std::size_t u = 0; u < 4; ++u) {
          const cplx ref = mean_mu(in.params, in.pilots, n, t, u);
          CHECK(std::abs(hx(static_cast<Eigen::Index>(u)) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
        }
      }
  }
}

TEST_CASE("synthesize_received") {
  std::mt19937_64 rng(6);
  Instance in = random_instance(rng, false, 2, small_config(4, 3, 2, 2));
  const auto clean = synthesize_received(in.params, in.pilots, in.cfg, 11, NoiseMode::disabled);
  const auto mu = model_mean(in.params, in.pilots, in.cfg.n_rx);
  for (std::size_t i = 0; i < clean.size(); ++i) CHECK(clean.data()[i] == mu.data()[i]);

  const auto a = synthesize_received(in.params, in.pilots, in.cfg, 11);
  const auto b = synthesize_received(in.params, in.pilots, in.cfg, 11);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));

  SystemConfig big = small_config(25, 25, 16, 2);
  big.noise_var = 1e-8;
  const PilotTensor x = random_pilots(rng, big);
  const auto noise = synthesize_received({}, x, big, 12);
  double power = 0.0;
  for (const auto& v : noise.data()) power += std::norm(v);
  power /= static_cast<double>(noise.size());
  CHECK(std::fabs(power / big.noise_var - 1.0) < 0.05);
}

TEST_CASE("neg_log_likelihood") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    Instance in = random_instance(rng, false, 1 + trial % 3, small_config(3, 4, 3, 2));
    const auto y = synthesize_received(in.params, in.pilots, in.cfg, 0, NoiseMode::disabled);
    const double scale = neg_log_likelihood({}, y, in.pilots, in.cfg);
    CHECK(neg_log_likelihood(in.params, y, in.pilots, in.cfg) <= 1e-10 * scale);
  }

  Instance in = random_instance(rng, false, 1, small_config(2, 2, 2, 2));
  const double ref = reference_likelihood(in.params, in.y, in.pilots, in.cfg.noise_var);
  CHECK(neg_log_likelihood(in.params, in.y, in.pilots, in.cfg) == doctest::Approx(ref).epsilon(1e-12));

  double energy = 0.0;
  for (const auto& v : in.y.data()) energy += std::norm(v);
  CHECK(neg_log_likelihood({PathParams{}}, in.y, in.pilots, in.cfg) == doctest::Approx(energy / in.cfg.noise_var));
}

TEST_CASE("neg_log_prior") {
  std::mt19937_64 rng(8);
  Instance in = random_instance(rng, true, 2);
  ParamVector at_modes(2);
  for (std::size_t l = 0; l < 2; ++l) {
    const PathPrior& p = in.priors.paths[l];
    at_modes[l] = {p.b->mode, p.omega1->mode, p.omega2->mode, p.phi->mode, p.theta->mode};
  }
  CHECK(neg_log_prior(at_modes, in.priors) == 0.0);
  CHECK(neg_log_prior(in.params, Priors{}) == 0.0);

  Priors one;
  PathPrior pp;
  pp.omega1 = PhasePrior{0.7, 1.0};
  one.paths.push_back(pp);
  PathParams p;
  p.omega1 = 0.7 + kPi;
  CHECK(neg_log_prior({p}, one) == doctest::Approx(4.0));

  PhasePrior bad{0.0, 0.0};
  Priors invalid;
  PathPrior ip;
  ip.phi = bad;
  invalid.paths.push_back(ip);
  CHECK_THROWS_AS(invalid.validate(), DomainError);
}

TEST_CASE("objective is invariant to path order and subsets use the listed paths") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Instance in = random_instance(rng, false, 3);
    const double f = objective(in.params, in.y, in.pilots, in.cfg, {});
    ParamVector rev(in.params.rbegin(), in.params.rend());
    CHECK(objective(rev, in.y, in.pilots, in.cfg, {}) == doctest::Approx(f).epsilon(1e-12));

    const std::vector<std::size_t> first = {0};
    CHECK(objective_subset(in.params, first, in.y, in.pilots, in.cfg, {}) ==
          doctest::Approx(objective({in.params[0]}, in.y, in.pilots, in.cfg, {})).epsilon(1e-12));
  }
}

TEST_CASE("config validation names the field") {
  SystemConfig cfg;
  cfg.n_rx = 0;
  try {
    cfg.validate();
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("n_rx") != std::string::npos);
  }
}
