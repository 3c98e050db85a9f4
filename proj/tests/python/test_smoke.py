import json
import math

import numpy as np
import pytest

import ofdmest


def small_system():
    cfg = ofdmest.SystemConfig()
    cfg.n_subcarriers = 16
    cfg.n_symbols = 8
    cfg.n_rx = 8
    cfg.n_tx = 8
    cfg.noise_var = 1e-6
    return cfg


def test_roots_of_cosine():
    s = ofdmest.TrigSeries([0.0, 1.0], [0.0, 0.0])
    for method in ("chebyshev", "laurent"):
        r = sorted(ofdmest.roots(s, method))
        assert len(r) == 2
        assert r[0] == pytest.approx(-math.pi / 2, abs=1e-12)
        assert r[1] == pytest.approx(math.pi / 2, abs=1e-12)
    assert ofdmest.evaluate(s, 0.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ofdmest.roots(s, "newton")


def test_steering_is_unit_modulus():
    a = np.asarray(ofdmest.steering(0.3, 8))
    assert a.shape == (8,)
    assert np.allclose(np.abs(a), 1.0)


def test_noise_free_synthesis_matches_mean():
    cfg = small_system()
    x = ofdmest.sweep_precoder_pilots(cfg)
    assert x.shape == (16, 8, 8)
    p = [ofdmest.PathParams(0.05 + 0.01j, -0.4, 0.7, 0.2, -0.3)]
    mu = ofdmest.model_mean(p, x, cfg.n_rx)
    y = ofdmest.synthesize_received(p, x, cfg, 1, noise=False)
    assert np.array_equal(mu, y)
    assert ofdmest.neg_log_likelihood(p, y, x, cfg) == pytest.approx(0.0, abs=1e-10)


def test_estimate_recovers_single_path():
    cfg = small_system()
    rng = np.random.default_rng(0)
    x = (rng.standard_normal((16, 8, 8)) + 1j * rng.standard_normal((16, 8, 8))) * 0.1
    truth = [ofdmest.PathParams(0.05 + 0.01j, -0.4, 0.7, 0.2, -0.3)]
    y = ofdmest.synthesize_received(truth, x, cfg, 3, noise=False)
    opt = ofdmest.OptimizerConfig()
    opt.max_paths = 1
    opt.max_iterations = 2000
    opt.eps_var = 1e-12
    opt.eps_obj = 1e-15
    res = ofdmest.estimate_params(y, x, cfg, opt)
    assert res.num_paths == 1
    est = res.params[0]
    assert abs(est.b - truth[0].b) < 1e-6
    assert est.omega1 == pytest.approx(truth[0].omega1, abs=1e-6)
    assert est.omega2 == pytest.approx(truth[0].omega2, abs=1e-6)
    assert est.phi == pytest.approx(truth[0].phi, abs=1e-6)
    assert est.theta == pytest.approx(truth[0].theta, abs=1e-6)
    report = ofdmest.greedy_match(truth, res.params)
    assert report.precision == 1.0 and report.recall == 1.0


def test_select_path_count():
    assert ofdmest.select_path_count([10.0, 5.0, 1.0, 0.9], 0.01) >= 1
    assert ofdmest.select_path_count([3.0, 3.0, 3.0], 0.5) == 3


def test_trace_default_environment():
    env = ofdmest.default_environment_json()
    json.loads(env)
    paths = ofdmest.trace_paths(env)
    assert any(p.is_los for p in paths)
    for p in paths:
        assert p.distance > 0.0
        assert (p.reflection_point is None) == p.is_los


def test_invalid_config_raises():
    cfg = ofdmest.SystemConfig()
    cfg.n_rx = 0
    with pytest.raises(ValueError):
        cfg.validate()
    with pytest.raises(ofdmest.DomainError):
        cfg.validate()
