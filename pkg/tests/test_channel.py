"""Path loss, steering vectors, and cascaded channel assembly."""

import math

import numpy as np
import pytest

from irsnoma.channel import (build_channels, path_loss, spatial_frequency,
                             steering)
from irsnoma.config import (C_LIGHT, GeometrySpec, SystemConfig,
                            generate_scenario)


def oracle_path_loss(f, d, tau):
    # independent arithmetic, written out rather than shared with the module
    return (2.998e8 / (4.0 * math.pi * f * d)) * math.exp(-tau * d / 2.0)


@pytest.mark.parametrize("f,d,tau", [
    (340e9, 15.0, 0.0033),
    (340e9, 5.0, 0.0033),
    (1.0e12, 2.0, 0.01),
    (100e9, 50.0, 0.0),
])
def test_path_loss_matches_oracle(f, d, tau):
    assert path_loss(f, d, tau) == pytest.approx(
        oracle_path_loss(f, d, tau), rel=1e-9)


def test_path_loss_reference_value():
    # frozen from the oracle at (340 GHz, 15 m, 0.0033/m) with c = 2.998e8
    assert path_loss(340e9, 15.0, 0.0033) == pytest.approx(
        4.56354986104661e-06, rel=1e-9)


def test_path_loss_monotone():
    base = path_loss(340e9, 10.0, 0.003)
    assert path_loss(340e9, 20.0, 0.003) < base
    assert path_loss(680e9, 10.0, 0.003) < base
    assert path_loss(340e9, 10.0, 0.03) < base


def test_path_loss_rejects_bad_inputs():
    with pytest.raises(ValueError):
        path_loss(-1.0, 10.0, 0.0)
    with pytest.raises(ValueError):
        path_loss(340e9, 0.0, 0.0)
    with pytest.raises(ValueError):
        path_loss(340e9, 1.0, -0.1)


def test_steering_small_cases():
    np.testing.assert_allclose(steering(4, 0.0), np.full(4, 0.5), atol=1e-15)
    np.testing.assert_allclose(
        steering(2, 1.0), np.array([1.0, -1.0]) / math.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(
        steering(4, 0.5), np.array([1.0, 1j, -1.0, -1j]) / 2.0, atol=1e-15)


def test_steering_unit_norm_and_modulus():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 65))
        psi = float(rng.uniform(-1, 1))
        v = steering(n, psi)
        assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-12)
        np.testing.assert_allclose(np.abs(v), 1 / math.sqrt(n), rtol=1e-12)


def test_spatial_frequency_is_sine_at_half_wavelength():
    f = 340e9
    d0 = C_LIGHT / (2 * f)
    for ang in (-1.2, -0.3, 0.0, 0.7, 1.5):
        assert spatial_frequency(ang, f, d0) == pytest.approx(
            math.sin(ang), rel=1e-12, abs=1e-15)


def _default_setup(seed=11):
    cfg = SystemConfig(n_tx=16, n_irs=8, n_rf=4, users_per_cluster=2)
    scenario = generate_scenario(cfg, GeometrySpec(), seed=seed)
    return cfg, scenario, build_channels(cfg, scenario)


def test_bounce_matrix_rank_one():
    _, _, ch = _default_setup()
    s = np.linalg.svd(ch.h_bar, compute_uv=False)
    assert s[1] < 1e-12 * s[0]


def test_cascade_composition_matches_manual():
    cfg, scenario, ch = _default_setup()
    rng = np.random.default_rng(0)
    t = np.exp(1j * rng.uniform(0, 2 * math.pi, cfg.n_irs))
    for u in (0, 3, 7):
        manual = ch.beta[u] * ((ch.g_rows[u] * t) @ ch.h_bar)
        np.testing.assert_allclose(ch.cascade(u, t), manual, rtol=1e-12)
    manual_e = ch.beta_eve * ((ch.g_eve * t) @ ch.h_bar)
    np.testing.assert_allclose(ch.cascade_eve(t), manual_e, rtol=1e-12)


def test_cascade_amplitude_composition():
    cfg, scenario, ch = _default_setup()
    f, tau = cfg.carrier_freq_hz, cfg.absorption_per_m
    q_bs = path_loss(f, scenario.d_bs_irs, tau)
    d0 = scenario.user_distances[0][0]
    expected = cfg.path_comp * cfg.tx_gain * cfg.rx_gain * q_bs \
        * path_loss(f, d0, tau)
    assert ch.beta[0] == pytest.approx(expected, rel=1e-12)
    # the two hops commute
    alt = cfg.path_comp * cfg.tx_gain * cfg.rx_gain \
        * path_loss(f, d0, tau) * q_bs
    assert ch.beta[0] == pytest.approx(alt, rel=1e-12)


def test_layout_covers_all_users():
    cfg, scenario, ch = _default_setup()
    flat = [u for grp in ch.layout for u in grp]
    assert sorted(flat) == list(range(ch.n_users))
    assert ch.n_users == cfg.total_users
    assert ch.g_rows.shape == (ch.n_users, cfg.n_irs)
    assert ch.beta.shape == (ch.n_users,)
