import math

import numpy as np
import pytest

from nhdiff.montecarlo import (
    EnsembleConfig,
    coulomb_gas_simulate,
    evolve_path,
    rng_for_trial,
    sample_evolved,
)


def test_ensemble_config_validation():
    EnsembleConfig(n=4, tau_list=(0.1, 0.5), trials=2, seed=1)
    with pytest.raises(ValueError):
        EnsembleConfig(n=4, tau_list=(0.5, 0.1), trials=2, seed=1)
    with pytest.raises(ValueError):
        EnsembleConfig(n=4, tau_list=(0.0, 0.5), trials=2, seed=1)
    with pytest.raises(ValueError):
        EnsembleConfig(n=4, tau_list=(0.5,), trials=0, seed=1)
    with pytest.raises(ValueError):
        EnsembleConfig(n=0, tau_list=(0.5,), trials=1, seed=1)


def test_increment_statistics():
    # each entry part has mean 0 and variance tau/(2n); 5-sigma z-tests
    n, tau = 400, 0.7
    x = sample_evolved(np.zeros((n, n)), tau, np.random.default_rng(5))
    parts = np.concatenate([x.real.ravel(), x.imag.ravel()])
    target = tau / (2 * n)
    k = parts.size
    z_mean = parts.mean() / math.sqrt(target / k)
    z_var = (parts.var() - target) / (target * math.sqrt(2.0 / k))
    assert abs(z_mean) < 5
    assert abs(z_var) < 5


def test_tau_zero_limit():
    rng = np.random.default_rng(1)
    x0 = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    x = sample_evolved(x0, 1e-12, np.random.default_rng(2))
    assert np.abs(x - x0).max() < 1e-5


def test_determinism():
    x0 = np.zeros((5, 5))
    a = sample_evolved(x0, 0.3, np.random.default_rng(42))
    b = sample_evolved(x0, 0.3, np.random.default_rng(42))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_evolved(x0, 0.3, np.random.default_rng(43)))


def test_path_single_time_matches_sample():
    x0 = np.zeros((4, 4))
    a = evolve_path(x0, [0.7], np.random.default_rng(9))[0]
    b = sample_evolved(x0, 0.7, np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_path_brownian_covariance():
    # cov of an entry part between tau1 < tau2 is tau1/(2n), 5 sigma
    n, tau1, tau2, paths = 30, 0.4, 1.0, 200
    a_parts, b_parts = [], []
    for p in range(paths):
        snaps = evolve_path(np.zeros((n, n)), [tau1, tau2], rng_for_trial(77, p))
        a_parts.append(snaps[0].real.ravel())
        b_parts.append(snaps[1].real.ravel())
    a = np.concatenate(a_parts)
    b = np.concatenate(b_parts)
    cov = np.mean(a * b)
    target = tau1 / (2 * n)
    v1, v2 = tau1 / (2 * n), tau2 / (2 * n)
    sigma = math.sqrt((v1 * v2 + target**2) / a.size)
    assert abs(cov - target) < 5 * sigma


def test_path_validation():
    with pytest.raises(ValueError):
        evolve_path(np.zeros((3, 3)), [0.5, 0.2], np.random.default_rng(0))
    with pytest.raises(ValueError):
        evolve_path(np.zeros((3, 3)), [], np.random.default_rng(0))


def test_spectral_radius_tracks_sqrt_tau():
    # support radius of the evolved zero start concentrates near sqrt(tau)
    n, tau = 600, 0.5
    x = sample_evolved(np.zeros((n, n)), tau, np.random.default_rng(3))
    radius = np.abs(np.linalg.eigvals(x)).max()
    assert abs(radius - math.sqrt(tau)) / math.sqrt(tau) < 0.05


def test_coulomb_zero_horizon():
    cloud = coulomb_gas_simulate(5, 1e-3, 0.0, np.random.default_rng(0))
    assert np.all(cloud.positions == 0)
    assert cloud.time == 0.0


def test_coulomb_pair_gap_positive():
    cloud = coulomb_gas_simulate(2, 1e-4, 0.05, np.random.default_rng(8))
    assert abs(cloud.positions[0] - cloud.positions[1]) > 0


def test_coulomb_determinism():
    a = coulomb_gas_simulate(10, 1e-3, 0.05, np.random.default_rng(4))
    b = coulomb_gas_simulate(10, 1e-3, 0.05, np.random.default_rng(4))
    assert np.array_equal(a.positions, b.positions)


def test_coulomb_center_of_mass_is_brownian():
    # pairwise drift cancels in the mean, so the center of mass is a plain
    # 2-d Brownian motion with per-component variance horizon/n; 5 sigma
    n, horizon, runs = 10, 0.2, 200
    comps = []
    for k in range(runs):
        cloud = coulomb_gas_simulate(n, 1e-3, horizon, np.random.default_rng(1000 + k))
        cm = cloud.positions.mean()
        comps.extend([cm.real, cm.imag])
    comps = np.asarray(comps)
    est = comps.var(ddof=1)
    target = horizon / n
    sigma = target * math.sqrt(2.0 / (len(comps) - 1))
    assert abs(est - target) < 5 * sigma


def test_coulomb_validation():
    with pytest.raises(ValueError):
        coulomb_gas_simulate(1, 1e-3, 0.1, np.random.default_rng(0))
    with pytest.raises(ValueError):
        coulomb_gas_simulate(4, -1e-3, 0.1, np.random.default_rng(0))
    with pytest.raises(ValueError):
        coulomb_gas_simulate(4, 1e-3, 0.1, np.random.default_rng(0), regularization=0.0)
