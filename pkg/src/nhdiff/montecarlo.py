"""Monte-Carlo sampling of the matrix diffusion and the interacting
Coulomb-cloud SDE for the eigenvalues.

The matrix process adds independent Brownian increments to every entry:
each real/imaginary part acquires variance tau/(2n) after time tau, so
sampling at any time is exact (no discretization error).  The particle
system is integrated with Euler-Maruyama and a regularized pairwise drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import as_matrix
from .errors import IntegrationBlowupError


@dataclass(frozen=True)
class EnsembleConfig:
    """Sampling plan: dimension, snapshot times, trial count, base seed."""

    n: int
    tau_list: tuple
    trials: int
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        taus = tuple(float(t) for t in self.tau_list)
        if not taus or taus[0] <= 0:
            raise ValueError("tau_list must contain positive times")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError(f"tau_list must be strictly increasing, got {taus}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        object.__setattr__(self, "tau_list", taus)


@dataclass
class ParticleCloud:
    """Positions of the interacting particles at a given time."""

    positions: np.ndarray
    time: float


def rng_for_trial(seed: int, trial: int) -> np.random.Generator:
    """Per-trial substream: seed XOR trial index.  Trials are reproducible
    independently of scheduling order."""
    return np.random.default_rng((int(seed) ^ int(trial)) & 0xFFFFFFFFFFFFFFFF)


def sample_evolved(x0, tau: float, rng: np.random.Generator) -> np.ndarray:
    """Draw X(tau) = X0 + sqrt(tau/(2n)) (G_re + i G_im) with i.i.d. standard
    normal matrices G_re, G_im.  Exact at any tau."""
    m = as_matrix(x0)
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    n = m.shape[0]
    scale = np.sqrt(tau / (2.0 * n))
    g_re = rng.standard_normal((n, n))
    g_im = rng.standard_normal((n, n))
    return m + scale * (g_re + 1j * g_im)


def evolve_path(x0, tau_list, rng: np.random.Generator) -> list[np.ndarray]:
    """Snapshots X(tau_1), X(tau_2), ... of a single Brownian path.

    Consecutive increments are independent Gaussians with per-part variance
    (tau_k - tau_{k-1})/(2n); with a single time point this reduces exactly
    to sample_evolved.
    """
    m = as_matrix(x0)
    taus = tuple(float(t) for t in tau_list)
    if not taus or taus[0] <= 0 or any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError(f"tau_list must be strictly increasing and positive, got {taus}")
    out = []
    current = m
    prev = 0.0
    for tau in taus:
        current = sample_evolved(current, tau - prev, rng)
        prev = tau
        out.append(current)
    return out


def coulomb_gas_simulate(
    n: int,
    step: float,
    horizon: float,
    rng: np.random.Generator,
    regularization: float = 1e-6,
) -> ParticleCloud:
    """Euler-Maruyama integration of the two-dimensional Coulomb cloud

        d lambda_i = dB_i^(2) + sum_{j != i} (lambda_i - lambda_j)
                                 / |lambda_i - lambda_j|^2 dt

    started from all particles at the origin, with the pairwise denominator
    clipped below at regularization^2.  dB^(2) is a complex Brownian motion
    with variance dt per real component.

    Step-size guidance: the regularized drift of a pair at distance d moves
    each particle by step/d per step, so the scheme cannot overshoot only if
    step < d^2; the worst-case bound is step * n < regularization^2.  In
    practice the mutual repulsion keeps gaps far above the regularizer for
    n >= 50, and step of order 1e-3 .. 1e-4 integrates stably.
    """
    if n < 2:
        raise ValueError(f"need at least 2 particles, got {n}")
    if step <= 0 or horizon < 0 or regularization <= 0:
        raise ValueError("step and regularization must be > 0, horizon >= 0")
    z = np.zeros(n, dtype=complex)
    reg2 = regularization * regularization
    t = 0.0
    k = 0
    while t < horizon:
        dt = min(step, horizon - t)
        diff = z[:, None] - z[None, :]
        denom = np.abs(diff) ** 2
        np.maximum(denom, reg2, out=denom)
        np.fill_diagonal(denom, 1.0)
        np.fill_diagonal(diff, 0.0)
        drift = (diff / denom).sum(axis=1)
        noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        z = z + drift * dt + np.sqrt(dt) * noise
        t += dt
        k += 1
        if not np.isfinite(z.view(float)).all():
            raise IntegrationBlowupError(k, t)
    return ParticleCloud(positions=z, time=horizon)
