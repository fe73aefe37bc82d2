"""Spectral decomposition with biorthogonal eigenvectors and grid
estimators for the eigenvalue density and the diagonal overlap field.

For a diagonalizable X with right-eigenvector matrix R (columns), the left
eigenvectors are the rows of R^-1, which enforces <L_a|R_b> = delta_ab to
machine precision.  The diagonal overlaps are then

    O_aa = <L_a|L_a> <R_a|R_a> = ||row_a(R^-1)||^2 * ||col_a(R)||^2 >= 1.

The density field rho(z) integrates to 1 over the plane; the overlap field
carries an extra 1/n so that it stays finite as n grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_matrix
from .errors import NearDefectiveError

# 2-norm condition estimate above which a trial counts as numerically
# defective: overlaps diverge at defective points and would corrupt bins.
COND_LIMIT = 1e14


@dataclass
class EnsembleSample:
    """One trial: eigenvalues z_a and their diagonal overlaps O_aa."""

    eigenvalues: np.ndarray
    overlaps: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class GridSpec:
    """Rectangular binning of the eigenvalue plane."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("grid bounds must satisfy x_min < x_max, y_min < y_max")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must have at least one bin per axis")

    @property
    def bin_area(self) -> float:
        return ((self.x_max - self.x_min) / self.nx) * (
            (self.y_max - self.y_min) / self.ny
        )

    def centers(self):
        """Bin-center coordinate axes (x, y)."""
        dx = (self.x_max - self.x_min) / self.nx
        dy = (self.y_max - self.y_min) / self.ny
        x = self.x_min + dx * (np.arange(self.nx) + 0.5)
        y = self.y_min + dy * (np.arange(self.ny) + 0.5)
        return x, y


def default_grid(tau_max: float, nx: int = 200, ny: int = 200) -> GridSpec:
    """200x200 over [-1.6 sqrt(tau_max), 1.6 sqrt(tau_max)]^2: covers the
    supports of all built-in families with margin."""
    half = 1.6 * np.sqrt(tau_max)
    return GridSpec(-half, half, -half, half, nx, ny)


@dataclass
class FieldGrid:
    """Binned density and overlap fields plus bookkeeping.

    rho and overlap are (nx, ny) arrays indexed [ix, iy]; spill counts the
    eigenvalues that fell outside the grid (never silently dropped).
    """

    grid: GridSpec
    rho: np.ndarray
    overlap: np.ndarray
    trials_used: int
    spill: int


def overlaps_from_right_eigenvectors(r: np.ndarray) -> np.ndarray:
    """Diagonal overlaps from the right-eigenvector matrix alone.

    Invariant under rescaling any column of R: the corresponding row of
    R^-1 rescales inversely.
    """
    rinv = np.linalg.inv(r)
    left_sq = (np.abs(rinv) ** 2).sum(axis=1)
    right_sq = (np.abs(r) ** 2).sum(axis=0)
    return left_sq * right_sq


def spectral_decompose(x) -> EnsembleSample:
    """Eigenvalues and diagonal overlaps of a single matrix.

    Raises NearDefectiveError when the right-eigenvector matrix has a
    condition estimate above COND_LIMIT; callers may drop the trial.
    """
    m = as_matrix(x)
    w, r = np.linalg.eig(m)
    try:
        rinv = np.linalg.inv(r)
    except np.linalg.LinAlgError as exc:
        raise NearDefectiveError("eigenvector matrix is singular") from exc
    cond = np.linalg.norm(r, 1) * np.linalg.norm(rinv, 1)
    if cond > COND_LIMIT:
        raise NearDefectiveError(
            f"eigenvector condition estimate {cond:.3e} exceeds {COND_LIMIT:.0e}"
        )
    left_sq = (np.abs(rinv) ** 2).sum(axis=1)
    right_sq = (np.abs(r) ** 2).sum(axis=0)
    return EnsembleSample(eigenvalues=w, overlaps=left_sq * right_sq)


def estimate_fields(samples, grid: GridSpec) -> FieldGrid:
    """Bin estimators over an ensemble of decomposed trials.

    With bin area A and T trials of dimension n:

        rho(bin)     = count(bin) / (T n A)
        overlap(bin) = sum of O_aa over eigenvalues in bin / (T n^2 A)

    so sum_bins rho*A + spill/(T n) = 1 is a counting identity.  Merging is
    associative: the estimator is permutation-invariant in its sample list.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    n = samples[0].n
    if any(s.n != n for s in samples):
        raise ValueError("all samples must share the same dimension")
    trials = len(samples)
    xs = np.concatenate([s.eigenvalues.real for s in samples])
    ys = np.concatenate([s.eigenvalues.imag for s in samples])
    os = np.concatenate([s.overlaps for s in samples])
    rng_box = [[grid.x_min, grid.x_max], [grid.y_min, grid.y_max]]
    counts, _, _ = np.histogram2d(xs, ys, bins=[grid.nx, grid.ny], range=rng_box)
    osum, _, _ = np.histogram2d(
        xs, ys, bins=[grid.nx, grid.ny], range=rng_box, weights=os
    )
    spill = int(round(len(xs) - counts.sum()))
    area = grid.bin_area
    rho = counts / (trials * n * area)
    overlap = osum / (trials * n * n * area)
    return FieldGrid(
        grid=grid, rho=rho, overlap=overlap, trials_used=trials, spill=spill
    )
