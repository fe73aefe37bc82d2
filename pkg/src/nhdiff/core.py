"""Core domain objects: initial matrices and the per-probe singular spectrum.

Everything downstream (exact characteristic-polynomial quadrature, the
large-N Hopf-Lax solver, support classification) consumes the squared
singular values s_i of (z - X0), i.e. the eigenvalues of the hermitian
matrix (z - X0)(z - X0)^dag.  This module builds the standard initial
matrices and computes that spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

# Negative eigenvalues of the PSD product within this relative window are
# floating-point round-off and get clamped to zero.
_PSD_CLAMP = 1e-12


def as_matrix(x) -> np.ndarray:
    """Validate and return a square, finite complex matrix."""
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if m.size and not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    return m


@dataclass(frozen=True)
class InitialCondition:
    """Deterministic starting matrix X0 for the entry-wise diffusion.

    kind is one of "zero", "spiric", "jordan", "explicit":

    * zero     -- X0 = 0 (Ginibre evolution),
    * spiric   -- diagonal with +a on the first half and -a on the second
                  half (even dimension only); the support boundary of the
                  evolved spectrum is a spiric section,
    * jordan   -- alpha on the first superdiagonal, maximally non-normal
                  with all eigenvalues zero,
    * explicit -- an arbitrary square matrix given verbatim.
    """

    kind: str
    a: complex = 0j
    alpha: complex = 0j
    matrix: np.ndarray | None = None

    @classmethod
    def zero(cls) -> "InitialCondition":
        return cls("zero")

    @classmethod
    def spiric(cls, a) -> "InitialCondition":
        return cls("spiric", a=complex(a))

    @classmethod
    def jordan(cls, alpha) -> "InitialCondition":
        return cls("jordan", alpha=complex(alpha))

    @classmethod
    def explicit(cls, matrix) -> "InitialCondition":
        return cls("explicit", matrix=as_matrix(matrix))


@dataclass(frozen=True)
class SingularSpectrum:
    """Squared singular values of (z - X0), sorted ascending."""

    z: complex
    values: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)


def build_initial(cond: InitialCondition, n: int) -> np.ndarray:
    """Realize the initial condition as a dense n x n complex matrix."""
    if n < 1:
        raise ValueError(f"matrix dimension must be >= 1, got {n}")
    if cond.kind == "zero":
        return np.zeros((n, n), dtype=complex)
    if cond.kind == "spiric":
        if n % 2 != 0:
            raise ValueError(f"spiric initial condition needs even n, got {n}")
        d = np.full(n, -cond.a, dtype=complex)
        d[: n // 2] = cond.a
        return np.diag(d)
    if cond.kind == "jordan":
        m = np.zeros((n, n), dtype=complex)
        if n > 1:
            m[np.arange(n - 1), np.arange(1, n)] = cond.alpha
        return m
    if cond.kind == "explicit":
        m = as_matrix(cond.matrix)
        if m.shape[0] != n:
            raise ValueError(
                f"explicit matrix is {m.shape[0]}x{m.shape[0]}, requested n={n}"
            )
        return m.copy()
    raise ValueError(f"unknown initial-condition kind {cond.kind!r}")


def jordan_circulant(alpha, n: int) -> np.ndarray:
    """Cyclic variant of the jordan shift: alpha on the superdiagonal plus
    the wrap-around corner entry.

    Normal (circulant) with eigenvalues alpha*exp(2*pi*i*k/n); shares the
    large-N limit of the jordan shift but is free of the O(1/n) boundary
    defect and of the exponentially small singular values the plain shift
    develops inside its spectral hole.  Used wherever finite-n spectra must
    reproduce the limiting annulus formulas.
    """
    m = np.zeros((n, n), dtype=complex)
    if n > 1:
        m[np.arange(n - 1), np.arange(1, n)] = alpha
    m[n - 1, 0] = alpha
    return m


def singular_spectrum(x0, z) -> SingularSpectrum:
    """Eigenvalues of (z - X0)(z - X0)^dag, sorted ascending.

    Computed through the hermitian product rather than an SVD of (z - X0):
    the hermitian form is what every downstream trace formula consumes.
    """
    m = as_matrix(x0)
    a = z * np.eye(m.shape[0], dtype=complex) - m
    try:
        s = np.linalg.eigvalsh(a @ a.conj().T)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed for probe z={z}: {exc}") from exc
    smax = s[-1] if len(s) else 0.0
    floor = -_PSD_CLAMP * max(smax, 1.0)
    if s[0] < floor:
        raise NumericalError(
            f"PSD spectrum has eigenvalue {s[0]:.3e} below round-off window at z={z}"
        )
    return SingularSpectrum(z=complex(z), values=np.maximum(s, 0.0))


def ginibre_spectrum(z, n: int) -> SingularSpectrum:
    """Closed-form spectrum for X0 = 0: every s_i equals |z|^2."""
    return SingularSpectrum(z=complex(z), values=np.full(n, abs(z) ** 2))


def spiric_spectrum(a, z, n: int) -> SingularSpectrum:
    """Closed-form spectrum for the two-island diagonal: |z -+ a|^2, half each."""
    if n % 2 != 0:
        raise ValueError(f"spiric spectrum needs even n, got {n}")
    vals = np.empty(n)
    vals[: n // 2] = abs(z - a) ** 2
    vals[n // 2:] = abs(z + a) ** 2
    vals.sort()
    return SingularSpectrum(z=complex(z), values=vals)


def jordan_symbol_spectrum(alpha, z, n: int) -> SingularSpectrum:
    """Spectrum of the cyclic (circulant) realization of the jordan family:
    s_k = |z - alpha*exp(2*pi*i*k/n)|^2, the symbol of the shift sampled on
    n equidistant angles."""
    k = np.arange(n)
    vals = np.abs(z - alpha * np.exp(2j * np.pi * k / n)) ** 2
    vals.sort()
    return SingularSpectrum(z=complex(z), values=vals)


def family_spectrum(cond: InitialCondition, z, n: int) -> SingularSpectrum:
    """Fast-path spectrum for the built-in families; falls back to the dense
    eigensolver for explicit matrices.  The jordan family is realized through
    its cyclic symbol samples (see jordan_circulant)."""
    if cond.kind == "zero":
        return ginibre_spectrum(z, n)
    if cond.kind == "spiric":
        return spiric_spectrum(cond.a, z, n)
    if cond.kind == "jordan":
        return jordan_symbol_spectrum(cond.alpha, z, n)
    return singular_spectrum(build_initial(cond, n), z)


def phi0(spec: SingularSpectrum, r: float) -> float:
    """Initial potential (1/n) sum_i log(s_i + r^2).

    Returns -inf when r = 0 and the probe sits exactly on a hit singular
    value (logarithmic singularity); callers must handle the sentinel.
    """
    if r < 0:
        raise ValueError(f"radial coordinate must be >= 0, got {r}")
    shifted = spec.values + r * r
    if np.any(shifted == 0.0):
        return float("-inf")
    return float(np.mean(np.log(shifted)))


def load_matrix_file(path) -> np.ndarray:
    """Read an explicit matrix file.

    Format: UTF-8 text; line 1 holds the integer dimension n; each of the
    following n lines holds 2n comma-separated decimals
    re(i,1),im(i,1),...,re(i,n),im(i,n).
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise ValueError(f"{path}: first line must be the integer dimension") from exc
    if len(lines) != n + 1:
        raise ValueError(f"{path}: expected {n} data lines, found {len(lines) - 1}")
    m = np.empty((n, n), dtype=complex)
    for i, ln in enumerate(lines[1:]):
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 2 * n:
            raise ValueError(
                f"{path}: line {i + 2} has {len(parts)} fields, expected {2 * n}"
            )
        vals = [float(p) for p in parts]
        m[i] = np.asarray(vals[0::2]) + 1j * np.asarray(vals[1::2])
    return as_matrix(m)


def save_matrix_file(path, matrix) -> None:
    """Write a matrix in the format read by load_matrix_file."""
    m = as_matrix(matrix)
    n = m.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n}\n")
        for i in range(n):
            fields = []
            for j in range(n):
                fields.append(repr(float(m[i, j].real)))
                fields.append(repr(float(m[i, j].imag)))
            fh.write(",".join(fields) + "\n")
