"""Large-N solution machinery.

At r = 0 the Hopf-Lax maximizer r* of the variational potential

    phi(z,0,tau) = max_{r'} [ phi0(z,r') - r'^2/tau ]

solves (1/n) sum_i 1/(s_i + r*^2) = 1/tau whenever the probe z lies inside
the spectral support, i.e. whenever (1/n) sum_i 1/s_i >= 1/tau.  Everything
else follows: the overlap field is r*^2/(pi tau^2), the density comes from
the z-Laplacian of phi (implemented both through the exact trace formula
and a finite-difference oracle), and the support boundary doubles as the
Frobenius-norm pseudospectrum of X0 at epsilon^2 = tau/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from skimage import measure

from .core import (
    InitialCondition,
    SingularSpectrum,
    as_matrix,
    singular_spectrum,
)
from .errors import InvalidStencilError, NumericalError
from .observables import GridSpec

_BOUNDARY_SLACK = 1e-12  # boundary equality counts as inside (r* = 0 there)


@dataclass(frozen=True)
class LargeNPoint:
    """Large-N solution record at one (z, tau)."""

    z: complex
    tau: float
    inside: bool
    r_star: float
    phi: float
    rho: float
    overlap: float


@dataclass(frozen=True)
class CharacteristicLine:
    """One straight characteristic r(tau) = r_start - tau nu0(z, r_start),
    sampled until its first crossing of r = 0."""

    z: complex
    r_start: float
    points: list  # (tau, r) pairs


@dataclass(frozen=True)
class CharacteristicsResult:
    lines: list
    shock_time: float


def support_entry_time(spec: SingularSpectrum) -> float:
    """Time at which the expanding support reaches the probe:
    tau_entry(z) = n / sum_i 1/s_i (0 when z hits a singular value)."""
    s = spec.values
    if np.any(s == 0.0):
        return 0.0
    return float(1.0 / np.mean(1.0 / s))


def classify_support(spec: SingularSpectrum, tau: float) -> bool:
    """True iff z is inside the spectral support (non-holomorphic sector):
    (1/n) sum_i 1/s_i >= 1/tau, with boundary equality counting as inside."""
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    return support_entry_time(spec) <= tau * (1.0 + _BOUNDARY_SLACK)


def solve_rstar(spec: SingularSpectrum, tau: float) -> float:
    """Radial maximizer at r = 0: solves (1/n) sum 1/(s_i + u) = 1/tau for
    u = r*^2 by bisection on [0, tau]; returns sqrt(u), or 0 outside the
    support.

    The left side is strictly decreasing in u and is <= 1/tau at u = tau
    (equality only when every s_i = 0), so the bracket is always valid.
    """
    if not classify_support(spec, tau):
        return 0.0
    s = spec.values
    if np.all(s == 0.0):
        return math.sqrt(tau)

    def excess(u):
        return np.mean(1.0 / (s + u)) - 1.0 / tau

    lo, hi = 0.0, tau
    if excess(hi) > 0.0:  # equality at u = tau within rounding
        return math.sqrt(tau)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if excess(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * tau:
            break
    return math.sqrt(0.5 * (lo + hi))


def hopf_lax_potential(spec: SingularSpectrum, tau: float) -> float:
    """phi(z, r=0, tau) = (1/n) sum log(s_i + r*^2) - r*^2/tau; outside the
    support r* = 0 and this reduces to the initial potential."""
    rs = solve_rstar(spec, tau)
    u = rs * rs
    shifted = spec.values + u
    if np.any(shifted == 0.0):
        return float("-inf")
    return float(np.mean(np.log(shifted)) - u / tau)


def overlap_general(spec: SingularSpectrum, tau: float) -> float:
    """Eigenvector-overlap field O(z,tau) = r*^2 / (pi tau^2); 0 outside."""
    rs = solve_rstar(spec, tau)
    return rs * rs / (math.pi * tau * tau)


def density_general(x0, z, tau: float) -> float:
    """Large-N eigenvalue density at (z, tau) from the exact trace formula.

    With M = (z - X0)(zbar - X0^dag) + r*^2, A = z - X0 and B = A^dag:

        rho = (1/(n pi)) [ ( Tr(B M^-2) Tr(A M^-2) + r*^2 (Tr M^-2)^2 )
                           / Tr M^-2
                           + Tr( M^-1 [M^-1, A] B ) ],

    the commutator trace vanishing identically for normal X0.  Returns 0
    outside the support.
    """
    m0 = as_matrix(x0)
    n = m0.shape[0]
    spec = singular_spectrum(m0, z)
    if not classify_support(spec, tau):
        return 0.0
    u = solve_rstar(spec, tau) ** 2
    a = z * np.eye(n, dtype=complex) - m0
    b = a.conj().T
    try:
        w, v = np.linalg.eigh(a @ b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed at z={z}: {exc}") from exc
    w = np.maximum(w, 0.0)
    inv1 = 1.0 / (w + u)
    minv = (v * inv1) @ v.conj().T
    minv2 = (v * inv1**2) @ v.conj().T
    tr_m2 = float(np.sum(inv1**2))
    tr_b = complex(np.einsum("ij,ji->", b, minv2))
    tr_a = complex(np.einsum("ij,ji->", a, minv2))
    det_part = (tr_b * tr_a + u * tr_m2 * tr_m2) / tr_m2
    comm = np.einsum("ij,jk,kl,li->", minv2, a, b, np.eye(n, dtype=complex)) - np.einsum(
        "ij,jk,kl,li->", minv, a, minv, b
    )
    rho = (det_part + comm).real / (n * math.pi)
    return float(rho)


def density_fd_oracle(x0, z, tau: float, h: float = 1e-3) -> float:
    """Independent density check: rho = (1/pi) d_z d_zbar phi by a 5-point
    Laplacian stencil on the Hopf-Lax potential.  Every stencil point must
    lie inside the support."""
    m0 = as_matrix(x0)
    pts = [z, z + h, z - h, z + 1j * h, z - 1j * h]
    phis = []
    for p in pts:
        spec = singular_spectrum(m0, p)
        if not classify_support(spec, tau):
            raise InvalidStencilError(
                f"stencil point {p} lies outside the support at tau={tau}"
            )
        phis.append(hopf_lax_potential(spec, tau))
    lap = (phis[1] + phis[2] + phis[3] + phis[4] - 4.0 * phis[0]) / (h * h)
    return lap / (4.0 * math.pi)


# ---------------------------------------------------------------------------
# closed forms for the three built-in families


def spiric_quantities(z, tau: float, a):
    """Shared spiric building blocks: Z = zbar a + z abar, S = sqrt(tau^2 + 4 Z^2)."""
    big_z = 2.0 * (np.conj(z) * a).real
    big_s = math.sqrt(tau * tau + 4.0 * big_z * big_z)
    return big_z, big_s


def spiric_density_gauss(z, tau: float, a) -> float:
    """Spiric density from the Gauss law applied to the holomorphic gradient:
    rho = (1/pi) (1/tau - 2|a|^2 / (S (S + tau))).  Regular everywhere inside,
    including the imaginary axis where Z -> 0."""
    _, big_s = spiric_quantities(z, tau, a)
    return (1.0 / tau - 2.0 * abs(a) ** 2 / (big_s * (big_s + tau))) / math.pi


def spiric_density_printed(z, tau: float, a) -> float:
    """Spiric density in the published algebraic arrangement

        rho = [S (2 - tau |a|^2) + tau^2 |a|^2] / (2 pi tau Z^2 S).

    Diverges as Z -> 0 (the imaginary axis) where the Gauss-law form stays
    finite; kept verbatim so the two can be compared side by side.
    """
    big_z, big_s = spiric_quantities(z, tau, a)
    num = big_s * (2.0 - tau * abs(a) ** 2) + tau * tau * abs(a) ** 2
    den = 2.0 * math.pi * tau * big_z * big_z * big_s
    if den == 0.0:
        return float("inf")
    return num / den


def _closed_ginibre(z, tau: float) -> LargeNPoint:
    az2 = abs(z) ** 2
    inside = az2 <= tau * (1.0 + _BOUNDARY_SLACK)
    if inside:
        u = max(tau - az2, 0.0)
        phi = math.log(tau) + az2 / tau - 1.0
        rho = 1.0 / (math.pi * tau)
    else:
        u = 0.0
        phi = math.log(az2)
        rho = 0.0
    return LargeNPoint(
        z=complex(z), tau=tau, inside=inside, r_star=math.sqrt(u), phi=phi,
        rho=rho, overlap=u / (math.pi * tau * tau),
    )


def _closed_spiric(z, tau: float, a) -> LargeNPoint:
    aa2 = abs(a) ** 2
    az2 = abs(z) ** 2
    big_z, big_s = spiric_quantities(z, tau, a)
    lhs = tau * (aa2 + az2)
    rhs = abs(a * a - z * z) ** 2
    inside = lhs * (1.0 + _BOUNDARY_SLACK) >= rhs
    if inside:
        u = max(0.5 * tau - aa2 - az2 + 0.5 * big_s, 0.0)
        phi = 0.5 * math.log(0.5 * tau * tau + 0.5 * tau * big_s) + (
            aa2 + az2 - 0.5 * tau - 0.5 * big_s
        ) / tau
        rho = spiric_density_gauss(z, tau, a)
    else:
        u = 0.0
        phi = 0.5 * math.log(abs(z - a) ** 2) + 0.5 * math.log(abs(z + a) ** 2)
        rho = 0.0
    return LargeNPoint(
        z=complex(z), tau=tau, inside=inside, r_star=math.sqrt(u), phi=phi,
        rho=rho, overlap=u / (math.pi * tau * tau),
    )


def _closed_jordan(z, tau: float, alpha) -> LargeNPoint:
    aa2 = abs(alpha) ** 2
    az2 = abs(z) ** 2
    t_big = math.sqrt(tau * tau + 4.0 * aa2 * az2)
    lo2 = max(aa2 - tau, 0.0)
    hi2 = aa2 + tau
    inside = (az2 >= lo2 * (1.0 - _BOUNDARY_SLACK)) and (
        az2 <= hi2 * (1.0 + _BOUNDARY_SLACK)
    )
    if inside:
        u = max(t_big - az2 - aa2, 0.0)
        phi = math.log(0.5 * tau + 0.5 * t_big) + (az2 + aa2 - t_big) / tau
        rho = (1.0 - aa2 / t_big) / (math.pi * tau)
    else:
        u = 0.0
        phi = math.log(aa2) if az2 < lo2 else math.log(az2)
        rho = 0.0
    return LargeNPoint(
        z=complex(z), tau=tau, inside=inside, r_star=math.sqrt(u), phi=phi,
        rho=rho, overlap=u / (math.pi * tau * tau),
    )


def closed_example(cond: InitialCondition, z, tau: float) -> LargeNPoint:
    """Analytic large-N record for the built-in families, bypassing the
    root-finder.  (For spiric the density reported here is the Gauss-law
    form; the published arrangement is available separately as
    spiric_density_printed.)"""
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if cond.kind == "zero":
        return _closed_ginibre(z, tau)
    if cond.kind == "spiric":
        if cond.a == 0:
            raise ValueError("spiric family needs a != 0")
        return _closed_spiric(z, tau, cond.a)
    if cond.kind == "jordan":
        return _closed_jordan(z, tau, cond.alpha)
    raise ValueError(f"no closed form for initial-condition kind {cond.kind!r}")


# ---------------------------------------------------------------------------
# characteristics of the radial Burgers flow


def initial_velocity(cond: InitialCondition, z, r) -> float:
    """Radial velocity modulus nu0(z, r) = (1/2) d_r phi0 for the built-in
    families, in closed form."""
    r = float(r)
    if cond.kind == "zero":
        return r / (abs(z) ** 2 + r * r)
    if cond.kind == "spiric":
        a = cond.a
        return 0.5 * r / (r * r + abs(z - a) ** 2) + 0.5 * r / (
            r * r + abs(z + a) ** 2
        )
    if cond.kind == "jordan":
        u = r * r
        lo = u + (abs(z) - abs(cond.alpha)) ** 2
        hi = u + (abs(z) + abs(cond.alpha)) ** 2
        delta = math.sqrt(lo * hi)
        if delta == 0.0:
            return float("inf")
        return r / delta
    raise ValueError(f"no closed-form velocity for kind {cond.kind!r}")


def characteristics_field(
    cond: InitialCondition, z, r_labels, tau_max: float, samples: int = 64
) -> CharacteristicsResult:
    """Straight characteristics r(tau) = r* - tau nu0(z, r*) for each label,
    each sampled on [0, tau_max] and truncated at its first crossing of
    r = 0.  The shock start (caustic apex) is the smallest first-crossing
    time over the labels, including the r* -> 0+ envelope limit.
    """
    if tau_max <= 0:
        raise ValueError(f"tau_max must be > 0, got {tau_max}")
    lines = []
    crossings = []
    for r0 in r_labels:
        r0 = float(r0)
        if r0 < 0:
            raise ValueError(f"labels must be >= 0, got {r0}")
        nu = initial_velocity(cond, z, r0)
        t_cross = r0 / nu if (nu > 0 and r0 > 0) else math.inf
        t_end = min(tau_max, t_cross)
        taus = np.linspace(0.0, t_end, samples)
        rs = r0 - taus * nu
        pts = [(float(t), max(float(r), 0.0)) for t, r in zip(taus, rs)]
        lines.append(CharacteristicLine(z=complex(z), r_start=r0, points=pts))
        crossings.append(t_cross)
    # envelope limit: lim_{r->0+} r / nu0(z, r)
    eps = 1e-9
    nu_eps = initial_velocity(cond, z, eps)
    crossings.append(eps / nu_eps if nu_eps > 0 else math.inf)
    return CharacteristicsResult(lines=lines, shock_time=float(min(crossings)))


# ---------------------------------------------------------------------------
# support / pseudospectrum contours


def _contours_from_level(entry_grid: np.ndarray, grid: GridSpec, level: float):
    """Marching squares (linear interpolation) on the entry-time grid.
    entry_grid is indexed [ix, iy]; returns contours as (k, 2) arrays of
    (x, y) points."""
    x, y = grid.centers()
    found = measure.find_contours(entry_grid, level)
    dx = x[1] - x[0] if grid.nx > 1 else 0.0
    dy = y[1] - y[0] if grid.ny > 1 else 0.0
    out = []
    for c in found:
        xs = x[0] + c[:, 0] * dx
        ys = y[0] + c[:, 1] * dy
        out.append(np.column_stack([xs, ys]))
    return out


def entry_time_grid(spectrum_fn, grid: GridSpec) -> np.ndarray:
    """Support entry time tau_entry(z) on the bin centers; spectrum_fn maps
    a complex probe to a SingularSpectrum."""
    x, y = grid.centers()
    out = np.empty((grid.nx, grid.ny))
    for i, xv in enumerate(x):
        for j, yv in enumerate(y):
            out[i, j] = support_entry_time(spectrum_fn(complex(xv, yv)))
    return out


def support_boundary(spectrum_fn, grid: GridSpec, tau: float):
    """Level set tau_entry(z) = tau traced by marching squares."""
    return _contours_from_level(entry_time_grid(spectrum_fn, grid), grid, tau)


def pseudospectrum_boundary(x0, epsilon: float, grid: GridSpec):
    """Frobenius-norm pseudospectrum boundary of X0 at parameter epsilon:
    the level set (1/n) sum_i 1/s_i(z) = 1/tau with tau = n epsilon^2,
    identical to the diffusion support boundary at that matched time.

    Cost is one n^3 eigendecomposition per grid node; keep grids modest for
    generic matrices (the built-in families have closed spectra, see
    family_spectrum).  An empty level set yields an empty list.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    m0 = as_matrix(x0)
    n = m0.shape[0]
    tau = n * epsilon * epsilon
    return support_boundary(lambda z: singular_spectrum(m0, z), grid, tau)
