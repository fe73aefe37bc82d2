"""Exact finite-n evaluation of the averaged extended characteristic
polynomial (AECP)

    D(z, r, tau) = < det( (z - X)(zbar - X^dag) + r^2 ) >

for the entry-wise Brownian evolution started at X0.  D solves a radial
heat equation in the auxiliary coordinate r, so for any X0 it is a single
radial integral against the 2-d heat kernel:

    D(z,r,tau) = (2n/tau) int_0^inf r' exp(-n (r^2+r'^2)/tau)
                          I0(2 n r r'/tau) D0(z,r') dr',

with D0(z,r') = prod_i (s_i + r'^2) built from the squared singular values
s_i of (z - X0).  D grows like exp(n * O(1)), so everything here is handled
as logarithms end to end; the Bessel factor enters through the
exponentially scaled I0 with the exponent reinstated analytically.

Also provided: a brute-force Monte-Carlo determinant oracle, a residual
check of the radial heat equation, and the closed forms available for
X0 = 0 (Laguerre sums, the two-argument polynomial and the determinantal
kernel built from it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, i0e, logsumexp

from .core import SingularSpectrum, as_matrix, singular_spectrum
from .errors import QuadratureSetupError, StepSizeError

_TAIL_NATS = 34.0  # integrand tail cut: exp(-34) ~ 1.7e-15 of the peak
_NODES_MIN = 256
_NODES_MAX = 4096


@dataclass(frozen=True)
class QuaternionPoint:
    """Evaluation point: eigenvalue-plane coordinate z, radial coordinate r
    in the perpendicular plane, diffusion time tau."""

    z: complex
    r: float
    tau: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")


@dataclass(frozen=True)
class LogAecpValue:
    """log D at a point; D is a mean of positive determinants, so the log
    is finite for tau > 0."""

    log_d: float
    n: int
    point: QuaternionPoint


@dataclass(frozen=True)
class RadialQuadrature:
    """Gauss-Legendre rule on an adaptively located window of the radial
    integrand; log_weights absorb the affine-map Jacobian."""

    nodes: np.ndarray
    log_weights: np.ndarray
    center: float
    width: float


# ---------------------------------------------------------------------------
# initial-condition factors log D0


def log_d0(x0, z, r: float) -> float:
    """log D0(z,r) = sum_i log(s_i + r^2).  Note: not divided by n.

    Returns -inf when r = 0 and z is an eigenvalue of X0 (some s_i = 0).
    """
    spec = singular_spectrum(x0, z)
    return log_d0_values(spec.values, r)


def log_d0_values(values: np.ndarray, r: float) -> float:
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    shifted = values + r * r
    if np.any(shifted == 0.0):
        return float("-inf")
    return float(np.sum(np.log(shifted)))


def spectrum_log_d0(values: np.ndarray):
    """Vectorized r' -> log D0 from an explicit squared-singular-value list."""
    vals = np.asarray(values, dtype=float)

    def f(rp):
        rp = np.atleast_1d(np.asarray(rp, dtype=float))
        out = np.empty(len(rp))
        # chunked so large (nodes x n) intermediates stay small
        for lo in range(0, len(rp), 512):
            blk = rp[lo: lo + 512]
            with np.errstate(divide="ignore"):
                out[lo: lo + 512] = np.log(
                    vals[None, :] + blk[:, None] ** 2
                ).sum(axis=1)
        return out

    return f


def ginibre_log_d0(n: int, z):
    """X0 = 0: log D0 = n log(|z|^2 + r'^2)."""
    az2 = abs(z) ** 2

    def f(rp):
        rp = np.atleast_1d(np.asarray(rp, dtype=float))
        with np.errstate(divide="ignore"):
            return n * np.log(az2 + rp * rp)

    return f


def spiric_log_d0(n: int, z, a):
    """Two-island diagonal: log D0 = (n/2)[log(r'^2+|z-a|^2) + log(r'^2+|z+a|^2)]."""
    if n % 2 != 0:
        raise ValueError(f"spiric needs even n, got {n}")
    sm = abs(z - a) ** 2
    sp = abs(z + a) ** 2

    def f(rp):
        rp = np.atleast_1d(np.asarray(rp, dtype=float))
        u = rp * rp
        with np.errstate(divide="ignore"):
            return 0.5 * n * (np.log(u + sm) + np.log(u + sp))

    return f


def jordan_shift_log_d0(n: int, z, alpha):
    """Superdiagonal shift: closed tridiagonal determinant of
    (z - X0)(zbar - X0^dag) + r'^2, evaluated in log form.

    With a = |z|^2 + r'^2 + |alpha|^2, b2 = |z|^2 |alpha|^2, d = |z|^2 + r'^2,
    Delta = sqrt(a^2 - 4 b2) and a+- = (a +- Delta)/2:

        det = [ d (a+^n - a-^n) - b2 (a+^{n-1} - a-^{n-1}) ] / Delta.
    """
    az2 = abs(z) ** 2
    aa2 = abs(alpha) ** 2
    b2 = az2 * aa2
    sm = (abs(z) - abs(alpha)) ** 2
    sp = (abs(z) + abs(alpha)) ** 2

    def f(rp):
        rp = np.atleast_1d(np.asarray(rp, dtype=float))
        u = rp * rp
        a = az2 + aa2 + u
        d = az2 + u
        lo_fac = u + sm
        hi_fac = u + sp
        out = np.empty(len(rp))
        degen = lo_fac < 1e-14 * hi_fac
        reg = ~degen
        if np.any(reg):
            delta = np.sqrt(lo_fac[reg] * hi_fac[reg])
            ap = 0.5 * (a[reg] + delta)
            ratio = (b2 / ap) / ap  # a-/a+ without cancellation
            with np.errstate(divide="ignore"):
                bracket = d[reg] * (1.0 - ratio**n) - (b2 / ap) * (
                    1.0 - ratio ** (n - 1)
                )
                out[reg] = n * np.log(ap) - np.log(delta) + np.log(bracket)
        if np.any(degen):
            # coalescing roots a+ = a-: l'Hopital on the difference quotient
            ah = 0.5 * a[degen]
            with np.errstate(divide="ignore"):
                out[degen] = (n - 2) * np.log(ah) + np.log(
                    n * ah * d[degen] - (n - 1) * b2
                )
        return out

    return f


# ---------------------------------------------------------------------------
# radial heat-kernel quadrature


@lru_cache(maxsize=16)
def _leggauss(count: int):
    return np.polynomial.legendre.leggauss(count)


def _heat_log_integrand(log_d0_fn, n: int, r: float, tau: float):
    """log of the full radial integrand, vectorized over r'."""
    pref = math.log(2.0 * n / tau)
    c = 2.0 * n * r / tau

    def f(rp):
        rp = np.atleast_1d(np.asarray(rp, dtype=float))
        with np.errstate(divide="ignore"):
            base = pref + np.log(rp) - n * (r * r + rp * rp) / tau + log_d0_fn(rp)
        if r > 0:
            base = base + np.log(i0e(c * rp)) + c * rp
        return base

    return f


def _locate_peak(f, lo: float, hi: float, tol: float) -> float:
    """Maximizer of a unimodal log-integrand: grid zoom to bracket, then
    golden-section refinement."""
    a, b = lo, hi
    for _ in range(64):
        xs = np.linspace(a, b, 65)
        vals = f(xs)
        finite = np.isfinite(vals)
        if not finite.any():
            raise QuadratureSetupError(
                f"no finite integrand values on [{a:.3g}, {b:.3g}]"
            )
        i = int(np.nanargmax(np.where(finite, vals, -np.inf)))
        step = (b - a) / 64.0
        a2 = max(lo, xs[i] - step)
        b2 = min(hi, xs[i] + step)
        a, b = a2, b2
        if (b - a) <= 8 * tol:
            break
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = f(c)[0]
    fd = f(d)[0]
    for _ in range(200):
        if (b - a) <= tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)[0]
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)[0]
    return 0.5 * (a + b)


def build_radial_quadrature(
    log_d0_fn, n: int, r: float, tau: float, s_max: float
) -> RadialQuadrature:
    """Locate the integrand peak and lay a Gauss-Legendre rule on a window
    wide enough that the truncated tails are ~exp(-34) of the peak.

    The integrand is a Gaussian of width sigma = sqrt(tau/(2n)) times a
    degree-2n polynomial; the base window is peak +- 12 sigma, extended in
    2-sigma steps while the integrand has not yet dropped _TAIL_NATS below
    the peak (near the spectral edge the polynomial flattens the decay to
    quartic and the fixed window would leak ~1e-3 for n ~ 4000).
    """
    f = _heat_log_integrand(log_d0_fn, n, r, tau)
    sigma = math.sqrt(tau / (2.0 * n))
    hi0 = r + math.sqrt(tau) + math.sqrt(max(s_max, 0.0))
    m = _locate_peak(f, 0.0, hi0, tol=1e-3 * sigma)
    fm = f(m)[0]
    if not np.isfinite(fm):
        raise QuadratureSetupError(f"integrand maximum not finite at r'={m:.3g}")
    lo_w = max(0.0, m - 12.0 * sigma)
    hi_w = m + 12.0 * sigma
    for _ in range(400):
        if f(hi_w)[0] <= fm - _TAIL_NATS:
            break
        hi_w += 2.0 * sigma
    for _ in range(400):
        if lo_w <= 0.0 or f(lo_w)[0] <= fm - _TAIL_NATS:
            break
        lo_w = max(0.0, lo_w - 2.0 * sigma)
    width = hi_w - lo_w
    count = int(np.clip(int(12.0 * width / sigma), _NODES_MIN, _NODES_MAX))
    t, w = _leggauss(count)
    nodes = 0.5 * width * t + 0.5 * (hi_w + lo_w)
    log_weights = np.log(w) + math.log(0.5 * width)
    return RadialQuadrature(
        nodes=nodes, log_weights=log_weights, center=m, width=width
    )


def heat_kernel_log_aecp(
    log_d0_fn, n: int, r: float, tau: float, s_max: float
) -> float:
    """log D(z,r,tau) by log-sum-exp over the adaptive Gauss-Legendre rule."""
    quad = build_radial_quadrature(log_d0_fn, n, r, tau, s_max)
    f = _heat_log_integrand(log_d0_fn, n, r, tau)
    return float(logsumexp(f(quad.nodes) + quad.log_weights))


def log_aecp_from_spectrum(spec: SingularSpectrum, point: QuaternionPoint) -> LogAecpValue:
    s_max = float(spec.values[-1]) if spec.n else 0.0
    val = heat_kernel_log_aecp(
        spectrum_log_d0(spec.values), spec.n, point.r, point.tau, s_max
    )
    return LogAecpValue(log_d=val, n=spec.n, point=point)


def log_aecp(x0, point: QuaternionPoint) -> LogAecpValue:
    """log D(z,r,tau) for an arbitrary initial matrix X0."""
    spec = singular_spectrum(x0, point.z)
    return log_aecp_from_spectrum(spec, point)


# ---------------------------------------------------------------------------
# heat-equation residual


def pde_residual(x0, point: QuaternionPoint, h_r: float = 1e-3, h_tau: float = 1e-3) -> float:
    """Relative residual |d_tau D - (1/n) Lap_r D| / |d_tau D| by central
    differences of the quadrature solution.

    The radial Laplacian is (1/4)(d_rr + d_r / r) for rotation-invariant
    functions of w; at r = 0 its limit is (1/2) d_rr.  Requires r = 0 or
    r > 2 h_r so the stencil stays in the interior.
    """
    spec = singular_spectrum(x0, point.z)
    return pde_residual_from_spectrum(spec, point, h_r, h_tau)


def pde_residual_from_spectrum(
    spec: SingularSpectrum, point: QuaternionPoint, h_r: float, h_tau: float
) -> float:
    r, tau = point.r, point.tau
    if h_r <= 0 or h_tau <= 0:
        raise ValueError("steps must be positive")
    if tau - h_tau <= 0:
        raise ValueError(f"tau - h_tau must stay positive, got tau={tau}, h={h_tau}")
    if r != 0.0 and r <= 2 * h_r:
        raise ValueError(f"need r > 2 h_r (or exactly 0), got r={r}, h_r={h_r}")
    n = spec.n
    fn = spectrum_log_d0(spec.values)
    s_max = float(spec.values[-1])

    def ld(rr, tt):
        return heat_kernel_log_aecp(fn, n, rr, tt, s_max)

    ref = ld(r, tau)

    def dval(rr, tt):
        return math.exp(ld(rr, tt) - ref)

    dtp = dval(r, tau + h_tau)
    dtm = dval(r, tau - h_tau)
    if abs(dtp - dtm) <= 1e-12 * (abs(dtp) + abs(dtm)):
        raise StepSizeError(
            f"tau step {h_tau:.3g} does not resolve the evolution (difference underflow)"
        )
    d_tau = (dtp - dtm) / (2.0 * h_tau)
    d_c = 1.0
    if r == 0.0:
        dp = dval(h_r, tau)
        if abs(dp - d_c) <= 1e-12 * (abs(dp) + abs(d_c)):
            raise StepSizeError(f"r step {h_r:.3g} underflows the radial difference")
        radial = 0.5 * 2.0 * (dp - d_c) / (h_r * h_r)
    else:
        dp = dval(r + h_r, tau)
        dm = dval(r - h_r, tau)
        if abs(dp - dm) <= 1e-13 * (abs(dp) + abs(dm)):
            raise StepSizeError(f"r step {h_r:.3g} underflows the radial difference")
        d_rr = (dp - 2.0 * d_c + dm) / (h_r * h_r)
        d_r = (dp - dm) / (2.0 * h_r)
        radial = 0.25 * (d_rr + d_r / r)
    res = d_tau - radial / n
    return abs(res) / abs(d_tau)


# ---------------------------------------------------------------------------
# Monte-Carlo determinant oracle


def mc_determinant_oracle(
    x0, point: QuaternionPoint, samples: int, rng: np.random.Generator, chunk: int = 20000
):
    """Brute-force estimate of D: draw X(tau), evaluate the determinant
    exactly, return (sample mean, standard error).

    Determinant averages develop heavy tails as n grows; n <= 8 recommended.
    """
    m = as_matrix(x0)
    n = m.shape[0]
    if samples < 2:
        raise ValueError("need at least 2 samples")
    z, r, tau = point.z, point.r, point.tau
    eye = np.eye(n, dtype=complex)
    scale = np.sqrt(tau / (2.0 * n))
    vals = np.empty(samples)
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        g = rng.standard_normal((k, n, n)) + 1j * rng.standard_normal((k, n, n))
        a = (z * eye - m)[None, :, :] - scale * g
        h = a @ np.conj(np.swapaxes(a, 1, 2)) + (r * r) * eye[None, :, :]
        vals[done: done + k] = np.linalg.det(h).real
        done += k
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(samples))
    return mean, stderr


# ---------------------------------------------------------------------------
# closed forms for X0 = 0


def _laguerre_neg_table(nmax: int, c: float) -> np.ndarray:
    """L_j(-c) for j = 0..nmax by the three-term upward recurrence.

    At negative arguments every L_j is positive and the recurrence is
    stable (no cancellation between terms).
    """
    out = np.empty(nmax + 1)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = 1.0 + c
    for k in range(1, nmax):
        out[k + 1] = ((2.0 * k + 1.0 + c) * out[k] - k * out[k - 1]) / (k + 1.0)
    return out


def _log_laguerre_neg(j: int, c: float) -> float:
    """log L_j(-c) by the explicit positive sum; overflow-proof fallback."""
    if j == 0:
        return 0.0
    i = np.arange(j + 1)
    terms = (
        gammaln(j + 1)
        - gammaln(i + 1)
        - gammaln(j - i + 1)
        + _log_powers(c, j + 1)
        - gammaln(i + 1)
    )
    return float(logsumexp(terms))


def _log_powers(base: float, count: int) -> np.ndarray:
    """[k * log(base)]_{k=0..count-1} with the base = 0 case handled as the
    k = 0 term being 1 and the rest 0."""
    k = np.arange(count)
    if base > 0:
        return k * math.log(base)
    out = np.full(count, -np.inf)
    out[0] = 0.0
    return out


def aecp_ginibre_closed(n: int, z, r: float, tau: float) -> float:
    """log D for X0 = 0 via the Laguerre sum

        D = n! (tau/n)^n sum_{k=0}^{n} L_{n-k}(-n r^2/tau) (n |z|^2/tau)^k / k!,

    all terms positive; the sum is compensated (math.fsum) after shifting
    by the dominant log term.

    (Published statements of this sum sometimes carry an extra factor
    exp(-n r^2/tau); the Bessel-moment identity behind the sum produces
    exactly the inverse of that factor, so it cancels.  Without the
    cancellation the n = 1 value would disagree with the elementary
    Gaussian moment <|X|^2> + r^2 = tau + r^2 and the large-r limit
    D -> r^{2n} would fail; the form above matches the exact quadrature to
    machine precision.)
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    c = n * r * r / tau
    d = n * abs(z) ** 2 / tau
    lag = _laguerre_neg_table(n, c)
    if np.isfinite(lag).all() and np.all(lag > 0):
        log_lag = np.log(lag)
    else:
        log_lag = np.array([_log_laguerre_neg(j, c) for j in range(n + 1)])
    k = np.arange(n + 1)
    log_terms = log_lag[::-1] + _log_powers(d, n + 1) - gammaln(k + 1)
    top = float(np.max(log_terms))
    s = math.fsum(np.exp(log_terms - top))
    return float(gammaln(n + 1)) + n * math.log(tau / n) + top + math.log(s)


def _truncated_exp_sum(x: complex, count: int) -> tuple[float, complex]:
    """sum_{k=0}^{count-1} x^k / k! as (log magnitude shift, scaled complex sum)."""
    k = np.arange(count)
    ax = abs(x)
    logmag = _log_powers(ax, count) - gammaln(k + 1)
    top = float(np.max(logmag))
    phases = np.exp(1j * k * np.angle(x)) if ax > 0 else np.where(k == 0, 1.0 + 0j, 0j)
    s = np.sum(np.exp(logmag - top) * phases)
    return top, complex(s)


def two_arg_aecp(n_kernel: int, z, v, tau: float) -> complex:
    """Two-argument analytic continuation of the r = 0 polynomial:

        D^(N-1)([z,v], tau) = (tau/N)^(N-1) Gamma(N)
                              sum_{k=0}^{N-1} (N z vbar / tau)^k / k!

    with N = n_kernel.  Real positive at v = z; hermitian in (z, v).  At
    v = z it coincides with the X0 = 0 polynomial of size N-1 evaluated at
    the rescaled time tau (N-1)/N.
    """
    n = n_kernel
    if n < 1:
        raise ValueError(f"n_kernel must be >= 1, got {n}")
    x = n * z * np.conj(v) / tau
    top, s = _truncated_exp_sum(complex(x), n)
    log_pref = (n - 1) * math.log(tau / n) + float(gammaln(n))
    return complex(math.exp(log_pref + top) * s)


def kernel_K(n_kernel: int, z, v, tau: float) -> complex:
    """Determinantal kernel (trace-normalized so that the diagonal
    integrates to 1 over the plane):

        K_N(z,v) = (1/(tau pi)) exp(-(N/(2 tau)) (|z|^2 + |v|^2))
                   sum_{k=0}^{N-1} (N z vbar / tau)^k / k!.

    Magnitude handled in log domain with the phase carried explicitly.
    Note the trace normalization makes the reproducing identity carry a
    1/N:  int K(z,w) K(w,u) d^2w = K(z,u)/N  (N*K is the projector).
    """
    n = n_kernel
    if n < 1:
        raise ValueError(f"n_kernel must be >= 1, got {n}")
    x = n * z * np.conj(v) / tau
    top, s = _truncated_exp_sum(complex(x), n)
    log_pref = (
        -(n / (2.0 * tau)) * (abs(z) ** 2 + abs(v) ** 2)
        - math.log(tau * math.pi)
    )
    return complex(math.exp(log_pref + top) * s)
