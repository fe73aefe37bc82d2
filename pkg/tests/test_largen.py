import math

import numpy as np
import pytest

from nhdiff.core import (
    InitialCondition,
    build_initial,
    ginibre_spectrum,
    jordan_circulant,
    jordan_symbol_spectrum,
    singular_spectrum,
    spiric_spectrum,
)
from nhdiff.errors import InvalidStencilError
from nhdiff.largen import (
    characteristics_field,
    classify_support,
    closed_example,
    density_fd_oracle,
    density_general,
    hopf_lax_potential,
    initial_velocity,
    overlap_general,
    pseudospectrum_boundary,
    solve_rstar,
    spiric_density_gauss,
    spiric_density_printed,
    support_boundary,
    support_entry_time,
)
from nhdiff.observables import GridSpec

GIN = InitialCondition.zero()
SPIRIC = InitialCondition.spiric(1.0)
JORDAN = InitialCondition.jordan(1.0)


# ---------------------------------------------------------------------------
# support classification


def test_classify_ginibre_disk():
    for az, tau, inside in ((0.5, 1.0, True), (1.2, 1.0, False), (1.0, 1.0, True)):
        spec = ginibre_spectrum(az, 32)
        assert classify_support(spec, tau) is inside


def test_classify_spiric_quartic_boundary():
    tau = 0.5
    for x in np.linspace(0.0, 1.8, 25):
        z = complex(x, 0.1)
        spec = spiric_spectrum(1.0, z, 64)
        lhs = tau * (1.0 + abs(z) ** 2)
        rhs = abs(1.0 - z * z) ** 2
        assert classify_support(spec, tau) == (lhs >= rhs)


def test_classify_jordan_annulus():
    tau, alpha = 0.5, 1.0
    lo, hi = math.sqrt(1 - tau), math.sqrt(1 + tau)
    for az, inside in ((0.3, False), (lo + 0.02, True), (hi - 0.02, True), (hi + 0.05, False)):
        spec = jordan_symbol_spectrum(alpha, az, 512)
        assert classify_support(spec, tau) is inside


def test_entry_time_boundary_is_inside():
    spec = spiric_spectrum(1.0, 0.4 + 0.2j, 32)
    tau_b = support_entry_time(spec)
    assert classify_support(spec, tau_b)
    assert not classify_support(spec, tau_b * (1 - 1e-6))


def test_zero_singular_value_forces_inside():
    x0 = build_initial(JORDAN, 8)
    spec = singular_spectrum(x0, 0.0)  # z = 0 is the eigenvalue
    assert support_entry_time(spec) == 0.0
    assert classify_support(spec, 1e-12)


# ---------------------------------------------------------------------------
# r*, potential, overlap


def test_rstar_ginibre():
    tau = 1.0
    for az in (0.0, 0.3, 0.9):
        rs = solve_rstar(ginibre_spectrum(az, 48), tau)
        assert abs(rs - math.sqrt(tau - az * az)) < 1e-12


def test_rstar_spiric_closed_form():
    tau = 2.0
    for z in (0.0j, 0.4 + 0.3j, 0.9):
        big_z = 2 * z.real if isinstance(z, complex) else 2 * z
        z = complex(z)
        big_z = 2 * (z.conjugate() * 1.0).real
        big_s = math.sqrt(tau * tau + 4 * big_z * big_z)
        expected = math.sqrt(tau / 2 - 1.0 - abs(z) ** 2 + big_s / 2)
        rs = solve_rstar(spiric_spectrum(1.0, z, 64), tau)
        assert abs(rs - expected) < 1e-10


def test_rstar_jordan_closed_form():
    tau, alpha = 0.8, 1.0
    for az in (0.75, 0.95, 1.15):
        t_big = math.sqrt(tau * tau + 4 * alpha * alpha * az * az)
        expected = math.sqrt(t_big - az * az - alpha * alpha)
        rs = solve_rstar(jordan_symbol_spectrum(alpha, az, 64), tau)
        assert abs(rs - expected) < 1e-8


def test_rstar_outside_is_zero():
    assert solve_rstar(ginibre_spectrum(1.5, 16), 1.0) == 0.0


def test_rstar_all_zero_spectrum():
    # every s_i = 0 (probe on a fully degenerate eigenvalue): r* = sqrt(tau)
    spec = singular_spectrum(np.zeros((4, 4)), 0.0)
    assert abs(solve_rstar(spec, 0.7) - math.sqrt(0.7)) < 1e-12


def test_rstar_monotone_in_tau():
    spec = jordan_symbol_spectrum(1.0, 0.9, 64)
    rs = [solve_rstar(spec, t) for t in np.linspace(0.3, 2.0, 15)]
    assert np.all(np.diff(rs) >= -1e-12)


def test_potential_ginibre():
    tau = 1.0
    inside = hopf_lax_potential(ginibre_spectrum(0.6, 32), tau)
    assert abs(inside - (math.log(tau) + 0.36 / tau - 1.0)) < 1e-12
    outside = hopf_lax_potential(ginibre_spectrum(1.4, 32), tau)
    assert abs(outside - math.log(1.4**2)) < 1e-12


def test_potential_jordan_three_regions():
    tau, alpha, n = 0.5, 1.0, 1024
    # inner hole
    v = hopf_lax_potential(jordan_symbol_spectrum(alpha, 0.3, n), tau)
    assert abs(v - math.log(alpha * alpha)) < 1e-6
    # annulus
    az = 1.0
    t_big = math.sqrt(tau**2 + 4 * az * az)
    expected = math.log(0.5 * tau + 0.5 * t_big) + (az * az + 1.0 - t_big) / tau
    v = hopf_lax_potential(jordan_symbol_spectrum(alpha, az, n), tau)
    assert abs(v - expected) < 1e-8
    # far outside
    v = hopf_lax_potential(jordan_symbol_spectrum(alpha, 1.6, n), tau)
    assert abs(v - math.log(1.6**2)) < 1e-6


def test_overlap_construction_identity():
    spec = spiric_spectrum(1.0, 0.4, 64)
    tau = 2.0
    rs = solve_rstar(spec, tau)
    assert overlap_general(spec, tau) == rs * rs / (math.pi * tau * tau)


def test_overlap_vanishes_on_boundary():
    spec = ginibre_spectrum(1.0, 16)
    assert overlap_general(spec, 1.0) < 1e-12


# ---------------------------------------------------------------------------
# densities


def test_density_ginibre_uniform():
    for tau in (0.5, 1.0):
        v = density_general(np.zeros((16, 16)), 0.3, tau)
        assert abs(v - 1.0 / (math.pi * tau)) < 1e-12


def test_density_outside_zero():
    assert density_general(np.zeros((8, 8)), 1.4, 1.0) == 0.0


def test_density_jordan_circulant_matches_closed():
    tau = 0.8
    x0 = jordan_circulant(1.0, 64)
    for az in (0.8, 0.95, 1.1):
        got = density_general(x0, az, tau)
        t_big = math.sqrt(tau * tau + 4 * az * az)
        expected = (1.0 - 1.0 / t_big) / (math.pi * tau)
        assert abs(got - expected) < 1e-8


def test_density_spiric_gauss_law_consistency():
    tau = 2.0
    x0 = build_initial(SPIRIC, 64)
    for z in (0.3j, 0.5 + 0.2j, 0.8):
        general = density_general(x0, z, tau)
        gauss = spiric_density_gauss(z, tau, 1.0)
        assert abs(general - gauss) < 1e-10


def test_density_fd_oracle_ginibre():
    v = density_fd_oracle(np.zeros((16, 16)), 0.4, 1.0, 1e-3)
    assert abs(v - 1.0 / math.pi) < 1e-5


def test_density_fd_oracle_spiric_imaginary_axis():
    # on the imaginary axis the spiric density is (tau - |a|^2)/(pi tau^2)
    x0 = build_initial(SPIRIC, 32)
    v = density_fd_oracle(x0, 0.3j, 2.0, 1e-3)
    assert abs(v - 1.0 / (4 * math.pi)) < 1e-4


def test_density_fd_oracle_second_order():
    x0 = build_initial(SPIRIC, 16)
    target = spiric_density_gauss(0.5 + 0.2j, 2.0, 1.0)
    e1 = abs(density_fd_oracle(x0, 0.5 + 0.2j, 2.0, 4e-3) - target)
    e2 = abs(density_fd_oracle(x0, 0.5 + 0.2j, 2.0, 2e-3) - target)
    assert 2.5 < e1 / e2 < 6.0


def test_density_fd_oracle_stencil_error():
    with pytest.raises(InvalidStencilError):
        density_fd_oracle(np.zeros((8, 8)), 0.9999, 1.0, 1e-3)


def test_density_general_matches_fd_for_random_matrix():
    rng = np.random.default_rng(21)
    n = 24
    x0 = 0.2 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    for z in (0.1 + 0.05j, -0.2j, 0.15):
        spec = singular_spectrum(x0, z)
        if not classify_support(spec, 1.0):
            continue
        assert abs(density_general(x0, z, 1.0) - density_fd_oracle(x0, z, 1.0, 1e-3)) < 1e-6


def test_spiric_printed_form_diverges_on_axis():
    tau = 2.0
    assert spiric_density_printed(0.0j, tau, 1.0) == float("inf")
    # off the axis the printed arrangement can differ from the Gauss form
    z = 0.8
    assert abs(spiric_density_printed(z, tau, 1.0) - spiric_density_gauss(z, tau, 1.0)) > 1e-3


def test_spiric_gauss_law_matches_potential_laplacian():
    # independent derivation: second derivative of the closed potential
    tau, a, h = 1.5, 1.0, 1e-4
    for z in (0.5, 0.4 + 0.3j):
        z = complex(z)
        phis = []
        for p in (z, z + h, z - h, z + 1j * h, z - 1j * h):
            phis.append(closed_example(SPIRIC, p, tau).phi)
        lap = (phis[1] + phis[2] + phis[3] + phis[4] - 4 * phis[0]) / (h * h)
        assert abs(lap / (4 * math.pi) - spiric_density_gauss(z, tau, a)) < 1e-5


# ---------------------------------------------------------------------------
# closed examples


def test_closed_ginibre_fields():
    p = closed_example(GIN, 0.5, 1.0)
    assert p.inside and abs(p.rho - 1.0 / math.pi) < 1e-14
    assert abs(p.overlap - (1.0 - 0.25) / math.pi) < 1e-14
    q = closed_example(GIN, 1.3, 1.0)
    assert not q.inside and q.rho == 0.0 and q.overlap == 0.0 and q.r_star == 0.0


def test_closed_spiric_overlap_origin():
    # at z = 0 and tau > |a|^2: O = (tau - 1)/(pi tau^2)
    for tau in (1.5, 2.0, 3.0):
        p = closed_example(SPIRIC, 0.0, tau)
        assert abs(p.overlap - (tau - 1.0) / (math.pi * tau * tau)) < 1e-14


def test_closed_spiric_collision_time():
    # the two islands first touch the origin at tau = |a|^2 = 1
    at = closed_example(SPIRIC, 0.0, 1.0)
    assert at.inside and at.r_star == 0.0
    before = closed_example(SPIRIC, 0.0, 0.99)
    assert not before.inside


def test_closed_jordan_radii():
    tau = 0.5
    lo, hi = math.sqrt(0.5), math.sqrt(1.5)
    assert not closed_example(JORDAN, lo - 0.01, tau).inside
    assert closed_example(JORDAN, lo + 0.01, tau).inside
    assert closed_example(JORDAN, hi - 0.01, tau).inside
    assert not closed_example(JORDAN, hi + 0.01, tau).inside


def test_closed_matches_solver_all_families():
    cases = [
        (GIN, np.zeros((64, 64), dtype=complex), ginibre_spectrum, 1.0, (0.2, 0.6, 0.9)),
        (SPIRIC, build_initial(SPIRIC, 64), lambda z, n: spiric_spectrum(1.0, z, n), 2.0, (0.1, 0.6, 1.1)),
        (JORDAN, jordan_circulant(1.0, 64), lambda z, n: jordan_symbol_spectrum(1.0, z, n), 0.8, (0.8, 0.95, 1.1)),
    ]
    for cond, matrix, spec_fn, tau, xs in cases:
        for x in xs:
            cl = closed_example(cond, x, tau)
            spec = spec_fn(complex(x), 64)
            assert abs(solve_rstar(spec, tau) - cl.r_star) < 1e-8
            assert abs(overlap_general(spec, tau) - cl.overlap) < 1e-8
            assert abs(hopf_lax_potential(spec, tau) - cl.phi) < 1e-8
            assert abs(density_general(matrix, complex(x), tau) - cl.rho) < 1e-8


def test_jordan_degenerates_to_ginibre():
    cond = InitialCondition.jordan(1e-6)
    for x in np.linspace(0.05, 1.3, 12):
        for tau in (0.5, 1.0):
            a = closed_example(cond, x, tau)
            b = closed_example(GIN, x, tau)
            assert abs(a.rho - b.rho) < 1e-4
            assert abs(a.overlap - b.overlap) < 1e-4
            assert abs(a.phi - b.phi) < 1e-4


def test_fields_continuous_across_boundary():
    eps = 1e-7
    # phi and overlap are continuous; for the zero start rho jumps by 1/(pi tau)
    tau = 1.0
    inside = closed_example(GIN, 1.0 - eps, tau)
    outside = closed_example(GIN, 1.0 + eps, tau)
    assert abs(inside.phi - outside.phi) < 1e-5
    assert abs(inside.overlap - outside.overlap) < 1e-5
    assert abs((inside.rho - outside.rho) - 1.0 / (math.pi * tau)) < 1e-12
    # spiric boundary point along the real axis at tau = 0.5
    tau = 0.5
    xb = None
    for x in np.linspace(1.0, 1.8, 100000):
        if tau * (1 + x * x) >= abs(1 - x * x) ** 2:
            xb = x
    inside = closed_example(SPIRIC, xb, tau)
    outside = closed_example(SPIRIC, xb + 1e-6, tau)
    assert abs(inside.phi - outside.phi) < 1e-4
    assert abs(inside.overlap - outside.overlap) < 1e-4


def test_density_normalization():
    # ginibre: exact by construction; jordan: radial quadrature;
    # spiric: midpoint with refined boundary cells
    from numpy.polynomial.legendre import leggauss

    tau, alpha = 0.8, 1.0
    t, w = leggauss(200)
    lo, hi = math.sqrt(1 - tau), math.sqrt(1 + tau)
    r = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
    wr = 0.5 * (hi - lo) * w
    vals = np.array([closed_example(JORDAN, rr, tau).rho for rr in r])
    assert abs(2 * math.pi * np.sum(vals * r * wr) - 1.0) < 1e-10

    tau = 2.0
    m = 600
    xs = np.linspace(-2.2, 2.2, m, endpoint=False) + 2.2 / m
    total = 0.0
    cell = (4.4 / m) ** 2
    for x in xs:
        for y in xs:
            z = complex(x, y)
            if tau * (1 + abs(z) ** 2) >= abs(1 - z * z) ** 2:
                total += spiric_density_gauss(z, tau, 1.0) * cell
    assert abs(total - 1.0) < 2e-3


# ---------------------------------------------------------------------------
# characteristics


def test_characteristics_ginibre_shock_time():
    res = characteristics_field(GIN, 1.0, [0.0, 0.3, 0.8], 3.0)
    assert abs(res.shock_time - 1.0) < 1e-9


def test_characteristics_spiric_shock_time():
    z = 0.5
    res = characteristics_field(SPIRIC, z, [0.1, 0.5], 3.0)
    expected = abs(1 - z * z) ** 2 / (1 + z * z)
    assert abs(res.shock_time - expected) < 1e-9


def test_characteristics_jordan_shock_time():
    res = characteristics_field(JORDAN, 1.2, [0.2], 3.0)
    assert abs(res.shock_time - abs(1.2**2 - 1.0)) < 1e-8


def test_characteristics_zero_label_flat():
    res = characteristics_field(GIN, 0.7, [0.0], 2.0)
    line = res.lines[0]
    assert all(r == 0.0 for _, r in line.points)
    assert initial_velocity(GIN, 0.7, 0.0) == 0.0


def test_characteristics_truncate_at_crossing():
    # the line with label r* crosses r = 0 at tau = r*/nu0 and stops there
    res = characteristics_field(GIN, 1.0, [0.5], 10.0)
    line = res.lines[0]
    taus = [t for t, _ in line.points]
    nu = initial_velocity(GIN, 1.0, 0.5)
    assert abs(taus[-1] - 0.5 / nu) < 1e-12
    assert min(r for _, r in line.points) >= 0.0


def test_characteristics_validation():
    with pytest.raises(ValueError):
        characteristics_field(GIN, 1.0, [-0.1], 1.0)
    with pytest.raises(ValueError):
        characteristics_field(InitialCondition.explicit(np.zeros((2, 2))), 1.0, [0.1], 1.0)


# ---------------------------------------------------------------------------
# contours


def test_pseudospectrum_circle():
    eps = 0.3
    grid = GridSpec(-1.2, 1.2, -1.2, 1.2, 160, 160)
    contours = pseudospectrum_boundary(np.zeros((4, 4)), eps, grid)
    pts = np.vstack(contours)
    radii = np.hypot(pts[:, 0], pts[:, 1])
    assert np.abs(radii - math.sqrt(4) * eps).max() < 2 * (2.4 / 160)


def test_pseudospectrum_shrinks_with_epsilon():
    grid = GridSpec(-1.0, 1.0, -1.0, 1.0, 120, 120)
    big = pseudospectrum_boundary(np.zeros((4, 4)), 0.3, grid)
    small = pseudospectrum_boundary(np.zeros((4, 4)), 0.1, grid)
    rb = np.hypot(*np.vstack(big).T).mean()
    rs = np.hypot(*np.vstack(small).T).mean()
    assert rs < rb


def test_jordan_circulant_annulus_contours():
    tau, alpha = 0.8, 1.0
    grid = GridSpec(-1.6, 1.6, -1.6, 1.6, 300, 300)
    contours = support_boundary(
        lambda z: jordan_symbol_spectrum(alpha, z, 256), grid, tau
    )
    assert len(contours) == 2
    means = sorted(np.hypot(*c.T).mean() for c in contours)
    assert abs(means[0] - math.sqrt(1 - tau)) < 0.02
    assert abs(means[1] - math.sqrt(1 + tau)) < 0.02


def test_jordan_shift_has_no_inner_contour():
    # the plain superdiagonal shift develops exponentially small singular
    # values inside the annulus hole, so its finite-n level set is a full
    # disk: only the outer boundary appears (the cyclic realization is the
    # one reproducing the limiting annulus)
    tau, n = 0.5, 48
    x0 = build_initial(JORDAN, n)
    grid = GridSpec(-1.6, 1.6, -1.6, 1.6, 100, 100)
    eps = math.sqrt(tau / n)
    contours = pseudospectrum_boundary(x0, eps, grid)
    assert len(contours) == 1
    assert abs(np.hypot(*contours[0].T).mean() - math.sqrt(1 + tau)) < 0.05


def test_empty_level_set():
    grid = GridSpec(0.5, 1.0, 0.5, 1.0, 40, 40)
    # support of the zero start at tiny tau never enters this window
    contours = support_boundary(lambda z: ginibre_spectrum(z, 8), grid, 1e-4)
    assert contours == []
