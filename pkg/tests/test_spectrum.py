import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from undulate import (DomainError, Grid3D, ModeIndex, Parameters, apply_L,
                      critical_field, detect_resonances, eigenfunction,
                      eigenvalue_slope, eigenvalues, global_critical_field,
                      mode_displacement, mode_spectrum, second_variation)

P63 = Parameters(eps=0.3, a=2 / 3, b=2 / 3)

# closed forms evaluated with exact rational arithmetic (eps = 3/10, a = b = 2/3):
# tau = eps p^2 + (1/eps) l^2/p^2 with p^2 = (am)^2 + (bn)^2 + l^2
TAU_111 = float(Fraction(3, 10) * Fraction(17, 9) + Fraction(10, 3) * Fraction(9, 17))
TAU_121 = float(Fraction(3, 10) * Fraction(29, 9) + Fraction(10, 3) * Fraction(9, 29))
# slope = p^2 / ((l/p)^2 - p^2 - 1)
SLOPE_111 = float(Fraction(17, 9) / (Fraction(9, 17) - Fraction(17, 9) - 1))
SLOPE_121 = float(Fraction(29, 9) / (Fraction(9, 29) - Fraction(29, 9) - 1))


def brute_force_tau_min(p, m_max, n_max, l_max):
    """Naive reimplementation of the critical-field minimization."""
    best, arg = np.inf, []
    for m in range(m_max + 1):
        for n in range(n_max + 1):
            for l in range(1, l_max + 1):
                p2 = (p.a * m) ** 2 + (p.b * n) ** 2 + l**2
                tau = p.eps * p2 + (l / math.sqrt(p2)) ** 2 / p.eps
                if tau < best - 1e-12:
                    best, arg = tau, [(m, n, l)]
                elif abs(tau - best) <= 1e-12:
                    arg.append((m, n, l))
    return best, arg


def test_symmetric_minimum_case():
    # eps = 1, m = n = 0, l = 1: tau = x + 1/x at x = 1
    assert critical_field(ModeIndex(0, 0, 1), Parameters(eps=1.0)) == 2.0


def test_frozen_rational_values():
    assert TAU_111 == pytest.approx(2.3313725490196078, rel=1e-15)
    assert TAU_121 == pytest.approx(2.0011494252873563, rel=1e-15)
    assert critical_field(ModeIndex(1, 1, 1), P63) == pytest.approx(TAU_111, rel=1e-13)
    assert critical_field(ModeIndex(1, 2, 1), P63) == pytest.approx(TAU_121, rel=1e-13)
    assert SLOPE_111 == pytest.approx(-0.8005540166204986, rel=1e-15)   # -289/361
    assert SLOPE_121 == pytest.approx(-0.8237022526934378, rel=1e-15)   # -841/1021
    assert eigenvalue_slope(ModeIndex(1, 1, 1), P63) == pytest.approx(SLOPE_111, rel=1e-13)
    assert eigenvalue_slope(ModeIndex(1, 2, 1), P63) == pytest.approx(SLOPE_121, rel=1e-13)


def test_slope_simple_case():
    # p^2 = 1 gives 1/(1 - 1 - 1) = -1 for any a, b, eps
    for eps in (0.1, 0.5, 1.0, 2.0):
        assert eigenvalue_slope(ModeIndex(0, 0, 1), Parameters(eps=eps, a=3.0, b=0.7)) == -1.0


def test_l_must_be_positive():
    with pytest.raises(DomainError):
        ModeIndex(1, 1, 0)


def test_eigenvalues_hand_expanded_case():
    # eps=1, m=n=0, l=1, tau=0: (1-lam)(1-lam) + 1-lam = 0 -> lam = 1, 2
    lam = eigenvalues(ModeIndex(0, 0, 1), 0.0, Parameters(eps=1.0))
    assert lam[0] == pytest.approx(1.0, abs=1e-14)
    assert lam[1] == pytest.approx(2.0, abs=1e-14)


def test_eigenvalue_crossing_at_critical_field():
    for m, n, l in itertools.product(range(0, 4), range(0, 4), range(1, 4)):
        mode = ModeIndex(m, n, l)
        tau_c = critical_field(mode, P63)
        lam = eigenvalues(mode, tau_c, P63)
        assert min(abs(lam[0]), abs(lam[1])) <= 1e-12
        lo = eigenvalues(mode, tau_c + 0.05, P63)
        assert lo[0] < 0  # one root below zero just past the crossing
        hi = eigenvalues(mode, tau_c - 0.05, P63)
        assert hi[0] > 0


def test_slope_negative_over_box():
    for m, n, l in itertools.product(range(0, 21), range(0, 21), range(1, 7)):
        s = eigenvalue_slope(ModeIndex(m, n, l), P63)
        assert s < 0


def test_slope_matches_finite_difference():
    h = 1e-6
    for mode in (ModeIndex(1, 1, 1), ModeIndex(1, 2, 1), ModeIndex(2, 3, 2),
                 ModeIndex(0, 1, 1)):
        tau_c = critical_field(mode, P63)

        def nearest_root(tau):
            lam = eigenvalues(mode, tau, P63)
            return lam[0] if abs(lam[0]) < abs(lam[1]) else lam[1]

        fd = (nearest_root(tau_c + h) - nearest_root(tau_c - h)) / (2 * h)
        assert fd == pytest.approx(eigenvalue_slope(mode, P63), rel=1e-6)


def test_critical_field_sign_invariance():
    for m, n, l in ((1, 2, 1), (3, 1, 2), (2, 2, 3)):
        ref = critical_field(ModeIndex(m, n, l), P63)
        for sm, sn in ((-1, 1), (1, -1), (-1, -1)):
            assert critical_field(ModeIndex(sm * m, sn * n, l), P63) == ref


def test_global_critical_field_vs_brute_force():
    tau_c, argmin = global_critical_field(P63, 8, 8, 4)
    ref, ref_arg = brute_force_tau_min(P63, 8, 8, 4)
    assert abs(tau_c - ref) <= 1e-12
    assert sorted(tuple(m) for m in argmin) == sorted(ref_arg)
    assert sorted(tuple(m) for m in argmin) == [(1, 2, 1), (2, 1, 1)]
    assert 1.9 <= tau_c <= 2.1


def test_global_critical_field_large_aspect():
    # lateral terms only increase tau for large a, b: minimizer is axial (0,0,1)
    p = Parameters(eps=1.0, a=10.0, b=10.0)
    tau_c, argmin = global_critical_field(p, 4, 4, 3)
    assert tau_c == 2.0
    assert [tuple(m) for m in argmin] == [(0, 0, 1)]
    tau_na, argmin_na = global_critical_field(p, 4, 4, 3, disallow_axial=True)
    assert tau_na > tau_c
    assert sorted(tuple(m) for m in argmin_na) == [(0, 1, 1), (1, 0, 1)]


def test_global_critical_field_boundary_error():
    with pytest.raises(DomainError):
        global_critical_field(P63, 2, 2, 4)  # argmin (2,1,1) on the m boundary


def test_mode_spectrum_consistency():
    ms = mode_spectrum(ModeIndex(1, 2, 1), P63)
    assert ms.p2 == pytest.approx(ms.alpha**2 + ms.beta**2 + 1, rel=1e-14)
    assert ms.tau_crit == pytest.approx(TAU_121, rel=1e-13)
    assert ms.slope < 0
    lam = ms.eigenvalues(ms.tau_crit, P63)
    assert min(abs(lam[0]), abs(lam[1])) <= 1e-12


def test_detect_resonances():
    # a = b: the swap (2,1,1) resonates with (1,2,1)
    hits = detect_resonances(ModeIndex(1, 2, 1), P63, (8, 8, 4))
    assert [tuple(h) for h in hits] == [(2, 1, 1)]
    # generic (a, b): no resonances
    pg = Parameters(eps=0.3, a=2 / 3, b=0.71)
    assert detect_resonances(ModeIndex(1, 2, 1), pg, (8, 8, 4)) == []
    # swap coincides with the sign family when m0 = n0
    assert detect_resonances(ModeIndex(1, 1, 1), P63, (6, 6, 3)) == []


# ---------------------------------------------------------------------------
# eigenfunctions
# ---------------------------------------------------------------------------

@pytest.fixture
def grid():
    return Grid3D.from_parameters(P63, 16, 16, 31)


def test_eigenfunction_parity_and_boundary(grid):
    prof_odd = eigenfunction(ModeIndex(1, 2, 1), 0.0, P63, grid)
    assert prof_odd.parity == "cos"
    assert prof_odd.profile[0] == 0.0 and prof_odd.profile[-1] == 0.0
    mid = grid.kmid
    assert prof_odd.profile[mid] == pytest.approx(1.0, rel=1e-14)  # cos(0)
    prof_even = eigenfunction(ModeIndex(1, 1, 2), 0.0, P63, grid)
    assert prof_even.parity == "sin"
    # sin(2z) is odd in z
    assert prof_even.profile[1] == pytest.approx(-prof_even.profile[-2], rel=1e-12)


def test_eigenfunction_conjugation(grid):
    e = eigenfunction(ModeIndex(1, 2, 1), 0.1, P63, grid)
    em = eigenfunction(ModeIndex(-1, -2, 1), 0.1, P63, grid)
    assert np.abs(em.samples - np.conj(e.samples)).max() <= 1e-14


def test_eigenfunction_reflection_relations(grid):
    # e_{m,n,l} = R_x e_{-m,n,l} = R_y e_{m,-n,l} = (-1)^{l+1} e_{m,n,l}(-z)
    for mode in (ModeIndex(1, 2, 1), ModeIndex(2, 1, 2)):
        e = eigenfunction(mode, 0.0, P63, grid).samples
        ex = eigenfunction(ModeIndex(-mode.m, mode.n, mode.l), 0.0, P63, grid).samples.copy()
        ex[:, 0] = -ex[:, 0]
        assert np.abs(e - ex).max() <= 1e-14
        ey = eigenfunction(ModeIndex(mode.m, -mode.n, mode.l), 0.0, P63, grid).samples.copy()
        ey[:, 1] = -ey[:, 1]
        assert np.abs(e - ey).max() <= 1e-14
        flip = (-1.0) ** (mode.l + 1) * e[::-1]
        assert np.abs(e - flip).max() <= 1e-14


def test_eigenfunction_axial_rejected(grid):
    with pytest.raises(DomainError):
        eigenfunction(ModeIndex(0, 0, 1), 0.0, P63, grid)


# ---------------------------------------------------------------------------
# discrete L
# ---------------------------------------------------------------------------

def _random_displacement(grid, seed):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(grid.shape() + (3,))
    u[:, :, 0, :] = 0.0
    u[:, :, -1, :] = 0.0
    return u


def test_apply_L_zero(grid):
    u = np.zeros(grid.shape() + (3,))
    assert np.abs(apply_L(u, 1.0, P63, grid)).max() == 0.0


def test_apply_L_requires_plate_zero(grid):
    u = np.ones(grid.shape() + (3,))
    with pytest.raises(DomainError):
        apply_L(u, 1.0, P63, grid)


def test_apply_L_self_adjoint(grid):
    from undulate._ops import trapezoid_weights
    wz = trapezoid_weights(grid.nzt, grid.hz)
    W = (grid.hx * grid.hy * wz)[None, None, :, None]
    u = _random_displacement(grid, 0)
    v = _random_displacement(grid, 1)
    tau = 1.7
    lhs = float(np.sum(W * apply_L(u, tau, P63, grid) * v))
    rhs = float(np.sum(W * u * apply_L(v, tau, P63, grid)))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_apply_L_matches_quadratic_form(grid):
    # <L u, u> equals the second-variation quadrature (connects the modules)
    from undulate._ops import trapezoid_weights
    wz = trapezoid_weights(grid.nzt, grid.hz)
    W = (grid.hx * grid.hy * wz)[None, None, :, None]
    tau = 2.0
    for seed in range(10):
        u = _random_displacement(grid, seed)
        ip = float(np.sum(W * apply_L(u, tau, P63, grid) * u))
        q = second_variation(u, tau, P63, grid)
        assert ip == pytest.approx(q, rel=1e-8)


def test_apply_L_single_fourier_mode_closed_form(grid):
    # on u = 2 Re(coef e(z) e^{i theta}) with profile f_l, L acts by the
    # 2x2 symbol with l^2 replaced by the discrete sine eigenvalue mu_l
    mode = ModeIndex(1, 2, 1)
    tau = 1.3
    u = mode_displacement(mode, 0.0, P63, grid, coeff=0.35)
    out = apply_L(u, tau, P63, grid)
    # closed-form image: apply the symbol to the amplitude vector
    alpha, beta = P63.a * mode.m, P63.b * mode.n
    mu = (2 - 2 * np.cos(mode.l * grid.hz)) / grid.hz**2
    amp = np.array([1j * alpha, 1j * beta, 1.0]) / np.array(
        [alpha**2 + beta**2, alpha**2 + beta**2, mode.l**2 + alpha**2 + beta**2])
    eps = P63.eps
    k2 = alpha**2 + beta**2 + mu
    img = np.array([
        eps * k2 * amp[0] - 1j * alpha * amp[2] / eps + amp[0] / eps - tau * amp[0],
        eps * k2 * amp[1] - 1j * beta * amp[2] / eps + amp[1] / eps - tau * amp[1],
        k2 * amp[2] / eps + (1j * alpha * amp[0] + 1j * beta * amp[1]) / eps,
    ])
    theta = P63.a * mode.m * grid.x[:, None] + P63.b * mode.n * grid.y[None, :]
    prof = np.cos(mode.l * grid.z)
    prof[0] = prof[-1] = 0.0
    expect = 2 * np.real(0.35 * np.exp(1j * theta)[:, :, None, None]
                         * (prof[:, None] * img[None, :])[None, None])
    assert np.abs(out - expect).max() <= 1e-11


def test_apply_L_eigen_residual_second_order():
    # residual at tau_crit, lambda = 0 decreases at order hz^2 (ratio ~ 4)
    modes = [ModeIndex(*mnl) for mnl in
             ((1, 2, 1), (2, 1, 1), (1, 1, 1), (1, 1, 2), (2, 2, 1),
              (1, 3, 1), (0, 1, 1), (3, 1, 2), (2, 3, 2), (1, 2, 3))]
    for mode in modes:
        tau_c = critical_field(mode, P63)
        res = []
        for nz in (15, 31):
            g = Grid3D.from_parameters(P63, 16, 16, nz)
            u = mode_displacement(mode, 0.0, P63, g, coeff=0.5)
            res.append(np.abs(apply_L(u, tau_c, P63, g)).max())
        ratio = res[0] / res[1]
        assert 3.5 <= ratio <= 4.5, (tuple(mode), ratio)
