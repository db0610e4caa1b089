import math

import numpy as np
import pytest

from undulate import (DomainError, Field2D, Grid3D, ModeIndex, Parameters,
                      critical_field, demag_field, mode_displacement,
                      pattern_lower_bound, planar_energy,
                      quadratic_expansion_check, second_variation, solve_phase,
                      square_limit_field, square_pattern, stripe_limit_field,
                      stripe_pattern, total_energy, uniform_state,
                      wall_energy_density)
from undulate.energy import WallPattern, WallSegment, displacement_to_state

P = Parameters(eps=0.3, tau=1.2, c=math.sqrt(5.0), g=0.25, a=2 / 3, b=2 / 3)
GRID = Grid3D.from_parameters(P, 16, 16, 15)


def _random_displacement(grid, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    u = scale * rng.standard_normal(grid.shape() + (3,))
    u[:, :, 0, :] = 0.0
    u[:, :, -1, :] = 0.0
    return u


def test_uniform_state_zero_energy():
    for eps, tau, c in ((0.3, 0.0, math.sqrt(5.0)), (0.7, 3.1, 1.0), (1.0, 1.0, 0.4)):
        p = Parameters(eps=eps, tau=tau, c=c, g=0.25, a=2 / 3, b=1.5)
        grid = Grid3D.from_parameters(p, 8, 8, 9)
        e = total_energy(uniform_state(p, grid), p, grid)
        assert abs(e.total) <= 1e-13
        assert abs(e.compression) <= 1e-13 and e.frank == 0.0
        assert abs(e.potential) <= 1e-13 and e.magnetic == 0.0


def test_total_energy_breakdown_sums():
    s = displacement_to_state(_random_displacement(GRID, 3, scale=0.05), P, GRID)
    e = total_energy(s, P, GRID)
    assert e.total == pytest.approx(e.compression + e.frank + e.potential + e.magnetic,
                                    rel=1e-12)
    assert e.compression >= 0 and e.frank >= 0 and e.potential >= 0


def test_total_energy_rejects_non_unit_director():
    s = uniform_state(P, GRID)
    s.n[3, 4, 5] *= 1.1
    with pytest.raises(DomainError):
        total_energy(s, P, GRID)


def test_constant_amplitude_scaling_closed_form():
    # psi = (1+s) psi0, n = e3: compression stays exactly zero (the term is
    # linear in psi and annihilates psi0), only the potential survives:
    # (g/2 eps)(1-(1+s)^2)^2 |Omega|
    s_amp = 0.17
    state = uniform_state(P, GRID)
    state.psi = (1 + s_amp) * state.psi
    from undulate.core import boundary_psi_values
    lo, hi = boundary_psi_values(P)  # keep exact plate data
    state.psi[:, :, 0] = lo
    state.psi[:, :, -1] = hi
    e = total_energy(state, P, GRID)
    vol = (2 * np.pi / P.a) * (2 * np.pi / P.b) * np.pi
    expected = P.g / (2 * P.eps) * (1 - (1 + s_amp) ** 2) ** 2 * vol
    # plate rows carry (1-|psi|^2)^2 = 0, weight hz/2 each: subtract their share
    expected_interior = expected * (1 - GRID.hz / np.pi)
    assert e.potential == pytest.approx(expected_interior, rel=1e-12)
    assert abs(e.compression) <= 1e-10 * expected
    assert e.frank == 0.0


def test_second_variation_reduced_form_nonnegative():
    # w = 0: Q = (1/eps) int |grad v|^2 >= 0
    rng = np.random.default_rng(5)
    u = np.zeros(GRID.shape() + (3,))
    u[:, :, 1:-1, 2] = rng.standard_normal((GRID.Nx, GRID.Ny, GRID.Nz))
    q = second_variation(u, 5.0, P, GRID)
    assert q >= 0
    # independent quadrature of the same reduced form
    from undulate._ops import LateralSpectral, trapezoid_weights
    lat = LateralSpectral(GRID.Nx, GRID.Ny, P.a, P.b)
    wz = trapezoid_weights(GRID.nzt, GRID.hz)
    v = u[..., 2]
    vh = lat.fft(v)
    dxv = lat.ifft(lat.ikx[:, :, None] * vh).real
    dyv = lat.ifft(lat.iky[:, :, None] * vh).real
    dzv = (v[:, :, 1:] - v[:, :, :-1]) / GRID.hz
    mu = GRID.hx * GRID.hy
    ref = (float(((dxv**2 + dyv**2).sum(axis=(0, 1))) @ wz)
           + GRID.hz * float((dzv**2).sum())) * mu / P.eps
    assert q == pytest.approx(ref, rel=1e-12)


def test_second_variation_eigenmode_near_zero():
    # at tau = tau_crit the quadratic form on the eigenmode is O(hz^2)
    mode = ModeIndex(1, 2, 1)
    tau_c = critical_field(mode, P)
    vals = []
    for nz in (15, 31):
        g = Grid3D.from_parameters(P, 16, 16, nz)
        u = mode_displacement(mode, 0.0, P, g, coeff=0.5)
        norm2 = float((u**2).sum()) * g.hx * g.hy * g.hz
        vals.append(abs(second_variation(u, tau_c, P, g)) / norm2)
    assert vals[0] <= 2e-3
    assert 3.0 <= vals[0] / vals[1] <= 5.0


def test_quadratic_expansion_trivial_and_random():
    u0 = np.zeros(GRID.shape() + (3,))
    rep0 = quadratic_expansion_check(u0, P, GRID)
    assert rep0.fitted == pytest.approx(0.0, abs=1e-13)
    p0 = Parameters(eps=0.3, tau=0.0, c=math.sqrt(5.0), g=0.25, a=2 / 3, b=2 / 3)
    u = _random_displacement(GRID, 11, scale=0.1)
    rep = quadratic_expansion_check(u, p0, GRID, t_values=(1e-3, 2e-3, 4e-3))
    assert rep.rel_error <= 1e-3


def test_quadratic_coefficient_ratio_in_t():
    # F(t u) - F(0) = t^2 Q + O(t^3): the residual ratio halves with t
    u = _random_displacement(GRID, 13, scale=0.1)
    base = total_energy(uniform_state(P, GRID), P, GRID).total
    q = second_variation(u, P.tau, P, GRID)

    def coeff(t):
        st = displacement_to_state(t * u, P, GRID)
        return (total_energy(st, P, GRID).total - base) / t**2

    r1 = abs(coeff(2e-3) - q)
    r2 = abs(coeff(1e-3) - q)
    assert r2 <= 0.6 * r1


def test_energy_group_invariance():
    from undulate import GroupElement, transform_state
    s = displacement_to_state(_random_displacement(GRID, 17, scale=0.05), P, GRID)
    e0 = total_energy(s, P, GRID).total
    gens = [GroupElement.rotation(2 * np.pi * 3 / GRID.Nx, 2 * np.pi * 5 / GRID.Ny),
            GroupElement.kappa_x(), GroupElement.kappa_y(), GroupElement.kappa_z()]
    for gamma in gens:
        e1 = total_energy(transform_state(s, gamma, P, GRID), P, GRID).total
        assert abs(e1 - e0) <= 1e-10 * (1 + abs(e0))


# ---------------------------------------------------------------------------
# planar model
# ---------------------------------------------------------------------------

P2 = Parameters(eps=0.05, delta=1.5)


def test_planar_energy_uniform_vertical():
    N = 32
    state = Field2D(phi=np.zeros((N, N)), n=np.zeros((N, N, 3)))
    state.n[..., 2] = 1.0
    e = planar_energy(state, P2)
    assert e.total == pytest.approx(P2.eps ** (-P2.delta), rel=1e-12)
    assert e.compression == 0.0 and e.frank == 0.0


def test_planar_energy_uniform_horizontal():
    N = 32
    state = Field2D(phi=np.zeros((N, N)), n=np.zeros((N, N, 3)))
    state.n[..., 0] = 1.0
    assert np.abs(solve_phase(state.n)).max() <= 1e-14  # div-free in-plane part
    e = planar_energy(state, P2)
    assert e.total == pytest.approx(1.0 / P2.eps, rel=1e-12)


def test_planar_energy_requires_delta():
    state = Field2D(phi=np.zeros((8, 8)), n=np.zeros((8, 8, 3)))
    state.n[..., 2] = 1.0
    with pytest.raises(DomainError):
        planar_energy(state, Parameters(eps=0.1))


def test_limit_configuration_bulk_free_away_from_walls():
    # exact tent phase: central differences away from the kinks recover
    # n_par = grad phi exactly, so the bulk integrand vanishes there
    N = 64
    state = square_limit_field(N)
    h = 1.0 / N
    gx = (np.roll(state.phi, -1, axis=0) - np.roll(state.phi, 1, axis=0)) / (2 * h)
    gy = (np.roll(state.phi, -1, axis=1) - np.roll(state.phi, 1, axis=1)) / (2 * h)
    x = np.arange(N) / N
    dist = np.minimum.reduce([np.abs(x), np.abs(x - 0.5), np.abs(x - 1.0)])
    interior = (dist[:, None] > 2 * h) & (dist[None, :] > 2 * h)
    assert np.abs((gx - state.n[..., 0]) * interior).max() <= 1e-12
    assert np.abs((gy - state.n[..., 1]) * interior).max() <= 1e-12
    assert np.abs(state.n[..., 2]).max() == 0.0


def test_solve_phase_single_mode():
    N = 64
    x = np.arange(N) / N
    phi0 = np.sin(2 * np.pi * x)[:, None] / (2 * np.pi)
    phi0 = np.broadcast_to(phi0, (N, N))
    n = np.zeros((N, N, 3))
    n[..., 0] = np.cos(2 * np.pi * x)[:, None]  # n_par = grad phi0
    phi = solve_phase(n)
    assert np.abs(phi - (phi0 - phi0.mean())).max() <= 1e-12


def test_solve_phase_xindependent_field():
    N = 32
    y = np.arange(N) / N
    n = np.zeros((N, N, 3))
    n[..., 0] = np.sin(2 * np.pi * y)[None, :]  # d/dx of x-independent = 0
    assert np.abs(solve_phase(n)).max() <= 1e-14


def test_solve_phase_residual():
    rng = np.random.default_rng(2)
    N = 64
    n = np.zeros((N, N, 3))
    gh = np.fft.fft2(rng.standard_normal((N, N, 2)), axes=(0, 1))
    k = np.abs(np.fft.fftfreq(N, d=1.0 / N))
    mask = (k[:, None] <= 6) & (k[None, :] <= 6)
    n[..., :2] = np.fft.ifft2(gh * mask[:, :, None], axes=(0, 1)).real
    phi = solve_phase(n)
    # spectral residual of Lap phi - div n_par
    kf = 2 * np.pi * np.fft.fftfreq(N, d=1.0 / N)
    kx, ky = kf[:, None], kf[None, :]
    lap = np.fft.ifft2(-(kx**2 + ky**2) * np.fft.fft2(phi)).real
    div = np.fft.ifft2(1j * kx * np.fft.fft2(n[..., 0])
                       + 1j * ky * np.fft.fft2(n[..., 1])).real
    num = np.linalg.norm(lap - div)
    assert num <= 1e-10 * np.linalg.norm(n)
    assert abs(phi.mean()) <= 1e-14


def test_demag_field_identities():
    rng = np.random.default_rng(4)
    N = 64
    n = np.zeros((N, N, 3))
    gh = np.fft.fft2(rng.standard_normal((N, N, 2)), axes=(0, 1))
    k = np.abs(np.fft.fftfreq(N, d=1.0 / N))
    mask = (k[:, None] <= 6) & (k[None, :] <= 6)
    n[..., :2] = np.fft.ifft2(gh * mask[:, :, None], axes=(0, 1)).real
    phi = solve_phase(n)
    state = Field2D(phi=phi, n=n)
    H = demag_field(state)
    # quadrature identity: int |H|^2 = int |grad phi - n_par|^2 (pointwise even)
    kf = 2 * np.pi * np.fft.fftfreq(N, d=1.0 / N)
    gx = np.fft.ifft2(1j * kf[:, None] * np.fft.fft2(phi)).real
    gy = np.fft.ifft2(1j * kf[None, :] * np.fft.fft2(phi)).real
    lhs = (H**2).sum()
    rhs = ((gx - n[..., 0]) ** 2 + (gy - n[..., 1]) ** 2).sum()
    assert lhs == pytest.approx(rhs, rel=1e-12)
    # curl-free and div(H - m_par) = 0, spectrally
    curl = np.fft.ifft2(1j * kf[:, None] * np.fft.fft2(H[..., 1])
                        - 1j * kf[None, :] * np.fft.fft2(H[..., 0])).real
    assert np.abs(curl).max() <= 1e-10
    m_par = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    diff = H - m_par
    div = np.fft.ifft2(1j * kf[:, None] * np.fft.fft2(diff[..., 0])
                       + 1j * kf[None, :] * np.fft.fft2(diff[..., 1])).real
    assert np.abs(div).max() <= 1e-10


def test_demag_constant_divfree():
    N = 16
    n = np.zeros((N, N, 3))
    n[..., 0] = 0.6
    n[..., 1] = -0.8
    state = Field2D(phi=solve_phase(n), n=n)
    H = demag_field(state)
    assert np.abs(H[..., 0] + n[..., 1]).max() <= 1e-14
    assert np.abs(H[..., 1] - n[..., 0]).max() <= 1e-14


# ---------------------------------------------------------------------------
# wall energy
# ---------------------------------------------------------------------------

def test_wall_energy_endpoints():
    assert wall_energy_density(0.0) == 0.0
    assert wall_energy_density(np.pi / 2) == pytest.approx(
        4 * (math.sqrt(2) - 1), rel=1e-15)
    assert 4 * (math.sqrt(2) - 1) == pytest.approx(1.6568542494923801, rel=1e-15)


def test_wall_energy_continuous_at_quarter_pi():
    small = 4 * abs(math.sin(np.pi / 4) - (np.pi / 4) * math.cos(np.pi / 4))
    large = 4 * abs((np.pi / 4 - np.pi / 2) * math.cos(np.pi / 4)
                    - math.sin(np.pi / 4) + math.sqrt(2))
    assert abs(small - large) <= 1e-14
    assert small == pytest.approx(0.6069856556670074, rel=1e-13)
    assert wall_energy_density(np.pi / 4) == pytest.approx(small, rel=1e-14)


def test_wall_energy_monotone_and_bounded():
    xs = np.linspace(0, np.pi / 2, 10001)
    vals = np.array([wall_energy_density(x) for x in xs])
    assert np.all(np.diff(vals) >= -1e-14)
    assert vals.max() <= wall_energy_density(np.pi / 2) + 1e-14


def test_wall_energy_domain():
    with pytest.raises(DomainError):
        wall_energy_density(-0.1)
    with pytest.raises(DomainError):
        wall_energy_density(np.pi / 2 + 0.1)


def test_pattern_lower_bounds():
    sq = pattern_lower_bound(square_pattern())
    st = pattern_lower_bound(stripe_pattern())
    assert sq == pytest.approx(2 * math.sqrt(2) * (4 - math.pi), rel=1e-14)
    assert st == pytest.approx(8 * (math.sqrt(2) - 1), rel=1e-14)
    assert sq == pytest.approx(2.4279426226680286, rel=1e-13)
    assert st == pytest.approx(3.3137084989847607, rel=1e-13)
    assert pattern_lower_bound(WallPattern("empty", ())) == 0.0
    assert sq < st  # squares beat stripes


def test_limit_patterns_zero_mass():
    for field in (square_limit_field(128), stripe_limit_field(128)):
        assert abs(field.n[..., 0].mean()) <= 1e-14
        assert abs(field.n[..., 1].mean()) <= 1e-14
        assert abs(field.phi.mean()) <= 1e-13


def test_wall_segment_validation():
    with pytest.raises(DomainError):
        WallPattern("x", (WallSegment(0, 0, 0, 0, 0.1),))
    with pytest.raises(DomainError):
        WallPattern("x", (WallSegment(0, 0, 1, 0, 2.0),))
