import math

import numpy as np
import pytest

from undulate import (DomainError, Field3D, Grid3D, MaterialParameters,
                      Parameters, derive_dimensionless, load_snapshot,
                      perturbed_state, save_snapshot, uniform_state)
from undulate.core import boundary_psi_values, export_slices, validate_field3d

# material constants of the paper's 3D study
MAT = dict(K=0.001, C=0.01, g0=0.5, r_temp=0.25, q=10.0)


def test_derive_dimensionless_reference_constants():
    p = derive_dimensionless(MaterialParameters(**MAT))
    assert p.c == pytest.approx(math.sqrt(5.0), rel=1e-14)
    assert p.g == pytest.approx(0.25, rel=1e-14)


def test_derive_dimensionless_all_ones():
    p = derive_dimensionless(MaterialParameters(K=1, C=1, g0=1, r_temp=1, q=1))
    # lam = 1, so eps = pi/(2 d0) with d0 = 1
    assert p.c == 1.0
    assert p.g == 1.0
    assert p.eps == pytest.approx(np.pi / 2, rel=1e-14)


def test_derive_dimensionless_lambda_value():
    # lam = sqrt(K/(C q^2)) evaluated independently
    lam = math.sqrt(MAT["K"] / (MAT["C"] * MAT["q"] ** 2))
    assert lam == pytest.approx(0.0316227766016838, rel=1e-14)
    # eps carries lam/d: check the composition against the formula
    mat = MaterialParameters(**MAT, d0=2.0)
    p = derive_dimensionless(mat)
    d = 2 * 2.0 / math.pi
    assert p.eps == pytest.approx((lam / d) * math.sqrt(MAT["g0"] / MAT["r_temp"]),
                                  rel=1e-14)


def test_derive_dimensionless_aspect_ratios():
    mat = MaterialParameters(**MAT, d0=1.5, L1=4.5, L2=9.0)
    p = derive_dimensionless(mat)
    assert p.a == pytest.approx(2 * 1.5 / 4.5, rel=1e-15)
    assert p.b == pytest.approx(2 * 1.5 / 9.0, rel=1e-15)


def test_derive_dimensionless_scale_consistency():
    # an overall energy-scale factor on (K, C, g0, r) leaves c, g, eps unchanged
    rng = np.random.default_rng(7)
    base = derive_dimensionless(MaterialParameters(**MAT))
    for s in rng.uniform(0.1, 37.0, size=10):
        mat = MaterialParameters(K=MAT["K"] * s, C=MAT["C"] * s, g0=MAT["g0"] * s,
                                 r_temp=MAT["r_temp"] * s, q=MAT["q"])
        p = derive_dimensionless(mat)
        assert p.c == pytest.approx(base.c, rel=1e-12)
        assert p.g == pytest.approx(base.g, rel=1e-12)
        assert p.eps == pytest.approx(base.eps, rel=1e-12)


def test_derive_dimensionless_rejects_nonpositive():
    with pytest.raises(DomainError):
        MaterialParameters(K=0.0, C=1, g0=1, r_temp=1, q=1)


def test_parameters_validation():
    with pytest.raises(DomainError):
        Parameters(eps=-0.1)
    with pytest.raises(DomainError):
        Parameters(eps=0.1, tau=-1.0)
    with pytest.raises(DomainError):
        Parameters(eps=0.1, delta=2.5)
    Parameters(eps=0.1, delta=1.5)


def test_grid_spacings_consistent():
    p = Parameters(eps=0.3, a=2 / 3, b=0.5)
    grid = Grid3D.from_parameters(p, 16, 8, 15)
    assert grid.hx * grid.Nx == pytest.approx(2 * np.pi / p.a, rel=1e-14)
    assert grid.hy * grid.Ny == pytest.approx(2 * np.pi / p.b, rel=1e-14)
    assert grid.hz * (grid.Nz + 1) == pytest.approx(np.pi, rel=1e-14)
    assert grid.z[0] == -np.pi / 2 and grid.z[-1] == np.pi / 2


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid3D(Nx=5, Ny=8, Nz=7, a=1, b=1)
    with pytest.raises(DomainError):
        Grid3D(Nx=8, Ny=8, Nz=2, a=1, b=1)


@pytest.fixture
def setup():
    p = Parameters(eps=0.3, tau=1.0, c=math.sqrt(5.0), g=0.25, a=2 / 3, b=2 / 3)
    grid = Grid3D.from_parameters(p, 16, 16, 15)
    return p, grid


def test_uniform_state_values(setup):
    p, grid = setup
    s = uniform_state(p, grid)
    kmid = grid.kmid
    assert grid.z[kmid] == 0.0
    assert s.psi[3, 5, kmid] == 1.0 + 0.0j          # exponent vanishes at z = 0
    assert np.abs(np.abs(s.psi) - 1.0).max() <= 1e-14
    validate_field3d(s, p, grid)


def test_uniform_state_top_plate_phase():
    # c*eps = 1: psi(pi/2) = exp(i pi/2) = i
    p = Parameters(eps=0.5, c=2.0)
    grid = Grid3D.from_parameters(p, 8, 8, 7)
    s = uniform_state(p, grid)
    assert s.psi[0, 0, -1] == pytest.approx(1j, abs=1e-15)
    # c = sqrt(5), eps = 0.3: exponent pi/(2 c eps), evaluated independently
    p2 = Parameters(eps=0.3, c=math.sqrt(5.0))
    s2 = uniform_state(p2, Grid3D.from_parameters(p2, 8, 8, 7))
    expo = (np.pi / 2) / (math.sqrt(5.0) * 0.3)
    assert expo == pytest.approx(2.3416049103469088, rel=1e-14)
    assert s2.psi[1, 2, -1] == pytest.approx(np.exp(1j * expo), abs=1e-15)


def test_perturbed_state_zero_eta_is_uniform(setup):
    p, grid = setup
    assert np.array_equal(perturbed_state(p, grid, 0.0, seed=5).psi,
                          uniform_state(p, grid).psi)
    assert np.array_equal(perturbed_state(p, grid, 0.0, seed=5).n,
                          uniform_state(p, grid).n)


def test_perturbed_state_reproducible_and_bounded(setup):
    p, grid = setup
    s1 = perturbed_state(p, grid, 0.1, seed=42)
    s2 = perturbed_state(p, grid, 0.1, seed=42)
    assert np.array_equal(s1.psi, s2.psi) and np.array_equal(s1.n, s2.n)
    s3 = perturbed_state(p, grid, 0.1, seed=43)
    assert not np.array_equal(s1.n, s3.n)
    # normalization-algebra bound, |u_i| <= 1
    bound = 0.1 * math.sqrt(3) / (1 - 0.1 * math.sqrt(3))
    e3 = np.array([0.0, 0.0, 1.0])
    dev = np.linalg.norm(s1.n - e3, axis=-1).max()
    assert dev <= bound
    validate_field3d(s1, p, grid)


def test_perturbed_state_boundary_untouched(setup):
    p, grid = setup
    s = perturbed_state(p, grid, 0.3, seed=1)
    u = uniform_state(p, grid)
    for k in (0, -1):
        assert np.array_equal(s.psi[:, :, k], u.psi[:, :, k])
        assert np.array_equal(s.n[:, :, k], u.n[:, :, k])


def test_boundary_psi_matches_uniform_trace(setup):
    p, grid = setup
    lo, hi = boundary_psi_values(p)
    s = uniform_state(p, grid)
    assert np.all(s.psi[:, :, 0] == lo)
    assert np.all(s.psi[:, :, -1] == hi)


def test_snapshot_roundtrip(tmp_path, setup):
    p, grid = setup
    s = perturbed_state(p, grid, 0.1, seed=9)
    path = tmp_path / "state.bin"
    save_snapshot(path, s, p, grid)
    s2, p2, grid2 = load_snapshot(path)
    assert np.array_equal(s.psi, s2.psi)
    assert np.array_equal(s.n, s2.n)
    assert (p2.eps, p2.tau, p2.c, p2.g, p2.a, p2.b) == (p.eps, p.tau, p.c, p.g, p.a, p.b)
    assert (grid2.Nx, grid2.Ny, grid2.Nz) == (grid.Nx, grid.Ny, grid.Nz)
    # header layout: 72 bytes, magic first
    raw = path.read_bytes()
    assert raw[:4] == b"UNDU"
    assert len(raw) == 72 + 5 * 8 * grid.Nx * grid.Ny * grid.nzt


def test_slice_export(tmp_path, setup):
    p, grid = setup
    s = uniform_state(p, grid)
    files = export_slices(tmp_path, s, grid)
    assert {f.name for f in files} == {"slice_z0.csv", "slice_y0.csv", "slice_x0.csv"}
    header = files[0].read_text().splitlines()[0]
    assert header == "x,y,z,re_psi,im_psi,n1,n2,n3"
    rows = files[0].read_text().splitlines()[1:]
    assert len(rows) == grid.Nx * grid.Ny
