"""Dimensionless parameters, grids, field containers, and reference states.

The model lives on Omega = T^2 x I with x in [-pi/a, pi/a), y in [-pi/b, pi/b)
periodic and z in [-pi/2, pi/2] with Dirichlet plates.  The uniformly layered
state is (psi0, n0) = (exp(i z / (c eps)), e3); its boundary trace
exp(+/- i pi / (2 c eps)) is the Dirichlet datum for psi (the uniform state
must satisfy its own boundary condition, which fixes the sign convention of
the exponent).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class DomainError(ValueError):
    """A physical parameter or argument is outside its admissible range."""


class DefectError(RuntimeError):
    """The director magnitude collapsed; the defect-free model broke down."""


class EnergyIncreaseError(RuntimeError):
    """A descent step increased the energy beyond roundoff tolerance."""


SNAPSHOT_MAGIC_3D = b"UNDU"
SNAPSHOT_MAGIC_2D = b"UND2"
SNAPSHOT_VERSION = 1
# magic(4) version(4) Nx Ny Nz(12) pad(4) then 6 little-endian f64 = 72 bytes
_HEADER_FMT = "<4sIIIII6d"
HEADER_SIZE = struct.calcsize(_HEADER_FMT)


@dataclass(frozen=True)
class MaterialParameters:
    """Dimensional material constants (consistent units, all positive)."""

    K: float        # Frank constant
    C: float        # compression constant
    g0: float       # potential coefficient
    r_temp: float   # T_NA - T
    q: float        # smectic wave number
    chi_a_abs: float = 1.0  # |chi_a|
    H_mag: float = 1.0      # magnetic field magnitude
    d0: float = 1.0         # half sample thickness
    L1: float = 1.0         # lateral half-length, x
    L2: float = 1.0         # lateral half-length, y

    def __post_init__(self):
        for name in ("K", "C", "g0", "r_temp", "q", "chi_a_abs", "H_mag", "d0", "L1", "L2"):
            if not getattr(self, name) > 0:
                raise DomainError(f"material parameter {name} must be positive")


@dataclass(frozen=True)
class Parameters:
    """Dimensionless model parameters.

    ``delta`` is the planar-model field exponent tau = eps**(-delta) and is
    only consulted by the 2D model; it must satisfy 1 < delta < 2 when set.
    """

    eps: float
    tau: float = 0.0
    c: float = 1.0
    g: float = 1.0
    a: float = 1.0
    b: float = 1.0
    delta: float | None = None

    def __post_init__(self):
        for name in ("eps", "c", "g", "a", "b"):
            if not getattr(self, name) > 0:
                raise DomainError(f"parameter {name} must be positive")
        if not self.tau >= 0:
            raise DomainError("tau must be nonnegative")
        if self.delta is not None and not 1.0 < self.delta < 2.0:
            raise DomainError("delta must satisfy 1 < delta < 2")

    def with_tau(self, tau: float) -> "Parameters":
        return replace(self, tau=tau)


def derive_dimensionless(mat: MaterialParameters) -> Parameters:
    """Nondimensionalize material constants.

    lam = sqrt(K/(C q^2)), d = 2 d0/pi, eps = (lam/d) sqrt(g0/r),
    tau = |chi_a| H^2 d^2 eps / K, c = sqrt(C r/(K g0)), g = r/(C q^2),
    a = 2 d0/L1, b = 2 d0/L2.
    """
    lam = np.sqrt(mat.K / (mat.C * mat.q**2))
    d = 2.0 * mat.d0 / np.pi
    eps = (lam / d) * np.sqrt(mat.g0 / mat.r_temp)
    tau = mat.chi_a_abs * mat.H_mag**2 * d**2 * eps / mat.K
    c = np.sqrt(mat.C * mat.r_temp / (mat.K * mat.g0))
    g = mat.r_temp / (mat.C * mat.q**2)
    a = 2.0 * mat.d0 / mat.L1
    b = 2.0 * mat.d0 / mat.L2
    return Parameters(eps=float(eps), tau=float(tau), c=float(c), g=float(g),
                      a=float(a), b=float(b))


@dataclass(frozen=True)
class Grid3D:
    """Tensor grid on T^2 x I.

    Nx, Ny periodic point counts (even, >= 4); Nz interior z-points.  Nodes
    z_k, k = 0..Nz+1, include the two boundary plates.
    """

    Nx: int
    Ny: int
    Nz: int
    a: float
    b: float

    def __post_init__(self):
        if self.Nx < 4 or self.Ny < 4 or self.Nx % 2 or self.Ny % 2:
            raise DomainError("Nx, Ny must be even and >= 4")
        if self.Nz < 3:
            raise DomainError("Nz must be >= 3")
        if not (self.a > 0 and self.b > 0):
            raise DomainError("a, b must be positive")

    @property
    def hx(self) -> float:
        return (2.0 * np.pi / self.a) / self.Nx

    @property
    def hy(self) -> float:
        return (2.0 * np.pi / self.b) / self.Ny

    @property
    def hz(self) -> float:
        return np.pi / (self.Nz + 1)

    @property
    def nzt(self) -> int:
        return self.Nz + 2

    @property
    def x(self) -> np.ndarray:
        return -np.pi / self.a + self.hx * np.arange(self.Nx)

    @property
    def y(self) -> np.ndarray:
        return -np.pi / self.b + self.hy * np.arange(self.Ny)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(-np.pi / 2, np.pi / 2, self.nzt)

    @property
    def kmid(self) -> int:
        """Index of the z-node closest to the mid-plane z = 0."""
        return int(np.argmin(np.abs(self.z)))

    def shape(self) -> tuple[int, int, int]:
        return (self.Nx, self.Ny, self.nzt)

    @staticmethod
    def from_parameters(p: Parameters, Nx: int, Ny: int, Nz: int) -> "Grid3D":
        return Grid3D(Nx=Nx, Ny=Ny, Nz=Nz, a=p.a, b=p.b)


@dataclass
class Field3D:
    """State on a Grid3D: complex order parameter psi and unit director n.

    psi has shape (Nx, Ny, Nz+2); n has shape (Nx, Ny, Nz+2, 3) with |n| = 1
    at every node and (psi, n) = (exp(+/- i pi/(2 c eps)), e3) on the plates.
    """

    psi: np.ndarray
    n: np.ndarray

    def copy(self) -> "Field3D":
        return Field3D(self.psi.copy(), self.n.copy())


@dataclass
class Field2D:
    """Planar state on the unit torus: phase phi (zero mean) and director n."""

    phi: np.ndarray
    n: np.ndarray

    def copy(self) -> "Field2D":
        return Field2D(self.phi.copy(), self.n.copy())

    @property
    def N(self) -> int:
        return self.phi.shape[0]


@dataclass(frozen=True)
class Grid2D:
    """Uniform N x N grid on the unit torus [0,1)^2."""

    N: int

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def x(self) -> np.ndarray:
        return self.h * np.arange(self.N)


def boundary_psi_values(p: Parameters) -> tuple[complex, complex]:
    """Dirichlet data for psi at z = -pi/2 and z = +pi/2."""
    w = np.exp(1j * (np.pi / 2) / (p.c * p.eps))
    return np.conj(w), w


def impose_boundary(state: Field3D, p: Parameters) -> Field3D:
    """Re-impose the exact Dirichlet plate data in place; returns state."""
    lo, hi = boundary_psi_values(p)
    state.psi[:, :, 0] = lo
    state.psi[:, :, -1] = hi
    state.n[:, :, 0, :] = (0.0, 0.0, 1.0)
    state.n[:, :, -1, :] = (0.0, 0.0, 1.0)
    return state


def uniform_state(p: Parameters, grid: Grid3D) -> Field3D:
    """The uniformly layered state (psi0, n0) = (exp(i z/(c eps)), e3)."""
    psi = np.exp(1j * grid.z / (p.c * p.eps))
    psi = np.broadcast_to(psi, grid.shape()).copy()
    n = np.zeros(grid.shape() + (3,))
    n[..., 2] = 1.0
    return Field3D(psi=psi, n=n)


# Fixed spectral content of the random perturbation: lateral modes up to
# PERTURB_MODES in each direction, z-profiles sin(l (z + pi/2)) for
# l = 1..PERTURB_MODES, each component normalized to max |u_i| = PERTURB_AMP.
PERTURB_MODES = 8
PERTURB_AMP = 0.1


def _bandlimited_fields(grid: Grid3D, rng: np.random.Generator, count: int) -> np.ndarray:
    """count smooth random fields on the grid, zero on the plates."""
    m = min(PERTURB_MODES, grid.Nx // 2 - 1, grid.Ny // 2 - 1)
    lmax = min(PERTURB_MODES, grid.Nz)
    coeff = rng.standard_normal((grid.Nx, grid.Ny, lmax, count))
    ch = np.fft.fft2(coeff, axes=(0, 1))
    mx = np.abs(np.fft.fftfreq(grid.Nx, d=1.0 / grid.Nx))
    my = np.abs(np.fft.fftfreq(grid.Ny, d=1.0 / grid.Ny))
    mask = (mx[:, None] <= m) & (my[None, :] <= m)
    ch *= mask[:, :, None, None]
    g = np.fft.ifft2(ch, axes=(0, 1)).real
    prof = np.sin(np.arange(1, lmax + 1)[:, None] * (grid.z[None, :] + np.pi / 2))
    prof[:, 0] = 0.0
    prof[:, -1] = 0.0
    u = np.einsum("xylc,lz->xyzc", g, prof)
    peak = np.abs(u).max(axis=(0, 1, 2), keepdims=True)
    peak[peak == 0] = 1.0
    return PERTURB_AMP * u / peak


def perturbed_state(p: Parameters, grid: Grid3D, eta: float, seed: int) -> Field3D:
    """Uniform state plus a small reproducible band-limited perturbation.

    n = (eta u1, eta u2, 1 + eta u3)/|...| and psi = psi0 + eta*chi with
    smooth random u_i, chi vanishing on the plates.  eta = 0 reproduces
    uniform_state exactly.
    """
    if eta < 0:
        raise DomainError("eta must be nonnegative")
    rng = np.random.default_rng(seed)
    u = _bandlimited_fields(grid, rng, 5)
    state = uniform_state(p, grid)
    raw = np.zeros(grid.shape() + (3,))
    raw[..., 0] = eta * u[..., 0]
    raw[..., 1] = eta * u[..., 1]
    raw[..., 2] = 1.0 + eta * u[..., 2]
    state.n = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
    state.psi = state.psi + eta * (u[..., 3] + 1j * u[..., 4])
    return impose_boundary(state, p)


def validate_field3d(state: Field3D, p: Parameters, grid: Grid3D,
                     tol_unit: float = 1e-12) -> None:
    """Assert the Field3D invariants; raises DomainError on violation."""
    if state.psi.shape != grid.shape() or state.n.shape != grid.shape() + (3,):
        raise DomainError("field shape inconsistent with grid")
    dev = np.abs(np.linalg.norm(state.n, axis=-1) - 1.0).max()
    if dev > tol_unit:
        raise DomainError(f"|n| deviates from 1 by {dev:.3e}")
    lo, hi = boundary_psi_values(p)
    if not (np.array_equal(state.n[:, :, 0, :], np.broadcast_to((0, 0, 1.0), state.n[:, :, 0, :].shape))
            and np.array_equal(state.n[:, :, -1, :], np.broadcast_to((0, 0, 1.0), state.n[:, :, -1, :].shape))
            and np.all(state.psi[:, :, 0] == lo) and np.all(state.psi[:, :, -1] == hi)):
        raise DomainError("boundary data violated")


# ---------------------------------------------------------------------------
# snapshot and CSV export
# ---------------------------------------------------------------------------

def save_snapshot(path, state: Field3D, p: Parameters, grid: Grid3D) -> None:
    """Binary snapshot: 72-byte header + row-major f64 arrays.

    Header: magic "UNDU", version u32, Nx, Ny, Nz u32, pad u32, then
    eps, tau, c, g, a, b as little-endian f64.  Arrays follow in order
    Re psi, Im psi, n1, n2, n3, each of shape (Nx, Ny, Nz+2), C order.
    """
    header = struct.pack(_HEADER_FMT, SNAPSHOT_MAGIC_3D, SNAPSHOT_VERSION,
                         grid.Nx, grid.Ny, grid.Nz, 0,
                         p.eps, p.tau, p.c, p.g, p.a, p.b)
    with open(path, "wb") as f:
        f.write(header)
        for arr in (state.psi.real, state.psi.imag,
                    state.n[..., 0], state.n[..., 1], state.n[..., 2]):
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_snapshot(path) -> tuple[Field3D, Parameters, Grid3D]:
    with open(path, "rb") as f:
        header = f.read(HEADER_SIZE)
        magic, version, nx, ny, nz, _pad, eps, tau, c, g, a, b = struct.unpack(_HEADER_FMT, header)
        if magic != SNAPSHOT_MAGIC_3D:
            raise DomainError(f"bad snapshot magic {magic!r}")
        if version != SNAPSHOT_VERSION:
            raise DomainError(f"unsupported snapshot version {version}")
        grid = Grid3D(Nx=nx, Ny=ny, Nz=nz, a=a, b=b)
        p = Parameters(eps=eps, tau=tau, c=c, g=g, a=a, b=b)
        count = nx * ny * (nz + 2)
        data = np.frombuffer(f.read(5 * count * 8), dtype="<f8")
    parts = data.reshape(5, nx, ny, nz + 2)
    state = Field3D(psi=parts[0] + 1j * parts[1],
                    n=np.stack([parts[2], parts[3], parts[4]], axis=-1))
    return state, p, grid


def save_snapshot2d(path, state: Field2D, p: Parameters) -> None:
    """2D variant: magic "UND2"; float slots carry (eps, delta, 0, 0, 0, 0);
    arrays phi, n1, n2, n3 of shape (N, N)."""
    N = state.N
    delta = p.delta if p.delta is not None else 0.0
    header = struct.pack(_HEADER_FMT, SNAPSHOT_MAGIC_2D, SNAPSHOT_VERSION,
                         N, N, 0, 0, p.eps, delta, 0.0, 0.0, 0.0, 0.0)
    with open(path, "wb") as f:
        f.write(header)
        for arr in (state.phi, state.n[..., 0], state.n[..., 1], state.n[..., 2]):
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_snapshot2d(path) -> tuple[Field2D, Parameters]:
    with open(path, "rb") as f:
        header = f.read(HEADER_SIZE)
        magic, version, nx, ny, _nz, _pad, eps, delta, *_ = struct.unpack(_HEADER_FMT, header)
        if magic != SNAPSHOT_MAGIC_2D:
            raise DomainError(f"bad snapshot magic {magic!r}")
        if version != SNAPSHOT_VERSION:
            raise DomainError(f"unsupported snapshot version {version}")
        data = np.frombuffer(f.read(4 * nx * ny * 8), dtype="<f8")
    parts = data.reshape(4, nx, ny)
    state = Field2D(phi=parts[0].copy(), n=np.stack(parts[1:], axis=-1))
    p = Parameters(eps=eps, delta=delta if delta > 0 else None)
    return state, p


def export_slices(outdir, state: Field3D, grid: Grid3D) -> list[Path]:
    """CSV slices through z=0 (mid), y=0, x=0: x,y,z,re_psi,im_psi,n1,n2,n3."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    x, y, z = grid.x, grid.y, grid.z
    written = []

    def dump(name, rows):
        path = outdir / name
        with open(path, "w") as f:
            f.write("x,y,z,re_psi,im_psi,n1,n2,n3\n")
            for r in rows:
                f.write(",".join("%.17g" % v for v in r) + "\n")
        written.append(path)

    k0 = grid.kmid
    dump("slice_z0.csv",
         [(x[i], y[j], z[k0], state.psi[i, j, k0].real, state.psi[i, j, k0].imag,
           *state.n[i, j, k0]) for i in range(grid.Nx) for j in range(grid.Ny)])
    j0 = int(np.argmin(np.abs(y)))
    dump("slice_y0.csv",
         [(x[i], y[j0], z[k], state.psi[i, j0, k].real, state.psi[i, j0, k].imag,
           *state.n[i, j0, k]) for i in range(grid.Nx) for k in range(grid.nzt)])
    i0 = int(np.argmin(np.abs(x)))
    dump("slice_x0.csv",
         [(x[i0], y[j], z[k], state.psi[i0, j, k].real, state.psi[i0, j, k].imag,
           *state.n[i0, j, k]) for j in range(grid.Ny) for k in range(grid.nzt)])
    return written
