"""Discrete energy functionals: 3D de Gennes energy, its second variation,
the planar reduced energy, and the sharp wall-energy density of the limit.

Discretization contract (shared with the solvers, which descend the exact
gradients of these sums): spectral x,y derivatives with Nyquist zeroed;
node terms integrated by trapezoid in z; squared z-differences live on the
staggered half-nodes.  The compression term is evaluated in the gauge
rho = exp(-i z/(c eps)) psi, so the uniformly layered state has exactly zero
energy and is an exact discrete critical point:

    |c eps dpsi/dz - i n3 psi|^2 = |c eps drho/dz + i (1 - n3) rho|^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._ops import LateralSpectral, trapezoid_weights
from .core import DomainError, Field2D, Field3D, Grid2D, Grid3D, Parameters


@dataclass(frozen=True)
class EnergyBreakdown:
    compression: float
    frank: float
    potential: float
    magnetic: float
    total: float

    @staticmethod
    def make(compression: float, frank: float, potential: float, magnetic: float) -> "EnergyBreakdown":
        return EnergyBreakdown(compression, frank, potential, magnetic,
                               compression + frank + potential + magnetic)


def gauge_phase(p: Parameters, grid: Grid3D) -> np.ndarray:
    """exp(i z/(c eps)) on the z-nodes; psi = gauge * rho."""
    return np.exp(1j * grid.z / (p.c * p.eps))


def _compression_parts(rho: np.ndarray, n: np.ndarray, p: Parameters, grid: Grid3D,
                       lat: LateralSpectral):
    """q_x, q_y at nodes and q_z at half-nodes for the gauged compression term."""
    rho_h = lat.fft(rho)
    dx_rho = lat.ifft(lat.ikx[:, :, None] * rho_h)
    dy_rho = lat.ifft(lat.iky[:, :, None] * rho_h)
    ce = p.c * p.eps
    qx = ce * dx_rho - 1j * n[..., 0] * rho
    qy = ce * dy_rho - 1j * n[..., 1] * rho
    s_rho = (1.0 - n[..., 2]) * rho
    qz = ce * (rho[:, :, 1:] - rho[:, :, :-1]) / grid.hz \
        + 0.5j * (s_rho[:, :, 1:] + s_rho[:, :, :-1])
    return qx, qy, qz, dx_rho, dy_rho


def _assemble_breakdown(rho: np.ndarray, n: np.ndarray, qx, qy, qz,
                        p: Parameters, grid: Grid3D, lat: LateralSpectral,
                        wz: np.ndarray, nh=None) -> EnergyBreakdown:
    """Energy reductions shared by total_energy and the 3D solver monitor."""
    mu = grid.hx * grid.hy
    q2_nodes = np.abs(qx) ** 2 + np.abs(qy) ** 2
    compression = mu / p.eps * (float(q2_nodes.sum(axis=(0, 1)) @ wz)
                                + grid.hz * float((np.abs(qz) ** 2).sum()))
    dn = (n[:, :, 1:, :] - n[:, :, :-1, :]) / grid.hz
    frank = p.eps * mu * (lat.grad_sq_sum_real(n, wz, fh=nh)
                          + grid.hz * float((dn**2).sum()))
    pot_density = (1.0 - np.abs(rho) ** 2) ** 2
    potential = p.g / (2.0 * p.eps) * mu * float(pot_density.sum(axis=(0, 1)) @ wz)
    mag_density = n[..., 0] ** 2 + n[..., 1] ** 2
    magnetic = -p.tau * mu * float(mag_density.sum(axis=(0, 1)) @ wz)
    return EnergyBreakdown.make(compression, frank, potential, magnetic)


def total_energy(state: Field3D, p: Parameters, grid: Grid3D,
                 workers: int = 1) -> EnergyBreakdown:
    """Quadrature of the nondimensional de Gennes energy over T^2 x I."""
    dev = np.abs(np.linalg.norm(state.n, axis=-1) - 1.0).max()
    if dev > 1e-6:
        raise DomainError(f"|n| deviates from 1 by {dev:.3e}; renormalize first")
    lat = LateralSpectral(grid.Nx, grid.Ny, p.a, p.b, workers=workers)
    wz = trapezoid_weights(grid.nzt, grid.hz)
    rho = state.psi * np.conj(gauge_phase(p, grid))
    qx, qy, qz, _, _ = _compression_parts(rho, state.n, p, grid, lat)
    return _assemble_breakdown(rho, state.n, qx, qy, qz, p, grid, lat, wz)


def second_variation(u: np.ndarray, tau: float, p: Parameters, grid: Grid3D,
                     workers: int = 1) -> float:
    """Quadratic form Q(u) = int (1/eps)|grad v - (w,0)|^2 + eps|grad w|^2 - tau|w|^2.

    Same discretization as total_energy, so F(t u) - F(0) = t^2 Q(u) + O(t^3)
    and Q(u) = <apply_L(u), u> exactly (both identities are tested).
    """
    if np.abs(u[:, :, 0, :]).max() > 0 or np.abs(u[:, :, -1, :]).max() > 0:
        raise DomainError("displacement must vanish on the plates")
    lat = LateralSpectral(grid.Nx, grid.Ny, p.a, p.b, workers=workers)
    mu = grid.hx * grid.hy
    wz = trapezoid_weights(grid.nzt, grid.hz)
    w = u[..., :2]
    v = u[..., 2]
    vh = lat.fft(v)
    dxv = lat.ifft(lat.ikx[:, :, None] * vh).real
    dyv = lat.ifft(lat.iky[:, :, None] * vh).real
    node = ((dxv - w[..., 0]) ** 2 + (dyv - w[..., 1]) ** 2 - tau * p.eps * (
        w[..., 0] ** 2 + w[..., 1] ** 2)) / p.eps
    dzv = (v[:, :, 1:] - v[:, :, :-1]) / grid.hz
    dzw = (w[:, :, 1:, :] - w[:, :, :-1, :]) / grid.hz
    stag = float((dzv**2).sum()) / p.eps + p.eps * float((dzw**2).sum())
    lat_frank = p.eps * lat.grad_sq_sum_real(w, wz)
    return mu * (float(node.sum(axis=(0, 1)) @ wz) + grid.hz * stag + lat_frank)


def displacement_to_state(u: np.ndarray, p: Parameters, grid: Grid3D) -> Field3D:
    """Map u = (w, v) to (psi, n): psi = psi0 (1 + i v/(c eps)), n = (w,1)/|(w,1)|."""
    gauge = gauge_phase(p, grid)
    psi = gauge[None, None, :] * (1.0 + 1j * u[..., 2] / (p.c * p.eps))
    raw = np.concatenate([u[..., :2], np.ones(u.shape[:-1] + (1,))], axis=-1)
    n = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
    return Field3D(psi=psi, n=n)


@dataclass(frozen=True)
class QuadraticReport:
    fitted: float
    target: float
    rel_error: float


def quadratic_expansion_check(u: np.ndarray, p: Parameters, grid: Grid3D,
                              t_values=(1e-3, 2e-3, 4e-3)) -> QuadraticReport:
    """Fit E(t u) - E(0) = coeff * t^2 and compare with second_variation(u)."""
    base = total_energy(displacement_to_state(np.zeros_like(u), p, grid), p, grid).total
    ts = np.asarray(t_values, dtype=float)
    de = np.array([total_energy(displacement_to_state(t * u, p, grid), p, grid).total - base
                   for t in ts])
    t2 = ts**2
    fitted = float((de @ t2) / (t2 @ t2))
    target = second_variation(u, p.tau, p, grid)
    denom = max(abs(target), 1e-300)
    return QuadraticReport(fitted=fitted, target=target,
                           rel_error=abs(fitted - target) / denom)


# ---------------------------------------------------------------------------
# planar (2D) model
# ---------------------------------------------------------------------------

def _lat2d(N: int, workers: int = 1) -> LateralSpectral:
    # unit torus: wavenumbers 2*pi*m
    return LateralSpectral(N, N, 2.0 * np.pi, 2.0 * np.pi, workers=workers)


def planar_energy(state: Field2D, p: Parameters, grid2d: Grid2D | None = None,
                  workers: int = 1) -> EnergyBreakdown:
    """int eps|grad n|^2 + (1/eps)|grad phi - n_par|^2 + eps^(-delta) n3^2.

    Reported in the EnergyBreakdown slots as frank / compression / magnetic
    (the n3 penalty is the strong-field magnetic remnant); potential = 0.
    """
    if p.delta is None:
        raise DomainError("planar model requires Parameters.delta")
    N = state.N
    if grid2d is not None and grid2d.N != N:
        raise DomainError("grid2d inconsistent with state")
    lat = _lat2d(N, workers)
    h2 = 1.0 / N**2
    phx, phy = lat.grad_real(state.phi)
    compression = h2 / p.eps * float(((phx - state.n[..., 0]) ** 2
                                      + (phy - state.n[..., 1]) ** 2).sum())
    nh = lat.rfft(state.n)
    mag = (nh.real**2 + nh.imag**2) * (lat.k2r * lat.rcol_weight)[:, :, None]
    frank = p.eps * h2 * float(mag.sum()) / N**2
    magnetic = p.eps ** (-p.delta) * h2 * float((state.n[..., 2] ** 2).sum())
    return EnergyBreakdown.make(compression, frank, 0.0, magnetic)


def solve_phase(n: np.ndarray, workers: int = 1) -> np.ndarray:
    """Spectral Poisson solve: Lap(phi) = div n_par on the unit torus, mean 0."""
    N = n.shape[0]
    lat = _lat2d(N, workers)
    rhs_h = lat.ikxr * lat.rfft(n[..., 0]) + lat.ikyr * lat.rfft(n[..., 1])
    # zero symbol entries (mean mode and the derivative-free Nyquist lines)
    # carry no right-hand side; their phi modes are set to zero
    zero = lat.k2r == 0.0
    k2 = np.where(zero, 1.0, lat.k2r)
    phi_h = -rhs_h / k2
    phi_h[zero] = 0.0
    return lat.irfft(phi_h)


def demag_field(state: Field2D, workers: int = 1) -> np.ndarray:
    """H = m_par - perp-grad(phi), m_par = (-n2, n1); curl-free when phi solves
    the phase equation, div(H - m_par) = 0 identically."""
    N = state.N
    lat = _lat2d(N, workers)
    phx, phy = lat.grad_real(state.phi)
    H = np.empty((N, N, 2))
    H[..., 0] = -state.n[..., 1] + phy
    H[..., 1] = state.n[..., 0] - phx
    return H


# ---------------------------------------------------------------------------
# wall energy of the planar limit
# ---------------------------------------------------------------------------

def wall_energy_density(X: float) -> float:
    """A(X): energy per unit wall length for a jump of half-angle X.

    A(X) = 4|sin X - X cos X| on [0, pi/4] and
    A(X) = 4|(X - pi/2) cos X - sin X + sqrt(2)| on [pi/4, pi/2];
    continuous at pi/4.
    """
    if not 0.0 <= X <= np.pi / 2:
        raise DomainError("half-angle X must lie in [0, pi/2]")
    if X <= np.pi / 4:
        return 4.0 * abs(np.sin(X) - X * np.cos(X))
    return 4.0 * abs((X - np.pi / 2) * np.cos(X) - np.sin(X) + np.sqrt(2.0))


@dataclass(frozen=True)
class WallSegment:
    x0: float
    y0: float
    x1: float
    y1: float
    half_angle: float

    @property
    def length(self) -> float:
        return float(np.hypot(self.x1 - self.x0, self.y1 - self.y0))


@dataclass(frozen=True)
class WallPattern:
    kind: str  # "Square2D" | "Stripe1D" | custom
    segments: tuple[WallSegment, ...]

    def __post_init__(self):
        for s in self.segments:
            if s.length <= 0:
                raise DomainError("wall segments must have positive length")
            if not 0.0 <= s.half_angle <= np.pi / 2:
                raise DomainError("half-angle outside [0, pi/2]")


def square_pattern() -> WallPattern:
    """Four unit-length axis-aligned walls with half-angle pi/4 (2d squares)."""
    X = np.pi / 4
    return WallPattern("Square2D", (
        WallSegment(0.0, 0.0, 0.0, 1.0, X),
        WallSegment(0.5, 0.0, 0.5, 1.0, X),
        WallSegment(0.0, 0.0, 1.0, 0.0, X),
        WallSegment(0.0, 0.5, 1.0, 0.5, X),
    ))


def stripe_pattern() -> WallPattern:
    """Two unit-length 180-degree walls (1d stripes)."""
    X = np.pi / 2
    return WallPattern("Stripe1D", (
        WallSegment(0.0, 0.0, 0.0, 1.0, X),
        WallSegment(0.5, 0.0, 0.5, 1.0, X),
    ))


def pattern_lower_bound(pattern: WallPattern) -> float:
    """Gamma-limit lower bound: sum over segments of length * A(X)."""
    return sum(s.length * wall_energy_density(s.half_angle) for s in pattern.segments)


# ---------------------------------------------------------------------------
# synthetic limit configurations (test fixtures and classification anchors)
# ---------------------------------------------------------------------------

def _tent(t: np.ndarray) -> np.ndarray:
    return np.where(t < 0.5, t, 1.0 - t)


def square_limit_field(N: int) -> Field2D:
    """n = grad(phi), phi = (tent(x) + tent(y))/sqrt(2): the 2d square pattern.

    Walls on {x = 0, 1/2} and {y = 0, 1/2}, half-angle pi/4, zero masses.
    """
    x = np.arange(N) / N
    phi = (_tent(x)[:, None] + _tent(x)[None, :]) / np.sqrt(2.0)
    phi = phi - phi.mean()
    sx = np.where(x[:, None] < 0.5, 1.0, -1.0) / np.sqrt(2.0)
    n = np.zeros((N, N, 3))
    n[..., 0] = np.broadcast_to(sx, (N, N))
    n[..., 1] = np.broadcast_to(sx.T, (N, N))
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    return Field2D(phi=phi, n=n)


def stripe_limit_field(N: int) -> Field2D:
    """n = (+-1, 0, 0) stripes with walls on {x = 0, 1/2}: the 1d pattern."""
    x = np.arange(N) / N
    phi = _tent(x)
    phi = phi - phi.mean()
    n = np.zeros((N, N, 3))
    n[..., 0] = np.where(x[:, None] < 0.5, 1.0, -1.0)
    return Field2D(phi=np.broadcast_to(phi[:, None], (N, N)).copy(), n=n)
