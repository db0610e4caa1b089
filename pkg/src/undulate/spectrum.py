"""Spectral analysis of the linearized operator about the uniform state.

In the displacement coordinates u = (w, v) (director tilt w, phase shift v,
both zero on the plates) the linearization is

    L(w, v) = (-eps*Lap(w) - (1/eps)*grad_par(v) + (1/eps)*w - tau*w,
               -(1/eps)*Lap(v) + (1/eps)*div_par(w)).

On the Fourier mode exp(i(a m x + b n y)) with z-profile f_l (sin(lz) for even
l, cos(lz) for odd l) the eigenvalues solve the quadratic

    (p^2 - lam*eps) * (eps^2 p^2 - lam*eps - tau*eps) + l^2 - lam*eps = 0,

p^2 = (am)^2 + (bn)^2 + l^2, which crosses zero exactly at

    tau_{m,n,l} = eps p^2 + (1/eps) (l/p)^2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._ops import LateralSpectral, dzz_interior
from .core import DomainError, Grid3D, Parameters


@dataclass(frozen=True)
class ModeIndex:
    m: int
    n: int
    l: int

    def __post_init__(self):
        if self.l < 1:
            raise DomainError("z-index l must be >= 1")

    def __iter__(self):
        return iter((self.m, self.n, self.l))


@dataclass(frozen=True)
class ModeSpectrum:
    """Derived spectral quantities of one (m, n, l) mode."""

    mode: ModeIndex
    alpha: float
    beta: float
    p2: float
    tau_crit: float
    slope: float

    def eigenvalues(self, tau: float, p: Parameters) -> tuple[float, float]:
        return eigenvalues(self.mode, tau, p)


def _p2(mode: ModeIndex, p: Parameters) -> tuple[float, float, float]:
    alpha = p.a * mode.m
    beta = p.b * mode.n
    return alpha, beta, alpha**2 + beta**2 + mode.l**2


def critical_field(mode: ModeIndex, p: Parameters, disallow_axial: bool = False) -> float:
    """tau_{m,n,l} = eps p^2 + (1/eps)(l/p)^2."""
    if disallow_axial and mode.m == 0 and mode.n == 0:
        raise DomainError("axial mode (0,0,l) excluded by disallow_axial")
    _, _, p2 = _p2(mode, p)
    return p.eps * p2 + (mode.l**2 / p2) / p.eps


def eigenvalue_slope(mode: ModeIndex, p: Parameters) -> float:
    """lam'(tau_crit) = p^2 / ((l/p)^2 - p^2 - 1); negative for every mode."""
    _, _, p2 = _p2(mode, p)
    return p2 / (mode.l**2 / p2 - p2 - 1.0)


def eigenvalues(mode: ModeIndex, tau: float, p: Parameters) -> tuple[float, float]:
    """The two real roots of the eigenvalue quadratic, ascending.

    Solved with the sign-aware quadratic formula; near tau_crit one root is a
    near-cancellation and the naive formula would lose it.
    """
    _, _, p2 = _p2(mode, p)
    eps = p.eps
    A = eps**2
    B = -eps * (p2 * (1.0 + eps**2) + 1.0 - eps * tau)
    C = eps**2 * p2**2 - eps * tau * p2 + mode.l**2
    disc = B * B - 4.0 * A * C
    if disc < 0:
        raise DomainError(f"complex eigenvalue pair (discriminant {disc:.6e})")
    sq = np.sqrt(disc)
    if B >= 0:
        q = -0.5 * (B + sq)
    else:
        q = -0.5 * (B - sq)
    if q == 0.0:  # B == 0 and disc == 0
        r1 = r2 = 0.0
    else:
        r1, r2 = q / A, C / q
    return (r1, r2) if r1 <= r2 else (r2, r1)


def mode_spectrum(mode: ModeIndex, p: Parameters) -> ModeSpectrum:
    alpha, beta, p2 = _p2(mode, p)
    return ModeSpectrum(mode=mode, alpha=alpha, beta=beta, p2=p2,
                        tau_crit=critical_field(mode, p),
                        slope=eigenvalue_slope(mode, p))


def global_critical_field(p: Parameters, m_max: int, n_max: int, l_max: int,
                          disallow_axial: bool = False,
                          tie_tol: float = 1e-12) -> tuple[float, list[ModeIndex]]:
    """Minimum of tau_{m,n,l} over l in [1, l_max], (m, n) in [0, m_max] x [0, n_max].

    Ties within ``tie_tol`` (absolute) are all reported.  If any minimizer sits
    on the m/n/l search boundary the box was too small and a DomainError is
    raised.
    """
    if m_max < 1 or n_max < 1 or l_max < 1:
        raise DomainError("search bounds must be >= 1")
    m = np.arange(0, m_max + 1)
    n = np.arange(0, n_max + 1)
    l = np.arange(1, l_max + 1)
    A2 = (p.a * m)[:, None, None] ** 2
    B2 = (p.b * n)[None, :, None] ** 2
    L2 = (l[None, None, :].astype(float)) ** 2
    p2 = A2 + B2 + L2
    tau = p.eps * p2 + (L2 / p2) / p.eps
    if disallow_axial:
        tau[0, 0, :] = np.inf
    tau_c = float(tau.min())
    idx = np.argwhere(tau <= tau_c + tie_tol)
    argmin = [ModeIndex(int(m[i]), int(n[j]), int(l[k])) for i, j, k in idx]
    for mode in argmin:
        if mode.m == m_max or mode.n == n_max or mode.l == l_max:
            raise DomainError(f"bounds too small: minimizer {mode} on search boundary")
    return tau_c, argmin


def detect_resonances(mode0: ModeIndex, p: Parameters,
                      bounds: tuple[int, int, int],
                      tol: float = 1e-9) -> list[ModeIndex]:
    """Modes in the box whose critical field coincides with mode0's.

    ``tol`` is relative; the trivial sign family {(+-m0, +-n0, l0)} is not
    reported.
    """
    m_max, n_max, l_max = bounds
    tau0 = critical_field(mode0, p)
    fam = {(abs(mode0.m), abs(mode0.n), mode0.l)}
    hits = []
    for m, n, l in itertools.product(range(0, m_max + 1), range(0, n_max + 1),
                                     range(1, l_max + 1)):
        if (m, n, l) in fam:
            continue
        mode = ModeIndex(m, n, l)
        if abs(critical_field(mode, p) - tau0) <= tol * max(1.0, abs(tau0)):
            hits.append(mode)
    return hits


# ---------------------------------------------------------------------------
# eigenfunctions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenProfile:
    """Closed-form eigenfunction data e_{m,n,l}(z) = amplitude * f_l(z)."""

    mode: ModeIndex
    lam: float
    amplitude: np.ndarray      # complex 3-vector (w1, w2, v)
    parity: str                # "sin" (l even) or "cos" (l odd)
    profile: np.ndarray        # f_l sampled on the grid z-nodes
    samples: np.ndarray        # e(z_k), shape (nzt, 3) complex

    def f(self, z: np.ndarray) -> np.ndarray:
        lz = self.mode.l * np.asarray(z)
        return np.sin(lz) if self.parity == "sin" else np.cos(lz)


def parity_profile(l: int, z: np.ndarray) -> np.ndarray:
    """f_l(z) = sin(lz) for even l, cos(lz) for odd l; vanishes at z = +-pi/2."""
    return np.sin(l * z) if l % 2 == 0 else np.cos(l * z)


def eigenfunction(mode: ModeIndex, lam: float, p: Parameters, grid: Grid3D) -> EigenProfile:
    """Sampled e_{m,n,l}(z) with the conjugation convention e_{-m,-n,l} = conj e_{m,n,l}.

    Requires (m, n) != (0, 0); the axial amplitudes divide by alpha^2 + beta^2.
    """
    if mode.m == 0 and mode.n == 0:
        raise DomainError("axial modes (0,0,l) have no transverse eigenfunction of this form")
    alpha, beta, p2 = _p2(mode, p)
    ab2 = alpha**2 + beta**2
    amp = np.array([1j * alpha / ab2, 1j * beta / ab2, 1.0 / (p2 - lam * p.eps)],
                   dtype=complex)
    prof = parity_profile(mode.l, grid.z)
    prof = prof.copy()
    prof[0] = 0.0
    prof[-1] = 0.0
    samples = prof[:, None] * amp[None, :]
    return EigenProfile(mode=mode, lam=lam, amplitude=amp,
                        parity="sin" if mode.l % 2 == 0 else "cos",
                        profile=prof, samples=samples)


def mode_displacement(mode: ModeIndex, lam: float, p: Parameters, grid: Grid3D,
                      coeff: complex = 1.0) -> np.ndarray:
    """Real displacement field u = 2 Re(coeff * e_{m,n,l}(z) e^{i(amx+bny)}).

    Shape (Nx, Ny, nzt, 3) with zero plate data; the building block for
    eigenmode seeding and the local branch profiles.
    """
    prof = eigenfunction(mode, lam, p, grid)
    theta = p.a * mode.m * grid.x[:, None] + p.b * mode.n * grid.y[None, :]
    wave = np.exp(1j * theta)
    field = 2.0 * np.real(coeff * wave[:, :, None, None] * prof.samples[None, None, :, :])
    return field


# ---------------------------------------------------------------------------
# discrete L
# ---------------------------------------------------------------------------

def apply_L(u: np.ndarray, tau: float, p: Parameters, grid: Grid3D,
            workers: int = 1, boundary_tol: float = 1e-13) -> np.ndarray:
    """Apply the discrete linearized operator to a displacement field.

    u has shape (Nx, Ny, nzt, 3) = (w1, w2, v), zero on the plates; x,y
    derivatives are spectral, z second derivatives are 3-point stencils on
    interior nodes.  Output carries zero plate rows.  Accepts complex input
    (L has real coefficients and acts componentwise).
    """
    if u.shape != grid.shape() + (3,):
        raise DomainError("displacement shape inconsistent with grid")
    if np.abs(u[:, :, 0, :]).max() > boundary_tol or np.abs(u[:, :, -1, :]).max() > boundary_tol:
        raise DomainError("displacement must vanish on the plates")
    lat = LateralSpectral(grid.Nx, grid.Ny, p.a, p.b, workers=workers)
    eps = p.eps
    w = u[..., :2]
    v = u[..., 2]
    uh = lat.fft(u)
    lap_lat = lat.ifft(-lat.k2[:, :, None, None] * uh)
    dxv = lat.ifft(lat.ikx[:, :, None] * uh[..., 2])
    dyv = lat.ifft(lat.iky[:, :, None] * uh[..., 2])
    div_w = lat.ifft(lat.ikx[:, :, None] * uh[..., 0] + lat.iky[:, :, None] * uh[..., 1])
    if not np.iscomplexobj(u):
        lap_lat, dxv, dyv, div_w = (arr.real for arr in (lap_lat, dxv, dyv, div_w))
    out = np.zeros_like(u)
    lap_w = lap_lat[..., :2]
    lap_w = lap_w[:, :, 1:-1, :] + dzz_interior(w, grid.hz)
    lap_v = lap_lat[:, :, 1:-1, 2] + dzz_interior(v, grid.hz)
    out[:, :, 1:-1, 0] = (-eps * lap_w[..., 0] - dxv[:, :, 1:-1] / eps
                          + w[:, :, 1:-1, 0] / eps - tau * w[:, :, 1:-1, 0])
    out[:, :, 1:-1, 1] = (-eps * lap_w[..., 1] - dyv[:, :, 1:-1] / eps
                          + w[:, :, 1:-1, 1] / eps - tau * w[:, :, 1:-1, 1])
    out[:, :, 1:-1, 2] = -lap_v / eps + div_w[:, :, 1:-1] / eps
    return out


def spectrum_table(p: Parameters, m_max: int, n_max: int, l_max: int,
                   disallow_axial: bool = False) -> list[ModeSpectrum]:
    """ModeSpectrum rows over the search box, in (m, n, l) lexicographic order."""
    rows = []
    for m, n, l in itertools.product(range(0, m_max + 1), range(0, n_max + 1),
                                     range(1, l_max + 1)):
        if disallow_axial and m == 0 and n == 0:
            continue
        rows.append(mode_spectrum(ModeIndex(m, n, l), p))
    return rows
