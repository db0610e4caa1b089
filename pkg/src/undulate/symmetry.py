"""The O(2) x O(2) x Z2 action, isotropy groups, and local branch profiles.

The action on displacement fields u = (w1, w2, v):

    rho(phi, theta) u = u(x + phi/a, y + theta/b, z)
    rho(kx) u = diag(-1, 1, 1) u(-x, y, z)
    rho(ky) u = diag(1, -1, 1) u(x, -y, z)
    rho(kz) u = -u(x, y, -z)

and on states (psi, n):

    rho(phi, theta)(psi, n) = (psi, n)(x + phi/a, y + theta/b, z)
    rho(kx)(psi, n) = (psi, R_x n)(-x, y, z),      R_x = diag(-1, 1, 1)
    rho(ky)(psi, n) = (psi, R_y n)(x, -y, z),      R_y = diag(1, -1, 1)
    rho(kz)(psi, n) = (conj psi, R_x R_y n)(x, y, -z)

Rotations are restricted to lattice-compatible angles (integer index shifts),
so every action is an exact permutation with sign flips and the group law
holds bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import DomainError, Field3D, Grid3D, Parameters
from .spectrum import ModeIndex, mode_displacement

_SHIFT_TOL = 1e-12


@dataclass(frozen=True)
class Rotation:
    phi: float
    theta: float


@dataclass(frozen=True)
class Reflect:
    axis: str  # "x" | "y" | "z"


@dataclass(frozen=True)
class GroupElement:
    """Word in the generators; factors apply right-to-left (rho(gh) = rho(g)rho(h))."""

    factors: tuple = ()

    @staticmethod
    def identity() -> "GroupElement":
        return GroupElement(())

    @staticmethod
    def rotation(phi: float, theta: float) -> "GroupElement":
        return GroupElement((Rotation(phi, theta),))

    @staticmethod
    def kappa_x() -> "GroupElement":
        return GroupElement((Reflect("x"),))

    @staticmethod
    def kappa_y() -> "GroupElement":
        return GroupElement((Reflect("y"),))

    @staticmethod
    def kappa_z() -> "GroupElement":
        return GroupElement((Reflect("z"),))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.factors + other.factors)


def _lattice_shifts(rot: Rotation, grid: Grid3D) -> tuple[int, int]:
    """Index shifts for a rotation; errors if the angle is off-lattice."""
    jx = rot.phi * grid.Nx / (2.0 * np.pi)
    jy = rot.theta * grid.Ny / (2.0 * np.pi)
    if abs(jx - round(jx)) > _SHIFT_TOL * grid.Nx or abs(jy - round(jy)) > _SHIFT_TOL * grid.Ny:
        raise DomainError(
            f"rotation ({rot.phi}, {rot.theta}) is not lattice-compatible "
            f"(needs phi in (2 pi/Nx) Z, theta in (2 pi/Ny) Z)")
    return int(round(jx)), int(round(jy))


def _reflect_x_indices(n: int) -> np.ndarray:
    return (-np.arange(n)) % n


def _apply_factor_u(u: np.ndarray, fac, grid: Grid3D) -> np.ndarray:
    if isinstance(fac, Rotation):
        jx, jy = _lattice_shifts(fac, grid)
        return np.roll(u, (-jx, -jy), axis=(0, 1))
    if fac.axis == "x":
        out = u[_reflect_x_indices(grid.Nx), :, :, :].copy()
        out[..., 0] = -out[..., 0]
        return out
    if fac.axis == "y":
        out = u[:, _reflect_x_indices(grid.Ny), :, :].copy()
        out[..., 1] = -out[..., 1]
        return out
    return -u[:, :, ::-1, :]


def apply_group_element(u: np.ndarray, gamma: GroupElement, p: Parameters,
                        grid: Grid3D) -> np.ndarray:
    """Transform a displacement field by a group element (exact on the lattice)."""
    if u.shape != grid.shape() + (3,):
        raise DomainError("displacement shape inconsistent with grid")
    out = u
    for fac in reversed(gamma.factors):
        out = _apply_factor_u(out, fac, grid)
    return np.array(out, copy=True) if out is u else out


def _apply_factor_state(psi: np.ndarray, n: np.ndarray, fac, grid: Grid3D):
    if isinstance(fac, Rotation):
        jx, jy = _lattice_shifts(fac, grid)
        return (np.roll(psi, (-jx, -jy), axis=(0, 1)),
                np.roll(n, (-jx, -jy), axis=(0, 1)))
    if fac.axis == "x":
        idx = _reflect_x_indices(grid.Nx)
        psi2 = psi[idx, :, :].copy()
        n2 = n[idx, :, :, :].copy()
        n2[..., 0] = -n2[..., 0]
        return psi2, n2
    if fac.axis == "y":
        idx = _reflect_x_indices(grid.Ny)
        psi2 = psi[:, idx, :].copy()
        n2 = n[:, idx, :, :].copy()
        n2[..., 1] = -n2[..., 1]
        return psi2, n2
    psi2 = np.conj(psi[:, :, ::-1])
    n2 = n[:, :, ::-1, :].copy()
    n2[..., 0] = -n2[..., 0]
    n2[..., 1] = -n2[..., 1]
    return psi2, n2


def transform_state(state: Field3D, gamma: GroupElement, p: Parameters,
                    grid: Grid3D) -> Field3D:
    """Transform a (psi, n) state; preserves the boundary data exactly."""
    psi, n = state.psi, state.n
    for fac in reversed(gamma.factors):
        psi, n = _apply_factor_state(psi, n, fac, grid)
    return Field3D(psi=np.array(psi, copy=True) if psi is state.psi else psi,
                   n=np.array(n, copy=True) if n is state.n else n)


def mode_action(u1: complex, u2: complex, gamma: GroupElement,
                mode: ModeIndex) -> tuple[complex, complex]:
    """Action on the irreducible-representation pair (u_{m,n,l}, u_{m,-n,l}).

    rho(phi,theta)(u1,u2) = e^{im phi}(e^{in theta} u1, e^{-in theta} u2),
    rho(kx)(u1,u2) = (conj u2, conj u1), rho(ky)(u1,u2) = (u2, u1),
    rho(kz)(u1,u2) = (-1)^l (u1, u2).
    """
    m, n, l = mode
    for fac in reversed(gamma.factors):
        if isinstance(fac, Rotation):
            u1 = np.exp(1j * m * fac.phi) * np.exp(1j * n * fac.theta) * u1
            u2 = np.exp(1j * m * fac.phi) * np.exp(-1j * n * fac.theta) * u2
        elif fac.axis == "x":
            u1, u2 = np.conj(u2), np.conj(u1)
        elif fac.axis == "y":
            u1, u2 = u2, u1
        else:
            s = (-1.0) ** l
            u1, u2 = s * u1, s * u2
    return u1, u2


# ---------------------------------------------------------------------------
# isotropy groups
# ---------------------------------------------------------------------------

TAGS = ("O2xZ2", "DxZ2", "O2tilde", "Dtilde")
# fixed-point generators of the four groups in the (u1, u2) plane
FIXED_SPACE_GENERATORS = {
    "O2xZ2": (1.0 + 0j, 0j),
    "DxZ2": (1.0 + 0j, 1.0 + 0j),
    "O2tilde": (1j, 0j),
    "Dtilde": (1.0 + 0j, -1.0 + 0j),
}


@dataclass(frozen=True)
class IsotropySpec:
    """One of the four isotropy groups with 1-dimensional fixed space.

    O2xZ2  = <(phi/m0, -phi/n0), kx ky, kz>          (l0 even, (u1,u2) = (r, 0))
    DxZ2   = <(pi/m0, -pi/n0), kx, ky, kz>           (l0 even, (u1,u2) = (r, r))
    O2tilde= <(phi/m0, -phi/n0), kx ky kz>           (l0 odd,  (u1,u2) = (i r, 0))
    Dtilde = <(pi/m0, -pi/n0), kz kx, kz ky>         (l0 odd,  (u1,u2) = (r, -r))
    """

    tag: str
    m0: int
    n0: int
    l0: int

    def __post_init__(self):
        if self.tag not in TAGS:
            raise DomainError(f"unknown isotropy tag {self.tag!r}")
        if self.m0 < 1 or self.n0 < 1:
            raise DomainError("m0, n0 must be >= 1")
        if self.l0 < 1:
            raise DomainError("l0 must be >= 1")

    @property
    def parity_ok(self) -> bool:
        even = self.l0 % 2 == 0
        return even if self.tag in ("O2xZ2", "DxZ2") else not even

    def mode(self) -> ModeIndex:
        return ModeIndex(self.m0, self.n0, self.l0)

    def _continuous_rotation(self, grid: Grid3D) -> GroupElement:
        """Smallest lattice rotation generating the (phi/m0, -phi/n0) circle."""
        # phi/(2 pi) must lie in (m0/Nx) Z intersect (n0/Ny) Z
        t1 = Fraction(self.m0, grid.Nx)
        t2 = Fraction(self.n0, grid.Ny)
        t = Fraction(math.lcm(t1.numerator, t2.numerator),
                     math.gcd(t1.denominator, t2.denominator))
        phi = 2.0 * np.pi * float(t)
        return GroupElement.rotation(phi / self.m0, -phi / self.n0)

    def generators(self, grid: Grid3D) -> list[GroupElement]:
        """Generator list per the group presentation; lattice-compatible.

        Requires Nx divisible by 2*m0 and Ny divisible by 2*n0 so the discrete
        rotations land on the grid.
        """
        if grid.Nx % (2 * self.m0) or grid.Ny % (2 * self.n0):
            raise DomainError("grid incompatible: need Nx % 2 m0 == 0 and Ny % 2 n0 == 0")
        kx, ky, kz = (GroupElement.kappa_x(), GroupElement.kappa_y(),
                      GroupElement.kappa_z())
        half_turn = GroupElement.rotation(np.pi / self.m0, -np.pi / self.n0)
        if self.tag == "O2xZ2":
            return [self._continuous_rotation(grid), kx * ky, kz]
        if self.tag == "DxZ2":
            return [half_turn, kx, ky, kz]
        if self.tag == "O2tilde":
            return [self._continuous_rotation(grid), kx * ky * kz]
        return [half_turn, kz * kx, kz * ky]


def is_fixed(u: np.ndarray, spec: IsotropySpec, p: Parameters, grid: Grid3D,
             tol: float = 1e-12) -> tuple[bool, float]:
    """True iff every generator moves u by at most tol (sup norm); also the
    worst deviation."""
    scale = max(np.abs(u).max(), 1.0)
    worst = 0.0
    for gamma in spec.generators(grid):
        dev = float(np.abs(apply_group_element(u, gamma, p, grid) - u).max())
        worst = max(worst, dev)
    return worst <= tol * scale, worst


# ---------------------------------------------------------------------------
# local branch profiles
# ---------------------------------------------------------------------------

@dataclass
class BranchProfile:
    spec: IsotropySpec
    r: float
    lam: float
    u: np.ndarray       # leading-order displacement
    state: Field3D      # (psi, n) via the parametrization map


def branch_profile(spec: IsotropySpec, r: float, lam: float, p: Parameters,
                   grid: Grid3D) -> BranchProfile:
    """Leading-order bifurcation branch with the symmetries of ``spec``.

    Amplitude conventions in the (u_{m0,n0,l0}, u_{m0,-n0,l0}) plane:
    (r/2, 0), (r/2, r/2), (-i r/2, 0), (r/2, -r/2) respectively, realized as
    u = 2 Re(u1 * e_{m0,n0,l0} e^{i(am0 x + bn0 y)}) + 2 Re(u2 * e_{m0,-n0,l0}
    e^{i(am0 x - bn0 y)}) + O(r^2); the O(r^2) correction is not computed.
    """
    if not spec.parity_ok:
        want = "even" if spec.tag in ("O2xZ2", "DxZ2") else "odd"
        raise DomainError(f"isotropy {spec.tag} requires l0 {want} (got l0={spec.l0})")
    from .core import impose_boundary  # deferred to avoid cycle at import time
    from .energy import displacement_to_state

    c1, c2 = FIXED_SPACE_GENERATORS[spec.tag]
    u1, u2 = 0.5 * r * c1, 0.5 * r * c2
    mode_p = ModeIndex(spec.m0, spec.n0, spec.l0)
    u = mode_displacement(mode_p, lam, p, grid, coeff=u1)
    if u2 != 0:
        mode_m = ModeIndex(spec.m0, -spec.n0, spec.l0)
        u = u + mode_displacement(mode_m, lam, p, grid, coeff=u2)
    u[:, :, 0, :] = 0.0
    u[:, :, -1, :] = 0.0
    state = impose_boundary(displacement_to_state(u, p, grid), p)
    return BranchProfile(spec=spec, r=r, lam=lam, u=u, state=state)
