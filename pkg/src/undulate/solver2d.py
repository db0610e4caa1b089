"""Planar gradient flow on the unit torus (strong-field reduced model).

    dphi/dt = (1/eps) (Lap phi - div n_par)
    dn/dt   = Pi_n( eps*Lap n + (1/eps)((grad phi - n_par), 0)
                    - eps^(-delta) (n.e3) e3 )

Fully spectral; diffusion and the stiff linear n3 penalty are treated
implicitly (the printed 3D scheme treats its linear -psi/eps term implicitly,
and the penalty coefficient eps^(-delta) is large for the parameters of
interest), the projection is realized by pointwise renormalization, and the
zero mean of phi is re-imposed exactly each step.  The printed system is the
exact gradient flow of the planar energy with mobility 1/2 on both blocks, so
energy descent is monitored on every accepted step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._ops import LateralSpectral
from .core import (DefectError, DomainError, EnergyIncreaseError, Field2D,
                   Parameters, save_snapshot2d, PERTURB_AMP, PERTURB_MODES)
from .energy import EnergyBreakdown, planar_energy, solve_phase


@dataclass(frozen=True)
class SolverConfig2D:
    """The energy monitor and flatness stop rule act once per trace stride."""

    dt: float = 1e-4
    t_end: float = 10.0
    max_steps: int | None = None
    snapshot_stride: int = 0
    trace_stride: int = 100
    stop_tol: float = 1e-8
    max_dt_halvings: int = 6
    exact_phase: bool = False   # re-solve Lap phi = div n_par each step
    workers: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise DomainError("dt must be positive")
        if self.stop_tol <= 0:
            raise DomainError("stop tolerance must be positive")


@dataclass
class Trace2D:
    t: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    mass1: list = field(default_factory=list)    # int n1
    mass2: list = field(default_factory=list)    # int n2
    n3sq: list = field(default_factory=list)     # int n3^2
    mode1: list = field(default_factory=list)    # dominant (|m|, |n|) of n1
    mode2: list = field(default_factory=list)

    def append(self, t, e, m1, m2, n3sq, mode1, mode2):
        if self.t and t <= self.t[-1]:
            raise DomainError("trace times must increase strictly")
        self.t.append(t)
        self.energy.append(e)
        self.mass1.append(m1)
        self.mass2.append(m2)
        self.n3sq.append(n3sq)
        self.mode1.append(mode1)
        self.mode2.append(mode2)

    def write_csv(self, path):
        with open(path, "w") as f:
            f.write("t,E,mass1,mass2,n3sq,m1_dom,n1_dom,m2_dom,n2_dom\n")
            for i, t in enumerate(self.t):
                f.write("%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%d\n"
                        % (t, self.energy[i].total, self.mass1[i], self.mass2[i],
                           self.n3sq[i], *self.mode1[i], *self.mode2[i]))


def perturbed_state2d(p: Parameters, N: int, eta: float, seed: int) -> Field2D:
    """n = (eta u1, eta u2, 1 + eta u3)/|...|, phi = eta*phi0, band-limited noise."""
    if eta < 0:
        raise DomainError("eta must be nonnegative")
    rng = np.random.default_rng(seed)
    m = min(PERTURB_MODES, N // 2 - 1)
    g = rng.standard_normal((N, N, 4))
    gh = np.fft.fft2(g, axes=(0, 1))
    mx = np.abs(np.fft.fftfreq(N, d=1.0 / N))
    mask = (mx[:, None] <= m) & (mx[None, :] <= m)
    gh *= mask[:, :, None]
    u = np.fft.ifft2(gh, axes=(0, 1)).real
    peak = np.abs(u).max(axis=(0, 1), keepdims=True)
    peak[peak == 0] = 1.0
    u *= PERTURB_AMP / peak
    raw = np.empty((N, N, 3))
    raw[..., 0] = eta * u[..., 0]
    raw[..., 1] = eta * u[..., 1]
    raw[..., 2] = 1.0 + eta * u[..., 2]
    n = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
    phi = eta * u[..., 3]
    return Field2D(phi=phi - phi.mean(), n=n)


def masses(state: Field2D) -> tuple[float, float, float]:
    """(int n1, int n2, int n3^2) on the unit torus."""
    h2 = 1.0 / state.N**2
    return (h2 * float(state.n[..., 0].sum()),
            h2 * float(state.n[..., 1].sum()),
            h2 * float((state.n[..., 2] ** 2).sum()))


def _dominant(f: np.ndarray) -> tuple[int, int]:
    N = f.shape[0]
    a = np.abs(np.fft.fft2(f)) ** 2
    a[0, 0] = 0.0
    i, j = np.unravel_index(int(np.argmax(a)), a.shape)
    m = i if i <= N // 2 else i - N
    n = j if j <= N // 2 else j - N
    return int(abs(m)), int(abs(n))


class Solver2D:

    def __init__(self, p: Parameters, N: int, cfg: SolverConfig2D):
        if p.delta is None:
            raise DomainError("planar model requires Parameters.delta")
        self.p, self.N, self.cfg = p, N, cfg
        self.lat = LateralSpectral(N, N, 2.0 * np.pi, 2.0 * np.pi, workers=cfg.workers)
        self.penalty = p.eps ** (-p.delta)

    def _step(self, state: Field2D, dt: float) -> Field2D:
        p, N, lat = self.p, self.N, self.lat
        phi, n = state.phi, state.n
        nh = lat.rfft(n)
        phih = lat.rfft(phi)
        div_nh = lat.ikxr * nh[..., 0] + lat.ikyr * nh[..., 1]
        if self.cfg.exact_phase:
            zero = lat.k2r == 0.0
            phih_new = -div_nh / np.where(zero, 1.0, lat.k2r)
            phih_new[zero] = 0.0
        else:
            phih_new = (phih / dt - div_nh / p.eps) / (1.0 / dt + lat.k2r / p.eps)
            phih_new[0, 0] = 0.0
        gx = lat.irfft(lat.ikxr * phih_new)
        gy = lat.irfft(lat.ikyr * phih_new)

        explicit = np.empty_like(n)
        explicit[..., 0] = (gx - n[..., 0]) / p.eps
        explicit[..., 1] = (gy - n[..., 1]) / p.eps
        explicit[..., 2] = -self.penalty * n[..., 2]
        # (1/dt + eps*k^2 + penalty*P3) delta = rhs_full(level k): increment form
        rhs_h = -p.eps * lat.k2r[:, :, None] * nh + lat.rfft(explicit)
        denom = 1.0 / dt + p.eps * lat.k2r[:, :, None] \
            + self.penalty * np.array([0.0, 0.0, 1.0])[None, None, :]
        n_star = n + lat.irfft(rhs_h / denom)

        norms = np.linalg.norm(n_star, axis=-1)
        if norms.min() < 1e-8:
            raise DefectError("|n*| < 1e-8 at some node: point defect forming")
        n_new = n_star / norms[..., None]
        phi_new = lat.irfft(phih_new)
        phi_new -= phi_new.mean()
        return Field2D(phi=phi_new, n=n_new)

    def step(self, state: Field2D, dt: float | None = None) -> Field2D:
        return self._step(state, self.cfg.dt if dt is None else dt)

    def run(self, state0: Field2D, outdir=None) -> tuple[Field2D, Trace2D]:
        """Iterate to t_end, max_steps, or energy flatness.

        The planar energy is monitored at every trace sample; an increase
        between consecutive samples reverts to the previous sample and halves
        dt (at most max_dt_halvings times).
        """
        cfg, p = self.cfg, self.p
        outdir = Path(outdir) if outdir is not None else None
        if outdir is not None:
            outdir.mkdir(parents=True, exist_ok=True)
        state = state0.copy()
        trace = Trace2D()
        dt = cfg.dt
        halvings = 0
        t = 0.0
        step_idx = 0
        ebd = planar_energy(state, p, workers=cfg.workers)
        checkpoint = (state.copy(), t, step_idx, ebd)

        def sample():
            m1, m2, n3sq = masses(state)
            trace.append(t, ebd, m1, m2, n3sq,
                         _dominant(state.n[..., 0]), _dominant(state.n[..., 1]))
            if outdir is not None and cfg.snapshot_stride:
                save_snapshot2d(outdir / f"snapshot_{step_idx:08d}.bin", state, p)

        sample()

        done = False
        while not done:
            for _ in range(cfg.trace_stride):
                if t >= cfg.t_end - 1e-12 * max(1.0, cfg.t_end) or \
                        (cfg.max_steps is not None and step_idx >= cfg.max_steps):
                    done = True
                    break
                state = self._step(state, dt)
                t += dt
                step_idx += 1
            e_new = planar_energy(state, p, workers=cfg.workers)
            if e_new.total > ebd.total + 1e-10 * (1.0 + abs(ebd.total)):
                halvings += 1
                if halvings > cfg.max_dt_halvings:
                    raise EnergyIncreaseError(
                        f"planar energy increased at dt={dt:.3e} after "
                        f"{cfg.max_dt_halvings} halvings")
                dt *= 0.5
                state, t, step_idx, ebd = checkpoint
                state = state.copy()
                done = False
                continue
            flat = (abs(e_new.total - ebd.total)
                    / (max(t - checkpoint[1], dt) * (1.0 + abs(e_new.total)))
                    < cfg.stop_tol)
            ebd = e_new
            checkpoint = (state.copy(), t, step_idx, ebd)
            if trace.t[-1] < t:
                sample()
            if flat and step_idx > 0:
                done = True

        if outdir is not None:
            trace.write_csv(outdir / "trace.csv")
            export_planar_csv(outdir / "fields.csv", state)
        return state, trace


def step2d(state: Field2D, cfg: SolverConfig2D, p: Parameters) -> Field2D:
    return Solver2D(p, state.N, cfg).step(state)


def run2d(state0: Field2D, cfg: SolverConfig2D, p: Parameters,
          outdir=None) -> tuple[Field2D, Trace2D]:
    return Solver2D(p, state0.N, cfg).run(state0, outdir=outdir)


def export_planar_csv(path, state: Field2D) -> None:
    """Contour-ready CSV of phi, n1, n2 (columns x,y,phi,n1,n2)."""
    N = state.N
    x = np.arange(N) / N
    with open(path, "w") as f:
        f.write("x,y,phi,n1,n2\n")
        for i in range(N):
            for j in range(N):
                f.write("%.17g,%.17g,%.17g,%.17g,%.17g\n"
                        % (x[i], x[j], state.phi[i, j],
                           state.n[i, j, 0], state.n[i, j, 1]))


# ---------------------------------------------------------------------------
# pattern classification
# ---------------------------------------------------------------------------

def classify_pattern(state: Field2D) -> tuple[str, float]:
    """Classify an equilibrium as Square2D, Stripe1D, or Other.

    Square2D: the x- and y-varying shares of the total n_par spectral energy
    both reach 25%.  Stripe1D: one in-plane component carries >= 99% of its
    spectral energy in modes varying along a single direction while the other
    component is negligible.  Confidence is the margin of the decisive share.
    """
    nh1 = np.fft.fft2(state.n[..., 0])
    nh2 = np.fft.fft2(state.n[..., 1])
    N = state.N
    k = np.fft.fftfreq(N, d=1.0 / N)
    kx2 = (k**2)[:, None]
    ky2 = (k**2)[None, :]
    frac_x = np.zeros((N, N))
    nz = kx2 + ky2 > 0
    frac_x[nz] = (kx2 / (kx2 + ky2 + ~nz))[nz]
    e1 = np.abs(nh1) ** 2
    e2 = np.abs(nh2) ** 2
    e1[0, 0] = e2[0, 0] = 0.0
    total = e1.sum() + e2.sum()
    if total == 0:
        return "Other", 0.0
    sx = float((frac_x * (e1 + e2)).sum() / total)
    sy = 1.0 - sx
    if min(sx, sy) >= 0.25:
        return "Square2D", min(sx, sy) / 0.25
    for comp, other in ((e1, e2), (e2, e1)):
        if comp.sum() < 1e-12 * total:
            continue
        conc = max(comp[:, 0].sum(), comp[0, :].sum()) / comp.sum()
        if conc >= 0.99 and other.sum() <= 0.01 * total:
            return "Stripe1D", conc
    return "Other", max(sx, sy)
