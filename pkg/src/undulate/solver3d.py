"""Semi-implicit Fourier-spectral gradient flow of the 3D de Gennes energy.

Scheme per step (projection method for n, semi-implicit for psi):

    (n* - n^k)/dt        = eps*Lap n* + explicit_n(psi^k, n^k)
    n^{k+1}              = n*/|n*|                    (pointwise projection)
    (psi^{k+1}-psi^k)/dt = D*Lap psi^{k+1} - S*psi^{k+1}
                           + explicit_psi(psi^k, n^{k+1})

solved mode-by-mode after a lateral FFT (tridiagonal Thomas sweeps in z).
Dirichlet plate data is re-imposed exactly after every step.

Two right-hand sides are provided.  ``variational`` descends the exact
discrete gradient of :func:`undulate.energy.total_energy` with mobilities
Gamma_n = 1/2 and Gamma_psi = 1/(c^2 eps^2); this reproduces the printed
director equation exactly and makes the linearization about the uniform state
exactly -L, so seeded eigenmodes grow/decay at the closed-form rates
lambda(tau).  ``paper`` integrates the printed equations verbatim; they are
not an exact descent direction (diffusion coefficient c instead of the
variational c^2 eps; nonzero residual at the uniform state unless c*eps = 1),
so energy monitoring is active only in variational mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._ops import (LateralSpectral, dz_centered_interior, dzz_interior,
                   solve_dirichlet_helmholtz, trapezoid_weights)
from .core import (DefectError, DomainError, EnergyIncreaseError, Field3D,
                   Grid3D, Parameters, impose_boundary, save_snapshot)
from .energy import (EnergyBreakdown, _assemble_breakdown, _compression_parts,
                     gauge_phase, total_energy)

RHS_MODES = ("variational", "paper")


@dataclass(frozen=True)
class SolverConfig3D:
    dt: float = 1e-3
    t_end: float = 1.0
    max_steps: int | None = None
    rhs_mode: str = "variational"
    snapshot_stride: int = 0          # steps between snapshots; 0 disables
    trace_stride: int = 50            # steps between trace samples
    stop_tol: float = 1e-8            # relative energy change per unit time
    stop_window: int = 100            # steps spanned by the stop rule
    max_dt_halvings: int = 6
    workers: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise DomainError("dt must be positive")
        if self.stop_tol <= 0:
            raise DomainError("stop tolerance must be positive")
        if self.rhs_mode not in RHS_MODES:
            raise DomainError(f"rhs_mode must be one of {RHS_MODES}")


@dataclass
class Trace:
    t: list = field(default_factory=list)
    energy: list = field(default_factory=list)       # EnergyBreakdown per sample
    amplitude: list = field(default_factory=list)    # max |n_par| at z = 0
    mode: list = field(default_factory=list)         # dominant lateral (|m|, |n|)

    def append(self, t: float, e: EnergyBreakdown, amp: float, mode: tuple) -> None:
        if self.t and t <= self.t[-1]:
            raise DomainError("trace times must increase strictly")
        self.t.append(t)
        self.energy.append(e)
        self.amplitude.append(amp)
        self.mode.append(mode)

    def write_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("t,E_total,E_compression,E_frank,E_potential,E_magnetic,amp,m_dom,n_dom\n")
            for t, e, a, (m, n) in zip(self.t, self.energy, self.amplitude, self.mode):
                f.write("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n"
                        % (t, e.total, e.compression, e.frank, e.potential,
                           e.magnetic, a, m, n))


def midplane_amplitude(state: Field3D, grid: Grid3D) -> float:
    k = grid.kmid
    npar = state.n[:, :, k, :2]
    return float(np.sqrt((npar**2).sum(axis=-1)).max())


def z_amplitude_profile(state: Field3D, grid: Grid3D) -> np.ndarray:
    """max |n_par| on each z-level."""
    return np.sqrt((state.n[..., :2] ** 2).sum(axis=-1)).max(axis=(0, 1))


def dominant_mode(state: Field3D, grid: Grid3D) -> tuple[int, int]:
    """Dominant lateral Fourier mode (|m|, |n|) of n_par on the mid-plane."""
    k = grid.kmid
    f1 = np.fft.fft2(state.n[:, :, k, 0])
    f2 = np.fft.fft2(state.n[:, :, k, 1])
    amp = np.abs(f1) ** 2 + np.abs(f2) ** 2
    amp[0, 0] = 0.0
    i, j = np.unravel_index(int(np.argmax(amp)), amp.shape)
    m = i if i <= grid.Nx // 2 else i - grid.Nx
    n = j if j <= grid.Ny // 2 else j - grid.Ny
    return int(abs(m)), int(abs(n))


class Solver3D:
    """Grid-derived workspace; states flow through functionally."""

    GAMMA_N = 0.5  # director mobility: matches the printed n-equation

    def __init__(self, p: Parameters, grid: Grid3D, cfg: SolverConfig3D):
        self.p, self.grid, self.cfg = p, grid, cfg
        self.lat = LateralSpectral(grid.Nx, grid.Ny, p.a, p.b, workers=cfg.workers)
        self.wz = trapezoid_weights(grid.nzt, grid.hz)
        self.gauge = gauge_phase(p, grid)
        # psi mobility: linearization about the uniform state becomes exactly -L
        self.gamma_psi = 1.0 / (p.c * p.eps) ** 2

    # -- variational gradients (exact gradients of the discrete energy) -------

    def _grad_n(self, rho, n, qx, qy, qz, nh=None):
        """dE/dn at interior nodes, shape (Nx, Ny, Nz, 3)."""
        p, grid, lat = self.p, self.grid, self.lat
        if nh is None:
            nh = lat.rfft(n)
        lap_lat = lat.irfft(-lat.k2r[:, :, None, None] * nh)
        lap = lap_lat[:, :, 1:-1, :] + dzz_interior(n, grid.hz)
        g = np.empty((grid.Nx, grid.Ny, grid.Nz, 3))
        irho = 1j * np.conj(rho[:, :, 1:-1])
        g[..., 0] = (2.0 / p.eps) * np.real(irho * qx[:, :, 1:-1]) \
            - 2.0 * p.tau * n[:, :, 1:-1, 0]
        g[..., 1] = (2.0 / p.eps) * np.real(irho * qy[:, :, 1:-1]) \
            - 2.0 * p.tau * n[:, :, 1:-1, 1]
        g[..., 2] = np.real(irho * (qz[:, :, :-1] + qz[:, :, 1:])) / p.eps
        g -= 2.0 * p.eps * lap
        return g

    def _grad_rho(self, rho, n, qx, qy, qz):
        """dE/d(conj rho) at interior nodes (Wirtinger convention), complex."""
        p, grid, lat = self.p, self.grid, self.lat
        ce = p.c * p.eps
        div_q = lat.ifft(lat.ikx[:, :, None] * lat.fft(qx)
                         + lat.iky[:, :, None] * lat.fft(qy))
        s = 1.0 - n[..., 2]
        g = (-ce * div_q[:, :, 1:-1]
             + 1j * (n[:, :, 1:-1, 0] * qx[:, :, 1:-1]
                     + n[:, :, 1:-1, 1] * qy[:, :, 1:-1])
             - ce * (qz[:, :, 1:] - qz[:, :, :-1]) / grid.hz
             - 0.5j * s[:, :, 1:-1] * (qz[:, :, :-1] + qz[:, :, 1:])) / p.eps
        g -= p.g / p.eps * (1.0 - np.abs(rho[:, :, 1:-1]) ** 2) * rho[:, :, 1:-1]
        return g

    def _variational(self, state: Field3D):
        """(rhs_n interior, (rho, dx rho, dy rho), energy of the state)."""
        p, grid = self.p, self.grid
        rho = state.psi * np.conj(self.gauge)
        qx, qy, qz, dxr, dyr = _compression_parts(rho, state.n, p, grid, self.lat)
        nh = self.lat.rfft(state.n)
        energy = _assemble_breakdown(rho, state.n, qx, qy, qz, p, grid,
                                     self.lat, self.wz, nh=nh)
        rhs_n = -self.GAMMA_N * self._grad_n(rho, state.n, qx, qy, qz, nh=nh)
        return rhs_n, (rho, dxr, dyr), energy

    def _rhs_rho(self, rho, dxr, dyr, n):
        """-Gamma_psi * dE/d(conj rho) with the updated director (interior)."""
        p, grid = self.p, self.grid
        ce = p.c * p.eps
        qx = ce * dxr - 1j * n[..., 0] * rho
        qy = ce * dyr - 1j * n[..., 1] * rho
        srho = (1.0 - n[..., 2]) * rho
        qz = ce * (rho[:, :, 1:] - rho[:, :, :-1]) / grid.hz \
            + 0.5j * (srho[:, :, 1:] + srho[:, :, :-1])
        return -self.gamma_psi * self._grad_rho(rho, n, qx, qy, qz)

    # -- printed right-hand sides ----------------------------------------------

    def _paper_rhs_n(self, state: Field3D):
        """eps*Lap n - c Im[psi (grad psi)*] + tau[(n.e1)e1 + (n.e2)e2], interior."""
        p, grid, lat = self.p, self.grid, self.lat
        psi_h = lat.fft(state.psi)
        dx = lat.ifft(lat.ikx[:, :, None] * psi_h)
        dy = lat.ifft(lat.iky[:, :, None] * psi_h)
        dz = dz_centered_interior(state.psi, grid.hz)
        lap_lat = lat.irfft(-lat.k2r[:, :, None, None] * lat.rfft(state.n))
        lap = lap_lat[:, :, 1:-1, :] + dzz_interior(state.n, grid.hz)
        psi_i = state.psi[:, :, 1:-1]
        rhs = p.eps * lap
        rhs[..., 0] += -p.c * np.imag(psi_i * np.conj(dx[:, :, 1:-1])) \
            + p.tau * state.n[:, :, 1:-1, 0]
        rhs[..., 1] += -p.c * np.imag(psi_i * np.conj(dy[:, :, 1:-1])) \
            + p.tau * state.n[:, :, 1:-1, 1]
        rhs[..., 2] += -p.c * np.imag(psi_i * np.conj(dz))
        return rhs, (psi_h, dx, dy)

    def _paper_rhs_psi(self, state: Field3D, n_new, psi_h, dx, dy):
        """c Lap psi - 2ci n.grad psi - ic(div n) psi - psi/eps + (g/eps)(1-|psi|^2)psi."""
        p, grid, lat = self.p, self.grid, self.lat
        lap_lat = lat.ifft(-lat.k2[:, :, None] * psi_h)
        lap = lap_lat[:, :, 1:-1] + dzz_interior(state.psi, grid.hz)
        dz = dz_centered_interior(state.psi, grid.hz)
        nh = lat.rfft(n_new)
        div_lat = lat.irfft(lat.ikxr[:, :, None] * nh[..., 0]
                            + lat.ikyr[:, :, None] * nh[..., 1])
        div_n = div_lat[:, :, 1:-1] \
            + dz_centered_interior(n_new[..., 2:], grid.hz)[..., 0]
        psi_i = state.psi[:, :, 1:-1]
        n_i = n_new[:, :, 1:-1]
        adv = (n_i[..., 0] * dx[:, :, 1:-1] + n_i[..., 1] * dy[:, :, 1:-1]
               + n_i[..., 2] * dz)
        return (p.c * lap - 2j * p.c * adv - 1j * p.c * div_n * psi_i
                - psi_i / p.eps + (p.g / p.eps) * (1.0 - np.abs(psi_i) ** 2) * psi_i)

    # -- implicit solves ---------------------------------------------------------

    def _implicit_real(self, rhs, gamma, dt, shift=0.0):
        """(1/dt + shift - gamma*Lap) delta = rhs on interior nodes, Dirichlet 0."""
        grid = self.grid
        rh = np.moveaxis(self.lat.rfft(rhs), 2, -1)           # (Nx, Nyr, 3, Nz)
        diag = (1.0 / dt + shift + gamma * self.lat.k2r
                + 2.0 * gamma / grid.hz**2)[:, :, None]
        sol = solve_dirichlet_helmholtz(diag, -gamma / grid.hz**2, rh)
        return self.lat.irfft(np.moveaxis(sol, -1, 2))

    def _implicit_complex(self, rhs, gamma, dt, shift=0.0):
        grid = self.grid
        rh = np.moveaxis(self.lat.fft(rhs), 2, -1)            # (Nx, Ny, Nz)
        diag = 1.0 / dt + shift + gamma * self.lat.k2 + 2.0 * gamma / grid.hz**2
        sol = solve_dirichlet_helmholtz(diag, -gamma / grid.hz**2, rh)
        return self.lat.ifft(np.moveaxis(sol, -1, 2))

    # -- stepping ------------------------------------------------------------------

    def _project(self, n_star):
        norms = np.linalg.norm(n_star, axis=-1)
        if norms.min() < 1e-8:
            raise DefectError("|n*| < 1e-8 at some node: point defect forming; "
                              "the defect-free model does not apply")
        return n_star / norms[..., None]

    def _advance(self, state: Field3D, dt: float, prepared=None) -> Field3D:
        p = self.p
        variational = self.cfg.rhs_mode == "variational"
        if variational:
            rhs_n, (rho, dxr, dyr), _ = (prepared if prepared is not None
                                         else self._variational(state))
        else:
            rhs_n, (psi_h, dx, dy) = self._paper_rhs_n(state)
        # (1/dt + shift - gamma*Lap) delta = rhs_full(level k) is the increment
        # form of the printed semi-implicit scheme: u* = u^k + delta.
        delta_n = self._implicit_real(rhs_n, p.eps, dt)
        n_star = state.n.copy()
        n_star[:, :, 1:-1, :] += delta_n
        n_new = self._project(n_star)
        if variational:
            rhs_rho = self._rhs_rho(rho, dxr, dyr, n_new)
            delta_rho = self._implicit_complex(rhs_rho, 1.0 / p.eps, dt)
            rho_new = rho.copy()
            rho_new[:, :, 1:-1] += delta_rho
            psi_new = self.gauge[None, None, :] * rho_new
        else:
            rhs_psi = self._paper_rhs_psi(state, n_new, psi_h, dx, dy)
            delta_psi = self._implicit_complex(rhs_psi, p.c, dt, shift=1.0 / p.eps)
            psi_new = state.psi.copy()
            psi_new[:, :, 1:-1] += delta_psi
        return impose_boundary(Field3D(psi=psi_new, n=n_new), p)

    def step(self, state: Field3D, dt: float | None = None) -> Field3D:
        """One scheme step at the configured (or given) dt."""
        return self._advance(state, self.cfg.dt if dt is None else dt)

    def run(self, state0: Field3D, outdir=None) -> tuple[Field3D, Trace]:
        """Iterate until t_end, max_steps, or the energy-flatness stop rule.

        Variational mode asserts non-increasing energy on every accepted step;
        an increasing step halves dt (at most max_dt_halvings times) and
        retries from the last accepted state.
        """
        cfg, grid, p = self.cfg, self.grid, self.p
        variational = cfg.rhs_mode == "variational"
        outdir = Path(outdir) if outdir is not None else None
        if outdir is not None:
            outdir.mkdir(parents=True, exist_ok=True)

        state = state0.copy()
        impose_boundary(state, p)
        trace = Trace()
        dt = cfg.dt
        halvings = 0
        t = 0.0
        step_idx = 0
        history: list[tuple[float, float]] = []

        prepared = self._variational(state) if variational else None
        ebd = prepared[2] if variational else total_energy(state, p, grid,
                                                           workers=cfg.workers)

        def sample():
            trace.append(t, ebd, midplane_amplitude(state, grid),
                         dominant_mode(state, grid))
            if outdir is not None and cfg.snapshot_stride:
                save_snapshot(outdir / f"snapshot_{step_idx:08d}.bin", state, p, grid)

        sample()
        history.append((t, ebd.total))

        while True:
            if t >= cfg.t_end - 1e-12 * max(1.0, cfg.t_end):
                break
            if cfg.max_steps is not None and step_idx >= cfg.max_steps:
                break
            candidate = self._advance(state, dt, prepared)
            if variational:
                prepared_next = self._variational(candidate)
                e_new = prepared_next[2]
                if e_new.total > ebd.total + 1e-10 * (1.0 + abs(ebd.total)):
                    halvings += 1
                    if halvings > cfg.max_dt_halvings:
                        raise EnergyIncreaseError(
                            f"energy increased at dt={dt:.3e} after "
                            f"{cfg.max_dt_halvings} halvings (dE="
                            f"{e_new.total - ebd.total:.3e})")
                    dt *= 0.5
                    continue
                state, prepared, ebd = candidate, prepared_next, e_new
            else:
                state = candidate
            t += dt
            step_idx += 1
            history.append((t, ebd.total if variational else np.nan))

            if step_idx % cfg.trace_stride == 0:
                if not variational:
                    ebd = total_energy(state, p, grid, workers=cfg.workers)
                sample()

            if variational and len(history) > cfg.stop_window:
                t0, e0 = history[-cfg.stop_window - 1]
                rate = abs(ebd.total - e0) / ((t - t0) * (1.0 + abs(ebd.total)))
                if rate < cfg.stop_tol:
                    break

        if not variational:
            ebd = total_energy(state, p, grid, workers=cfg.workers)
        if not trace.t or trace.t[-1] < t:
            sample()
        if outdir is not None:
            trace.write_csv(outdir / "trace.csv")
        return state, trace


# ---------------------------------------------------------------------------
# spec-level functional surface
# ---------------------------------------------------------------------------

def rhs(state: Field3D, p: Parameters, grid: Grid3D, rhs_mode: str = "variational",
        workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """(dn/dt unprojected, dpsi/dt) on the full grid (zero plate rows).

    Variational mode returns the mobility-weighted negative discrete gradient
    (Gamma_n = 1/2, Gamma_psi = 1/(c eps)^2); paper mode returns the printed
    right-hand sides verbatim.
    """
    cfg = SolverConfig3D(rhs_mode=rhs_mode, workers=workers)
    sol = Solver3D(p, grid, cfg)
    dn = np.zeros(grid.shape() + (3,))
    dpsi = np.zeros(grid.shape(), dtype=complex)
    if rhs_mode == "variational":
        rhs_n, (rho, dxr, dyr), _ = sol._variational(state)
        dn[:, :, 1:-1, :] = rhs_n
        dpsi[:, :, 1:-1] = sol.gauge[None, None, 1:-1] \
            * sol._rhs_rho(rho, dxr, dyr, state.n)
    else:
        rhs_n, (psi_h, dx, dy) = sol._paper_rhs_n(state)
        dn[:, :, 1:-1, :] = rhs_n
        dpsi[:, :, 1:-1] = sol._paper_rhs_psi(state, state.n, psi_h, dx, dy)
    return dn, dpsi


def step(state: Field3D, cfg: SolverConfig3D, p: Parameters, grid: Grid3D) -> Field3D:
    return Solver3D(p, grid, cfg).step(state)


def run(state0: Field3D, cfg: SolverConfig3D, p: Parameters, grid: Grid3D,
        outdir=None) -> tuple[Field3D, Trace]:
    return Solver3D(p, grid, cfg).run(state0, outdir=outdir)
