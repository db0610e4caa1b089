"""Acceptance-scale experiment drivers behind ``undulate reproduce``.

Each driver returns a plain report dict with measured values, expectations,
and a boolean "pass"; the CLI renders them and sets the exit code, and the
acceptance test suite calls them directly.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .core import Grid3D, Parameters, perturbed_state
from .energy import pattern_lower_bound, square_pattern, stripe_pattern, wall_energy_density
from .solver2d import SolverConfig2D, Solver2D, classify_pattern, masses, perturbed_state2d
from .solver3d import (SolverConfig3D, Solver3D, dominant_mode,
                       midplane_amplitude, z_amplitude_profile)
from .spectrum import global_critical_field, spectrum_table

SQUARE_BOUND = 2.0 * math.sqrt(2.0) * (4.0 - math.pi)
STRIPE_BOUND = 8.0 * (math.sqrt(2.0) - 1.0)

# material constants of the 3D onset study: c = sqrt(5), g = 0.25,
# eps = 0.3, L1 = L2 = 3 d0 so a = b = 2/3
ONSET_PARAMS = dict(eps=0.3, c=math.sqrt(5.0), g=0.25, a=2.0 / 3.0, b=2.0 / 3.0)


def reproduce_walls() -> dict:
    sq = pattern_lower_bound(square_pattern())
    st = pattern_lower_bound(stripe_pattern())
    jump = abs(4.0 * abs(math.sin(math.pi / 4) - (math.pi / 4) * math.cos(math.pi / 4))
               - wall_energy_density(math.pi / 4))
    ok = (abs(sq - SQUARE_BOUND) <= 1e-12 and abs(st - STRIPE_BOUND) <= 1e-12
          and jump <= 1e-14)
    return {"square": sq, "square_expected": SQUARE_BOUND,
            "stripe": st, "stripe_expected": STRIPE_BOUND,
            "continuity_gap_at_pi4": jump, "pass": ok}


def reproduce_spectrum_table(eps: float = 0.3, a: float = 2.0 / 3.0,
                             b: float = 2.0 / 3.0,
                             bounds: tuple[int, int, int] = (8, 8, 4),
                             outdir=None) -> dict:
    p = Parameters(eps=eps, a=a, b=b)
    tau_c, argmin = global_critical_field(p, *bounds)
    rows = spectrum_table(p, *bounds)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "spectrum.csv", "w") as f:
            f.write("m,n,l,p2,tau_crit,slope\n")
            for r in rows:
                f.write("%d,%d,%d,%.17g,%.17g,%.17g\n"
                        % (r.mode.m, r.mode.n, r.mode.l, r.p2, r.tau_crit, r.slope))
    ok = 1.9 <= tau_c <= 2.1
    return {"tau_c": tau_c, "argmin": [tuple(m) for m in argmin],
            "expected_range": (1.9, 2.1), "pass": ok}


def _onset_run(tau: float, nx: int, ny: int, nz: int, eta: float, seed: int,
               dt: float, t_end: float, workers: int, outdir=None,
               stop_tol: float = 1e-8) -> dict:
    p = Parameters(tau=tau, **ONSET_PARAMS)
    grid = Grid3D.from_parameters(p, nx, ny, nz)
    state0 = perturbed_state(p, grid, eta, seed)
    amp0 = midplane_amplitude(state0, grid)
    cfg = SolverConfig3D(dt=dt, t_end=t_end, stop_tol=stop_tol, trace_stride=100,
                         workers=workers)
    final, trace = Solver3D(p, grid, cfg).run(state0, outdir=outdir)
    prof = z_amplitude_profile(final, grid)
    kpeak = int(np.argmax(prof))
    z = grid.z
    return {"tau": tau, "amp0": amp0, "amp_final": midplane_amplitude(final, grid),
            "t_final": trace.t[-1], "dominant_mode": dominant_mode(final, grid),
            "z_peak": float(z[kpeak]), "middle_third": bool(abs(z[kpeak]) < np.pi / 6),
            "energy_final": trace.energy[-1].total}


def reproduce_onset(outdir=None, nx: int = 64, ny: int = 64, nz: int = 63,
                    eta: float = 0.1, seed: int = 0, dt: float = 1e-3,
                    t_end: float = 30.0, workers: int = 1) -> dict:
    """Onset dichotomy at tau = 1.5 (stable) and tau = 2.5 (undulating)."""
    out_lo = Path(outdir) / "tau_1.5" if outdir is not None else None
    out_hi = Path(outdir) / "tau_2.5" if outdir is not None else None
    lo = _onset_run(1.5, nx, ny, nz, eta, seed, dt, t_end, workers, out_lo)
    hi = _onset_run(2.5, nx, ny, nz, eta, seed, dt, t_end, workers, out_hi)
    m, n = hi["dominant_mode"]
    checks = {
        "decay_below_1pc": lo["amp_final"] <= 0.01 * lo["amp0"],
        "growth_10x": hi["amp_final"] >= 10.0 * hi["amp0"],
        "mode_in_ring": (m * m + n * n) in (4, 5, 8),
        "peak_middle_third": hi["middle_third"],
    }
    return {"tau_low": lo, "tau_high": hi, "checks": checks,
            "pass": all(checks.values())}


def _planar_run(eps: float, N: int, delta: float, seed: int, dt: float,
                t_end: float, workers: int, outdir=None,
                stop_tol: float = 2e-7) -> dict:
    p = Parameters(eps=eps, delta=delta)
    state0 = perturbed_state2d(p, N, eta=0.1, seed=seed)
    cfg = SolverConfig2D(dt=dt, t_end=t_end, stop_tol=stop_tol, trace_stride=200,
                         workers=workers)
    final, trace = Solver2D(p, N, cfg).run(state0, outdir=outdir)
    kind, confidence = classify_pattern(final)
    m1, m2, n3sq = masses(final)
    return {"eps": eps, "seed": seed, "energy": trace.energy[-1].total,
            "t_final": trace.t[-1], "kind": kind, "confidence": confidence,
            "mass1": m1, "mass2": m2, "n3sq": n3sq,
            "phi_mean": float(final.phi.mean())}


def reproduce_table1(outdir=None, N: int = 256, delta: float = 1.5,
                     seeds: tuple[int, ...] = (0, 1, 2), dt: float = 2e-4,
                     t_end: float = 40.0, workers: int = 1) -> dict:
    """Desk-scale planar equilibria: eps = 0.01 (3 seeds) and eps = 0.005.

    The published energies at eps = 0.003 and 0.001 need the paper's 1024^2
    grid; at this scale the monotone decrease toward the square-pattern bound
    2 sqrt(2) (4 - pi) substitutes for them.
    """
    runs = []
    for s in seeds:
        sub = Path(outdir) / f"eps_0.01_seed{s}" if outdir is not None else None
        runs.append(_planar_run(0.01, N, delta, s, dt, t_end, workers, sub))
    sub = Path(outdir) / "eps_0.005_seed0" if outdir is not None else None
    low = _planar_run(0.005, N, delta, seeds[0], dt / 2, t_end, workers, sub)

    square_runs = [r for r in runs if r["kind"] == "Square2D"]
    in_band = [r for r in square_runs if abs(r["energy"] - 3.50) <= 0.15 * 3.50]
    ref = next((r for r in runs if r["seed"] == seeds[0]), runs[0])
    checks = {
        "square_majority_in_band": len(in_band) >= 2,
        "eps005_strictly_lower": low["energy"] < ref["energy"],
        "both_exceed_gamma_bound": (low["energy"] > SQUARE_BOUND
                                    and ref["energy"] > SQUARE_BOUND),
        "masses_small": all(abs(r["mass1"]) <= 1e-2 and abs(r["mass2"]) <= 1e-2
                            for r in runs + [low]),
        "phi_mean_zero": all(abs(r["phi_mean"]) <= 1e-10 for r in runs + [low]),
    }
    return {"runs": runs, "eps005": low, "gamma_bound": SQUARE_BOUND,
            "checks": checks, "pass": all(checks.values())}
