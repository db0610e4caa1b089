"""Unified command-line front end: spectrum, branch, energy, walls, sim3d,
sim2d, reproduce.

Configuration precedence: flags > JSON config file (--config, flat keys named
like the flags with dashes replaced by underscores) > built-in defaults.
Unknown config keys are rejected.  Exit codes: 0 success, 2 usage error,
3 numerical failure (defect / energy increase), 4 acceptance mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import (DefectError, DomainError, EnergyIncreaseError, Field3D,
                   Grid3D, Parameters, export_slices, load_snapshot,
                   perturbed_state, save_snapshot)
from .energy import pattern_lower_bound, square_pattern, stripe_pattern, total_energy
from .reproduce import (reproduce_onset, reproduce_spectrum_table,
                        reproduce_table1, reproduce_walls)
from .solver2d import Solver2D, SolverConfig2D, perturbed_state2d
from .solver3d import Solver3D, SolverConfig3D
from .spectrum import global_critical_field, spectrum_table
from .symmetry import IsotropySpec, branch_profile, is_fixed

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_MISMATCH = 4

GROUP_TAGS = {"o2z2": "O2xZ2", "dz2": "DxZ2", "o2t": "O2tilde", "dt": "Dtilde"}


class UsageError(Exception):
    pass


def resolve_config(defaults: dict, file_values: dict, flag_values: dict) -> tuple[dict, dict]:
    """Merge defaults < file < flags; returns (values, provenance)."""
    unknown = set(file_values) - set(defaults)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    values = dict(defaults)
    provenance = {k: "default" for k in defaults}
    for k, v in file_values.items():
        values[k] = v
        provenance[k] = "file"
    for k, v in flag_values.items():
        if v is not None:
            values[k] = v
            provenance[k] = "flag"
    return values, provenance


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config file {path}: {e}")
    if not isinstance(data, dict):
        raise UsageError("config file must hold a flat JSON object")
    return data


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(outdir: Path, subcommand: str, values: dict, provenance: dict,
                   grid: dict, outputs: list[Path], wall_clock: float) -> Path:
    manifest = {
        "subcommand": subcommand,
        "parameters": values,
        "grid": grid,
        "provenance": provenance,
        "tool_version": __version__,
        "wall_clock_s": wall_clock,
        "outputs": [{"path": str(p.relative_to(outdir)), "sha256": _sha256(p)}
                    for p in sorted(outputs)],
    }
    path = outdir / "manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    for entry in manifest["outputs"]:
        p = outdir / entry["path"]
        if not p.exists() or _sha256(p) != entry["sha256"]:
            raise RuntimeError(f"manifest invariant violated for {p}")
    return path


def _collect_outputs(outdir: Path) -> list[Path]:
    return [p for p in outdir.rglob("*") if p.is_file() and p.name != "manifest.json"]


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("UNDULATE_THREADS")
    return int(env) if env else 1


def _positive(name, value):
    if value is not None and value <= 0:
        raise UsageError(f"{name} must be positive (got {value})")
    return value


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    defaults = dict(eps=0.3, a=2.0 / 3.0, b=2.0 / 3.0, mmax=8, nmax=8, lmax=4,
                    no_axial=False, tol=1e-12)
    values, prov = resolve_config(defaults, _load_config_file(args.config), {
        "eps": args.eps, "a": args.a, "b": args.b, "mmax": args.mmax,
        "nmax": args.nmax, "lmax": args.lmax,
        "no_axial": True if args.no_axial else None, "tol": args.tol,
    })
    for k in ("eps", "a", "b"):
        _positive(k, values[k])
    p = Parameters(eps=values["eps"], a=values["a"], b=values["b"])
    t0 = time.time()
    rows = spectrum_table(p, values["mmax"], values["nmax"], values["lmax"],
                          disallow_axial=values["no_axial"])
    tau_c, argmin = global_critical_field(p, values["mmax"], values["nmax"],
                                          values["lmax"],
                                          disallow_axial=values["no_axial"],
                                          tie_tol=values["tol"])
    lines = ["m,n,l,p2,tau_crit,slope"]
    lines += ["%d,%d,%d,%.17g,%.17g,%.17g"
              % (r.mode.m, r.mode.n, r.mode.l, r.p2, r.tau_crit, r.slope)
              for r in rows]
    summary = "# tau_c = %.17g at %s" % (tau_c, " ".join(
        f"({m.m},{m.n},{m.l})" for m in argmin))
    if args.out_dir:
        outdir = Path(args.out_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "spectrum.csv", "w") as f:
            f.write("\n".join(lines) + "\n" + summary + "\n")
        write_manifest(outdir, "spectrum", values, prov, {},
                       _collect_outputs(outdir), time.time() - t0)
    else:
        print("\n".join(lines))
    print(summary)
    return EXIT_OK


def cmd_branch(args) -> int:
    defaults = dict(group="o2z2", m0=1, n0=1, l0=2, r=0.01, lam=0.0,
                    eps=0.3, a=2.0 / 3.0, b=2.0 / 3.0, tau=None,
                    nx=32, ny=32, nz=31)
    values, prov = resolve_config(defaults, _load_config_file(args.config), {
        "group": args.group, "m0": args.m0, "n0": args.n0, "l0": args.l0,
        "r": args.r, "lam": args.lam, "eps": args.eps, "a": args.a, "b": args.b,
        "tau": args.tau, "nx": args.nx, "ny": args.ny, "nz": args.nz,
    })
    if values["group"] not in GROUP_TAGS:
        raise UsageError(f"--group must be one of {sorted(GROUP_TAGS)}")
    from .spectrum import ModeIndex, critical_field
    spec = IsotropySpec(GROUP_TAGS[values["group"]], values["m0"], values["n0"],
                        values["l0"])
    tau = values["tau"]
    p = Parameters(eps=values["eps"], a=values["a"], b=values["b"], tau=0.0)
    if tau is None:
        tau = critical_field(ModeIndex(values["m0"], values["n0"], values["l0"]), p)
    p = p.with_tau(tau)
    grid = Grid3D.from_parameters(p, values["nx"], values["ny"], values["nz"])
    t0 = time.time()
    prof = branch_profile(spec, values["r"], values["lam"], p, grid)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_snapshot(outdir / "branch.bin", prof.state, p, grid)
    with open(outdir / "symmetry_report.csv", "w") as f:
        f.write("generator,max_deviation\n")
        for i, gamma in enumerate(spec.generators(grid)):
            from .symmetry import apply_group_element
            dev = float(np.abs(apply_group_element(prof.u, gamma, p, grid)
                               - prof.u).max())
            f.write("g%d,%.17g\n" % (i, dev))
    write_manifest(outdir, "branch", values, prov,
                   {"Nx": grid.Nx, "Ny": grid.Ny, "Nz": grid.Nz},
                   _collect_outputs(outdir), time.time() - t0)
    ok, dev = is_fixed(prof.u, spec, p, grid)
    print(f"branch {spec.tag} (m0,n0,l0)=({spec.m0},{spec.n0},{spec.l0}) "
          f"r={values['r']} fixed={ok} max_dev={dev:.3e}")
    return EXIT_OK


def cmd_energy(args) -> int:
    state, p, grid = load_snapshot(args.snapshot)
    e = total_energy(state, p, grid, workers=_threads(args))
    payload = {"compression": e.compression, "frank": e.frank,
               "potential": e.potential, "magnetic": e.magnetic, "total": e.total}
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def cmd_walls(args) -> int:
    if args.pattern in (None, "square"):
        print("square: %.17g" % pattern_lower_bound(square_pattern()))
    if args.pattern in (None, "stripe"):
        print("stripe: %.17g" % pattern_lower_bound(stripe_pattern()))
    return EXIT_OK


def cmd_sim3d(args) -> int:
    defaults = dict(eps=0.3, tau=2.5, c=math.sqrt(5.0), g=0.25,
                    a=2.0 / 3.0, b=2.0 / 3.0, nx=64, ny=64, nz=63,
                    dt=1e-3, tend=30.0, eta=0.1, seed=0, mode="variational",
                    snapshot_stride=0, trace_stride=50, stop_tol=1e-8)
    values, prov = resolve_config(defaults, _load_config_file(args.config), {
        "eps": args.eps, "tau": args.tau, "c": args.c, "g": args.g,
        "a": args.a, "b": args.b, "nx": args.nx, "ny": args.ny, "nz": args.nz,
        "dt": args.dt, "tend": args.tend, "eta": args.eta, "seed": args.seed,
        "mode": args.mode, "snapshot_stride": args.snapshot_stride,
        "trace_stride": args.trace_stride, "stop_tol": args.stop_tol,
    })
    if values["mode"] not in ("variational", "paper"):
        raise UsageError("--mode must be 'variational' or 'paper'")
    for k in ("eps", "c", "g", "a", "b", "dt", "tend"):
        _positive(k, values[k])
    p = Parameters(eps=values["eps"], tau=values["tau"], c=values["c"],
                   g=values["g"], a=values["a"], b=values["b"])
    grid = Grid3D.from_parameters(p, values["nx"], values["ny"], values["nz"])
    cfg = SolverConfig3D(dt=values["dt"], t_end=values["tend"],
                         rhs_mode=values["mode"],
                         snapshot_stride=values["snapshot_stride"],
                         trace_stride=values["trace_stride"],
                         stop_tol=values["stop_tol"], workers=_threads(args))
    state0 = perturbed_state(p, grid, values["eta"], values["seed"])
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    final, trace = Solver3D(p, grid, cfg).run(state0, outdir=outdir)
    save_snapshot(outdir / "final.bin", final, p, grid)
    export_slices(outdir, final, grid)
    write_manifest(outdir, "sim3d", values, prov,
                   {"Nx": grid.Nx, "Ny": grid.Ny, "Nz": grid.Nz},
                   _collect_outputs(outdir), time.time() - t0)
    print(f"sim3d: t_final={trace.t[-1]:.6g} E={trace.energy[-1].total:.9g} "
          f"amp={trace.amplitude[-1]:.6g} mode={trace.mode[-1]}")
    return EXIT_OK


def cmd_sim2d(args) -> int:
    defaults = dict(eps=0.01, delta=1.5, n=256, dt=2e-4, tend=40.0,
                    eta=0.1, seed=0, snapshot_stride=0, trace_stride=200,
                    stop_tol=2e-7, exact_phase=False)
    values, prov = resolve_config(defaults, _load_config_file(args.config), {
        "eps": args.eps, "delta": args.delta, "n": args.n, "dt": args.dt,
        "tend": args.tend, "eta": args.eta, "seed": args.seed,
        "snapshot_stride": args.snapshot_stride,
        "trace_stride": args.trace_stride, "stop_tol": args.stop_tol,
        "exact_phase": True if args.exact_phase else None,
    })
    for k in ("eps", "dt", "tend"):
        _positive(k, values[k])
    if not 1.0 < values["delta"] < 2.0:
        raise UsageError(f"--delta requires 1 < delta < 2 (got {values['delta']})")
    p = Parameters(eps=values["eps"], delta=values["delta"])
    cfg = SolverConfig2D(dt=values["dt"], t_end=values["tend"],
                         snapshot_stride=values["snapshot_stride"],
                         trace_stride=values["trace_stride"],
                         stop_tol=values["stop_tol"],
                         exact_phase=values["exact_phase"],
                         workers=_threads(args))
    state0 = perturbed_state2d(p, values["n"], values["eta"], values["seed"])
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    final, trace = Solver2D(p, values["n"], cfg).run(state0, outdir=outdir)
    from .core import save_snapshot2d
    save_snapshot2d(outdir / "final.bin", final, p)
    write_manifest(outdir, "sim2d", values, prov, {"N": values["n"]},
                   _collect_outputs(outdir), time.time() - t0)
    print(f"sim2d: t_final={trace.t[-1]:.6g} E={trace.energy[-1].total:.9g} "
          f"mass=({trace.mass1[-1]:.3e},{trace.mass2[-1]:.3e})")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    workers = _threads(args)
    if args.target == "walls":
        report = reproduce_walls()
    elif args.target == "spectrum-table":
        report = reproduce_spectrum_table(outdir=args.out_dir)
    elif args.target == "onset":
        report = reproduce_onset(outdir=args.out_dir, workers=workers)
    elif args.target == "table1":
        report = reproduce_table1(outdir=args.out_dir, workers=workers)
    else:
        raise UsageError(f"unknown reproduce target {args.target!r}")
    print(json.dumps(report, indent=2, sort_keys=True, default=str))
    print(f"reproduce {args.target}: {'PASS' if report['pass'] else 'FAIL'}")
    return EXIT_OK if report["pass"] else EXIT_MISMATCH


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="undulate",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--config", help="JSON config file (flat keys)")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out-dir", required=out_required)

    sp = sub.add_parser("spectrum", help="critical-field table and tau_c")
    common(sp)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--mmax", type=int)
    sp.add_argument("--nmax", type=int)
    sp.add_argument("--lmax", type=int)
    sp.add_argument("--no-axial", action="store_true")
    sp.add_argument("--tol", type=float)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("branch", help="local bifurcation branch snapshot")
    common(sp, out_required=True)
    sp.add_argument("--group", choices=sorted(GROUP_TAGS))
    sp.add_argument("--m0", type=int)
    sp.add_argument("--n0", type=int)
    sp.add_argument("--l0", type=int)
    sp.add_argument("--r", type=float)
    sp.add_argument("--lam", type=float)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--nx", type=int)
    sp.add_argument("--ny", type=int)
    sp.add_argument("--nz", type=int)
    sp.set_defaults(func=cmd_branch)

    sp = sub.add_parser("energy", help="energy breakdown of a snapshot")
    common(sp)
    sp.add_argument("snapshot")
    sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("walls", help="Gamma-limit wall-energy lower bounds")
    common(sp)
    sp.add_argument("--pattern", choices=("square", "stripe"))
    sp.set_defaults(func=cmd_walls)

    sp = sub.add_parser("sim3d", help="3D gradient-flow simulation")
    common(sp, out_required=True)
    for name, typ in (("eps", float), ("tau", float), ("c", float), ("g", float),
                      ("a", float), ("b", float), ("nx", int), ("ny", int),
                      ("nz", int), ("dt", float), ("tend", float), ("eta", float),
                      ("seed", int), ("snapshot-stride", int),
                      ("trace-stride", int), ("stop-tol", float)):
        sp.add_argument(f"--{name}", type=typ, dest=name.replace("-", "_"))
    sp.add_argument("--mode", choices=("variational", "paper"))
    sp.set_defaults(func=cmd_sim3d)

    sp = sub.add_parser("sim2d", help="planar gradient-flow simulation")
    common(sp, out_required=True)
    for name, typ in (("eps", float), ("delta", float), ("n", int), ("dt", float),
                      ("tend", float), ("eta", float), ("seed", int),
                      ("snapshot-stride", int), ("trace-stride", int),
                      ("stop-tol", float)):
        sp.add_argument(f"--{name}", type=typ, dest=name.replace("-", "_"))
    sp.add_argument("--exact-phase", action="store_true")
    sp.set_defaults(func=cmd_sim2d)

    sp = sub.add_parser("reproduce", help="acceptance-scale experiments")
    common(sp)
    sp.add_argument("target", choices=("spectrum-table", "table1", "onset", "walls"))
    sp.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (UsageError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DefectError, EnergyIncreaseError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
