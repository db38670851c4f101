"""Command-line entry point: configured runs with bit-exact artifacts.

Exit codes: 0 success, 2 ConfigError, 3 DepthPositivityLost, 4 DiffeoLost,
5 HorizonExceeded, 6 NotPositiveDefinite, 7 NonMonotoneMap, 8 GridMismatch.
On solver failure the snapshot rows written so far stay on disk, followed
by a FAILED sentinel line naming the error.
"""

import argparse
import os
import sys

import numpy as np

from .config import build_run, parse_config
from .errors import ConfigError, GnflowError, exit_code_for
from .eulerian import (EulerianState, StepControl, energy_diagnostic,
                       mass_excess, run_eulerian)
from .experiments import _edge_band_guard, twin_run
from .grid import Field, Grid, deriv, sobolev_norm
from .lagrangian import LagrangianState, from_eulerian, run_lagrangian, to_eulerian
from .output import (SnapshotRecord, SnapshotWriter, output_lock,
                     write_fields, write_report)
from .scenarios import SCENARIO_NAMES, make_initial

SWL = 1.0   # still-water level of all shipped setups


def cadence_ticks(T: float, cadence: float) -> tuple:
    """Observation times k*cadence with the last tick landing exactly on T."""
    ticks = []
    k = 1
    while k * cadence < T - 1e-9 * max(T, 1.0):
        ticks.append(k * cadence)
        k += 1
    ticks.append(float(T))
    return tuple(ticks)


def _eulerian_record(state, bathy, grav, sigma):
    return SnapshotRecord(
        t=state.t,
        mass=mass_excess(state, SWL),
        energy=energy_diagnostic(state, bathy, grav, SWL),
        norm_h=sobolev_norm(Field(state.grid, state.h.values - SWL), sigma),
        norm_u=sobolev_norm(state.u, sigma + 1.0))


def _lagrangian_record(state, h0, bathy, grav, sigma):
    # raw phi_x here: the folded probe's t=0 row must be writable even
    # though the monotone accessor would (rightly) refuse the state
    g = state.grid
    phix = 1.0 + deriv(state.disp).values
    depth = h0.h0.values / phix
    eta = depth + bathy.xi(state.phi()) - SWL
    dens = 0.5 * depth * state.vel.values ** 2 + 0.5 * grav * eta ** 2
    return SnapshotRecord(
        t=state.t,
        mass=float(g.dx * np.sum(h0.h0.values - SWL * phix)),
        energy=float(g.dx * np.sum(dens * phix)),
        norm_h=sobolev_norm(Field(g, depth - SWL), sigma),
        norm_u=sobolev_norm(state.vel, sigma + 1.0),
        min_phi_x=float(np.min(phix)))


def _emit(quiet, rec):
    if not quiet:
        extra = "" if rec.min_phi_x is None else \
            f"  min_phi_x={rec.min_phi_x:.6g}"
        print(f"t={rec.t:<10.6g} mass={rec.mass:+.6e} "
              f"energy={rec.energy:.6e}{extra}")


def _run_eulerian_mode(scn, cfg, outdir, quiet):
    state0 = EulerianState(0.0, scn.h0, scn.u0)
    writer = SnapshotWriter(os.path.join(outdir, "snapshots.csv"))
    try:
        rec = _eulerian_record(state0, scn.bathy, scn.grav, cfg.sigma)
        writer.add(rec)
        write_fields(outdir, 0.0, cfg.n, cfg.L,
                     (state0.h.values, state0.u.values))
        _emit(quiet, rec)

        def observe(s):
            r = _eulerian_record(s, scn.bathy, scn.grav, cfg.sigma)
            writer.add(r)
            write_fields(outdir, s.t, cfg.n, cfg.L,
                         (s.h.values, s.u.values))
            _emit(quiet, r)
            if cfg.guard_band:
                _edge_band_guard(s, scn.bathy, SWL)

        run_eulerian(state0, scn.bathy, scn.grav, scn.T,
                     StepControl(cfl=scn.cfl),
                     observe_at=cadence_ticks(scn.T, scn.cadence),
                     observer=observe)
    except GnflowError as exc:
        writer.fail(exc)
        raise
    finally:
        writer.close()


def _run_lagrangian_mode(scn, cfg, outdir, quiet):
    lag0, hcap = from_eulerian(EulerianState(0.0, scn.h0, scn.u0))
    if scn.initial.disp0 is not None:
        lag0 = LagrangianState(0.0, scn.initial.disp0, lag0.vel)
    writer = SnapshotWriter(os.path.join(outdir, "snapshots.csv"),
                            lagrangian=True)
    try:
        rec = _lagrangian_record(lag0, hcap, scn.bathy, scn.grav, cfg.sigma)
        writer.add(rec)
        write_fields(outdir, 0.0, cfg.n, cfg.L,
                     (lag0.disp.values, lag0.vel.values))
        _emit(quiet, rec)

        def observe(s):
            r = _lagrangian_record(s, hcap, scn.bathy, scn.grav, cfg.sigma)
            writer.add(r)
            write_fields(outdir, s.t, cfg.n, cfg.L,
                         (s.disp.values, s.vel.values))
            _emit(quiet, r)
            if cfg.guard_band:
                _edge_band_guard(to_eulerian(s, hcap), scn.bathy, SWL)

        run_lagrangian(lag0, hcap, scn.bathy, scn.grav, scn.T,
                       StepControl(cfl=scn.cfl),
                       observe_at=cadence_ticks(scn.T, scn.cadence),
                       observer=observe)
    except GnflowError as exc:
        writer.fail(exc)
        raise
    finally:
        writer.close()


def _run_twin_mode(scn, cfg, outdir, quiet):
    """Gap report over a small resolution ladder ending at the configured
    n, then a normal Eulerian run at that n for snapshots and fields."""
    rungs = tuple(m for m in (cfg.n // 4, cfg.n // 2, cfg.n) if m >= 32)

    def h0_fn(x):
        init = make_initial(cfg.init_family, cfg.init_params,
                            Grid(cfg.L, len(x)), scn.bathy, grav=cfg.grav)
        return init.h0.values

    def u0_fn(x):
        init = make_initial(cfg.init_family, cfg.init_params,
                            Grid(cfg.L, len(x)), scn.bathy, grav=cfg.grav)
        return init.u0.values

    rep = twin_run(h0_fn, u0_fn, scn.bathy, scn.grav, scn.T, rungs,
                   L=cfg.L, cfl=scn.cfl, guard=cfg.guard_band,
                   require_convergent=False)
    columns = (["n"] + [f"gap_t{t:g}" for t in rep.times]
               + ["max_gap", "order_vs_prev"])
    rows = []
    for i, n in enumerate(rep.resolutions):
        order = "" if i == 0 else rep.pair_orders[i - 1]
        rows.append((n, *rep.per_time_gaps[i], rep.gaps[i], order))
    write_report(os.path.join(outdir, "report.csv"), columns, rows)
    if not quiet:
        print(f"twin gaps: " + "  ".join(
            f"n={n}:{g:.3e}" for n, g in zip(rep.resolutions, rep.gaps)))
    _run_eulerian_mode(scn, cfg, outdir, quiet)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gnflow",
        description="Dispersive shallow-water runs over nonflat bathymetry "
                    "(nonlocal and flow-map formulations).")
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--out", default="./out",
                        help="output directory (default ./out)")
    parser.add_argument("--formulation",
                        choices=("eulerian", "lagrangian", "twin"),
                        help="override run.formulation")
    parser.add_argument("--resolution", type=int, help="override grid.n")
    parser.add_argument("--seed", type=int, help="override run.seed")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress output")
    parser.add_argument("--list-scenarios", action="store_true",
                        help="print built-in scenario names and exit")
    args = parser.parse_args(argv)

    if args.list_scenarios:
        for name in SCENARIO_NAMES:
            print(name)
        return 0

    try:
        if not args.config:
            raise ConfigError(["--config is required (or --list-scenarios)"])
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError([f"cannot read config file: {exc}"]) from None
        overrides = {}
        if args.formulation:
            overrides["run.formulation"] = args.formulation
        if args.resolution is not None:
            overrides["grid.n"] = str(args.resolution)
        if args.seed is not None:
            overrides["run.seed"] = str(args.seed)
        cfg = parse_config(text, overrides)
        scn = build_run(cfg)

        os.makedirs(args.out, exist_ok=True)
        with output_lock(args.out):
            if not args.quiet:
                print(f"scenario={scn.name} n={cfg.n} L={cfg.L:g} "
                      f"T={scn.T:g} formulation={cfg.formulation} "
                      f"seed={cfg.seed}")
            if cfg.formulation == "eulerian":
                _run_eulerian_mode(scn, cfg, args.out, args.quiet)
            elif cfg.formulation == "lagrangian":
                _run_lagrangian_mode(scn, cfg, args.out, args.quiet)
            else:
                _run_twin_mode(scn, cfg, args.out, args.quiet)
        if not args.quiet:
            print(f"wrote {args.out}")
        return 0
    except GnflowError as exc:
        print(f"gnflow: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
