"""Command-line scenario runner.

    qbox run CONFIG [--out-dir DIR] [--override key=value ...] [--sweep key=v1,v2,...]

Writes ``timeseries.csv`` (and ``spectrum.csv`` when ``spectrum=true``).
Exit codes: 0 success, 2 configuration error, 3 solver failure. Failures also
print one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, apply_overrides, parse_config
from .exact import ExactState
from .galerkin import GalerkinState, SolverError, Trajectory, propagate, sample_grid
from .observables import MIN_SAMPLES_PER_PERIOD, TimeSeries, hhg_spectrum, time_series
from .specfun import EigenvalueError
from .walls import HorizonError

log = logging.getLogger("qbox")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

TIMESERIES_HEADER = "t,L,norm,E_k,F,d"
SPECTRUM_HEADER = "harmonic_order,nu,intensity"


def _fmt(row):
    return ",".join("%.17g" % v for v in row)


def write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(_fmt(row) + "\n")


def _merge_grids(coarse, fine, tol):
    """Sorted union of two grids, snapping near-coincident points to ``coarse``."""
    allt = np.concatenate([coarse, fine])
    src = np.concatenate([np.zeros(coarse.size, bool), np.ones(fine.size, bool)])
    order = np.lexsort((src, allt))
    allt, src = allt[order], src[order]
    keep = np.ones(allt.size, bool)
    keep[1:] = np.diff(allt) > tol
    merged = allt[keep]
    return merged, np.searchsorted(merged, coarse - tol), np.searchsorted(merged, fine - tol)


def dipole_grid(cfg: RunConfig) -> np.ndarray:
    """Uniform grid on [0, T] fine enough for the spectrum's highest harmonic."""
    nu_max = cfg.max_harmonic * cfg.omega
    dt = 2 * math.pi / (nu_max * MIN_SAMPLES_PER_PERIOD)
    n = int(math.ceil(cfg.T / dt))
    return np.linspace(0.0, cfg.T, n + 1)


def simulate(cfg: RunConfig, backend: str | None = None):
    """Run one configuration; returns (TimeSeries, Spectrum or None, stats)."""
    law = cfg.wall_law()
    pot = cfg.potential_obj()
    times = sample_grid(0.0, cfg.T, cfg.sample_dt)
    if cfg.scenario == "exact":
        state = ExactState.from_law(law, cfg.mode_indices(), cfg.mode_amplitudes(), pot,
                                    horizon=cfg.T)
        return time_series(state, times), None, {}

    initial = GalerkinState.basis_state(cfg.N, law, pot, cfg.initial_mode)
    fine = None
    grid = times
    if cfg.spectrum:
        fine = dipole_grid(cfg)
        grid, i_coarse, i_fine = _merge_grids(times, fine, 1e-9 * cfg.T)
    traj = propagate(initial, cfg.T, times=grid, backend=backend)
    log.info("propagated %d samples: %s", len(grid), traj.stats)
    spec = None
    if fine is not None:
        full = time_series(traj)
        spec = hhg_spectrum(fine, full.d[i_fine], cfg.omega, cfg.T, cfg.max_harmonic,
                            cfg.resolution)
        sub = Trajectory(times, traj.coefficients[i_coarse], law, pot, traj.stats)
        series = time_series(sub)
    else:
        series = time_series(traj)
    return series, spec, traj.stats


def write_outputs(out: Path, series: TimeSeries, spec) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "timeseries.csv", TIMESERIES_HEADER, series.as_array())
    if spec is not None:
        rows = np.column_stack([spec.harmonic_orders, spec.frequencies, spec.intensities])
        write_csv(out / "spectrum.csv", SPECTRUM_HEADER, rows)


def _error(kind, exc, **extra):
    info = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    info.update(extra)
    return info


def run_config(cfg: RunConfig, out_dir, backend: str | None = None):
    """Simulate and write outputs; returns (exit code, error dict or None)."""
    try:
        series, spec, _ = simulate(cfg, backend)
    except ConfigError as exc:
        return EXIT_CONFIG, _error("config", exc, field=exc.field, line=exc.line)
    except (SolverError, EigenvalueError, HorizonError, ValueError) as exc:
        return EXIT_SOLVER, _error("solver", exc)
    write_outputs(Path(out_dir), series, spec)
    return EXIT_OK, None


def _resolve_out(flag, cfg):
    return flag or cfg.out_dir or os.environ.get("QBOX_OUT") or "."


def _sweep_worker(args):
    cfg, out, backend = args
    return run_config(cfg, out, backend)


def _load(path, overrides):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None) from None
    return apply_overrides(parse_config(text), overrides)


def cmd_run(args) -> int:
    try:
        cfg = _load(args.config, args.override)
        jobs = []
        base = Path(_resolve_out(args.out_dir, cfg))
        if args.sweep:
            key, _, vals = args.sweep.partition("=")
            values = [v.strip() for v in vals.split(",") if v.strip()]
            if not key or not values:
                raise ConfigError(f"--sweep must be key=v1,v2,..., got {args.sweep!r}")
            for v in values:
                jobs.append((apply_overrides(cfg, [f"{key}={v}"]), base / f"{key.strip()}={v}"))
        else:
            jobs.append((cfg, base))
    except ConfigError as exc:
        print(json.dumps(_error("config", exc, field=exc.field, line=exc.line)), file=sys.stderr)
        return EXIT_CONFIG

    if len(jobs) == 1:
        results = [run_config(jobs[0][0], jobs[0][1], args.backend)]
    else:
        workers = min(len(jobs), args.jobs or os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, [(c, o, args.backend) for c, o in jobs]))
    code = EXIT_OK
    for (_, out), (rc, err) in zip(jobs, results):
        if err is not None:
            err["out_dir"] = str(out)
            print(json.dumps(err), file=sys.stderr)
        code = max(code, rc)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qbox", description="Quantum particle in a box with a moving wall.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a key=value config file")
    r.add_argument("config", help="path to the config file")
    r.add_argument("--out-dir", default=None, help="output directory (default: $QBOX_OUT or .)")
    r.add_argument("--override", nargs="*", default=[], metavar="KEY=VALUE",
                   help="settings applied after the file is parsed")
    r.add_argument("--sweep", default=None, metavar="KEY=V1,V2,...",
                   help="run one job per value, each in its own subdirectory")
    r.add_argument("--jobs", type=int, default=None, help="parallel workers for --sweep")
    r.add_argument("--backend", choices=("compiled", "python"), default=None,
                   help="kernel implementation (default: compiled when built)")
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
