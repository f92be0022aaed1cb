"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--points 20000] [--modes 64] [--horizon 20] [--repeat 3]

Times the Kummer power series on random arguments and one sine-basis
propagation with the oscillating wall and linear drive, and checks the two backends agree.
"""

import argparse
import time

import numpy as np

from qbox import _backend, _fallback
from qbox.galerkin import GalerkinState, propagate
from qbox.potentials import Potential
from qbox.walls import WallLaw


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_kummer(points, repeat):
    rng = np.random.default_rng(0)
    a = rng.uniform(-3, 3, points) + 1j * rng.uniform(-20, 20, points)
    b = np.full(points, 1.5 + 0j)
    z = 1j * rng.uniform(0, 2, points)
    tc, (vc, _, _) = best_of(lambda: _backend.kummer_series(a, b, z), repeat)
    tp, (vp, _, _) = best_of(lambda: _fallback.kummer_series(a, b, z), repeat)
    diff = np.max(np.abs(np.asarray(vc) - np.asarray(vp)) / np.maximum(1, np.abs(vp)))
    return tc, tp, diff


def bench_propagation(modes, horizon, repeat):
    law = WallLaw.oscillating(10.0, 3.0, 0.5, horizon=horizon)
    s = GalerkinState.basis_state(modes, law, Potential.linear_drive(0.1, 0.05))
    tc, rc = best_of(lambda: propagate(s, horizon, 0.05, backend="compiled"), repeat)
    tp, rp = best_of(lambda: propagate(s, horizon, 0.05, backend="python"), repeat)
    diff = np.max(np.abs(rc.coefficients - rp.coefficients))
    return tc, tp, diff, rc.stats["accepted"]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=20000, help="Kummer evaluations")
    p.add_argument("--modes", type=int, default=64, help="sine-basis size")
    p.add_argument("--horizon", type=float, default=20.0, help="propagation time")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if _backend.BACKEND != "compiled":
        raise SystemExit("compiled core not built; run `pip install -e . --no-build-isolation` first")

    tc, tp, diff = bench_kummer(args.points, args.repeat)
    print(f"kummer series, {args.points} points: compiled {tc * 1e3:8.2f} ms  "
          f"python {tp * 1e3:8.2f} ms  speedup {tp / tc:6.1f}x  max rel diff {diff:.1e}")
    tc, tp, diff, steps = bench_propagation(args.modes, args.horizon, args.repeat)
    print(f"DOPRI5, N={args.modes}, T={args.horizon:g} ({steps} steps): compiled {tc:7.3f} s  "
          f"python {tp:7.3f} s  speedup {tp / tc:6.1f}x  max |dC| {diff:.1e}")


if __name__ == "__main__":
    main()
