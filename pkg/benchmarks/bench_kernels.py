"""Compare the numba kernels against the numpy reference path.

    python benchmarks/bench_kernels.py --grid 12 --repeat 5

Inputs are a coframe-perturbed flat geometry sampled on a periodic grid. Each
kernel is timed on both paths after one warm-up call (which also triggers
numba compilation), and the maximum difference between the two outputs is
reported next to the best-of-N timings. The last row times the full flow
objective, which is what the descent loop evaluates.
"""
import argparse
import json
import sys
import time

import numpy as np

from sigma_forge import _accel, action, kernels
from sigma_forge.geometries import coframe_perturbed_flat
from sigma_forge.grid import ChartGrid, fd_partials
from sigma_forge.su2_structure import urbantke_metric


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _cases(n):
    geom = coframe_perturbed_flat(seed=0, amp=0.05)
    grid = ChartGrid.cube(0.0, 2 * np.pi, n, True)
    x = grid.coords()
    s = geom.sigma_at(x)
    metric, _ = urbantke_metric(s)
    ds = fd_partials(s, grid)
    a = kernels.torsion_explicit(s, metric.g, metric.g_inv, metric.sqrt_det, ds)
    da = fd_partials(a, grid)
    dg = fd_partials(metric.g, grid)
    gamma = kernels.christoffel(metric.g_inv, dg)
    dgamma = fd_partials(gamma, grid)
    e = geom.coframe_at(x)
    inv = np.linalg.inv(e)
    de = fd_partials(e, grid)
    f = kernels.curvature_f(a, da)
    return grid, geom, {
        "torsion_explicit": lambda: kernels.torsion_explicit(s, metric.g, metric.g_inv, metric.sqrt_det, ds),
        "curvature_f": lambda: kernels.curvature_f(a, da),
        "christoffel": lambda: kernels.christoffel(metric.g_inv, dg),
        "riemann": lambda: kernels.riemann(gamma, dgamma),
        "coframe_torsion": lambda: kernels.coframe_torsion(e, inv, de),
        "asd_density": lambda: kernels.asd_density(inv, np.linalg.det(e), f),
    }


def run(n, repeat):
    grid, geom, cases = _cases(n)
    cases["einstein_objective"] = lambda: action.einstein_objective(geom.trig, grid)
    rows = []
    for name, fn in cases.items():
        with _accel.use_numba(False):
            ref = fn()
            t_np = _best(fn, repeat)
        with _accel.use_numba(True):
            out = fn()
            t_nb = _best(fn, repeat)
        diff = float(np.max(np.abs(np.asarray(out) - np.asarray(ref))))
        rows.append({"kernel": name, "numpy_s": t_np, "numba_s": t_nb, "speedup": t_np / t_nb, "max_diff": diff})
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--grid", type=int, default=12, help="points per axis")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--threads", type=int, help="numba worker threads")
    p.add_argument("--json", action="store_true", help="print rows as JSON")
    args = p.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1
    threads = _accel.set_threads(args.threads or _accel.default_threads() or 1)
    rows = run(args.grid, args.repeat)
    if args.json:
        print(json.dumps({"grid": args.grid, "threads": threads, "rows": rows}, indent=2))
        return 0
    print(f"grid {args.grid}^4, {threads} thread(s), best of {args.repeat}")
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}{'max diff':>11}")
    for r in rows:
        print(f"{r['kernel']:<20}{1e3 * r['numpy_s']:>12.2f}{1e3 * r['numba_s']:>12.2f}"
              f"{r['speedup']:>9.2f}{r['max_diff']:>11.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
