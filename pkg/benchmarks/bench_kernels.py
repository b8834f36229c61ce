"""Compare the numba kernels against the numpy fallback on a Green-function grid.

    python3 benchmarks/bench_kernels.py [--res 256] [--repeat 3]

Prints one JSON line per backend and checks that the outputs agree.
"""
import argparse
import json
import time

import numpy as np

from henon_lab import kernels
from henon_lab.automorphism import reversible_henon
from henon_lab.green import green_system, grid_points
from henon_lab.polyalg import UnivarPoly


def run(gs, pts, use_jit, tol):
    side = gs.plus_side
    qx, qy = gs.to_normal(pts)
    return kernels.green_batch(side.arrays, side.maxe, side.esc, side.lead, side.radius,
                               side.s_rest, side.k_up, gs.d, qx, qy, gs.max_iter, tol,
                               use_jit=use_jit)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--res", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--tol", type=float, default=1e-10)
    args = ap.parse_args()

    gs = green_system(reversible_henon(UnivarPoly([0, 0, 1])))
    pts, _ = grid_points((-3.0, 3.0, -3.0, 3.0), args.res)
    results = {}
    for name, use_jit in (("numba", True), ("numpy", False)):
        run(gs, pts[:16], use_jit, args.tol)  # compile / warm up
        times = []
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            out = run(gs, pts, use_jit, args.tol)
            times.append(time.perf_counter() - t0)
        results[name] = out
        print(json.dumps({"backend": name, "points": len(pts), "best_s": min(times),
                          "threads": kernels.configure_threads() if use_jit else 1}))
    diff = float(np.max(np.abs(results["numba"][0] - results["numpy"][0])))
    same_status = bool(np.array_equal(results["numba"][3], results["numpy"][3]))
    print(json.dumps({"max_value_difference": diff, "identical_status": same_status}))


if __name__ == "__main__":
    main()
