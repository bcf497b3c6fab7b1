"""Benchmark the two propagation-kernel backends on representative
segment workloads.

The hot loop of every simulation is the per-step matrix exponential
product over one pulse segment; this script times the compiled backend
against the pure-numpy fallback for the active-subspace sizes that occur
in practice (3: phase pulse, 9: pair pulse) and a couple of step sizes.

Run:  python benchmarks/bench_kernels.py [--traj N] [--steps N]
"""

import argparse
import time

import numpy as np

from dfsim.kernels import _numpy_backend
from dfsim.kernels import propagate_segment as selected
from dfsim.kernels import backend_name

TWO_PI = 2.0 * np.pi


def pair_system():
    diag = np.array([0, -1.9e8, -3.8e8, -1.9e8, -3.8e8, -5.7e8, 0, -1.3e8,
                     -3.8e8])
    a = np.diag(diag).astype(complex)
    for i, j in [(0, 2), (1, 2), (3, 5), (4, 5), (6, 8), (7, 8)]:
        a[i, j] = 1.2e7
        a[j, i] = 1.2e7
    w = np.array([0, 1, 1.5, 1, 1.5, 3, 0, 1, 1.5])
    return a, w


def phase_system():
    a = np.array([[0, 0, 0], [0, 0, 1.6e7], [0, 1.6e7, -3.1e8]],
                 dtype=complex)
    return a, np.array([0.0, 1.0, 1.5])


def run(fn, a, w, eps, dts, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(a, w, eps, dts)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--traj", type=int, default=50)
    parser.add_argument("--steps", type=int, default=2000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    eps = rng.normal(scale=3e5, size=(args.traj, args.steps))
    n_ops = args.traj * args.steps

    print(f"selected backend: {backend_name()}")
    print(f"workload: {args.traj} trajectories x {args.steps} steps")
    print(f"{'system':<18}{'dt':>8}  {'compiled':>12}  {'numpy':>12}  "
          f"{'ratio':>7}")
    for name, (a, w) in (("phase pulse n=3", phase_system()),
                         ("pair pulse n=9", pair_system())):
        for dt in (1e-8, 5e-8):
            dts = np.full(args.steps, dt)
            t_sel = run(selected, a, w, eps, dts)
            t_np = run(_numpy_backend.propagate_segment, a, w, eps, dts)
            print(f"{name:<18}{dt:>8.0e}  "
                  f"{t_sel / n_ops * 1e6:>9.2f} us  "
                  f"{t_np / n_ops * 1e6:>9.2f} us  "
                  f"{t_np / t_sel:>6.2f}x")

    # agreement check on the last workload
    u_sel = selected(a, w, eps[:2, :200], np.full(200, 5e-8))
    u_np = _numpy_backend.propagate_segment(a, w, eps[:2, :200],
                                            np.full(200, 5e-8))
    print(f"max backend deviation: {np.abs(u_sel - u_np).max():.2e}")


if __name__ == "__main__":
    main()
