"""Compare the compiled and pure-Python iteration kernels.

    python3 benchmarks/bench_kernels.py --iters 2000 --repeat 3
"""

import argparse
import logging
import time

import numpy as np

from qotbga import golden_instance
from qotbga.kernels import available_backends
from qotbga.problem import random_instance
from qotbga.solver import SolverConfig, bga_solve


def time_backend(inst, backend, iters, repeat):
    cfg = SolverConfig(delta=1e-300, max_iters=iters, trace_every=iters)
    best, sol = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        sol = bga_solve(inst, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, sol


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iters", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    # every run stops at max_iters by design
    logging.getLogger("qotbga").setLevel(logging.ERROR)

    cases = [("golden 2x2", golden_instance())] + [
        (f"random {d1}x{d2}", random_instance(1, d1, d2)) for d1, d2 in [(2, 3), (3, 3)]
    ]
    backends = available_backends()
    print(f"{'instance':<12} " + " ".join(f"{b + ' us/iter':>16}" for b in backends) + f" {'speedup':>8} {'max |dG|':>10}")
    for name, inst in cases:
        runs = {b: time_backend(inst, b, args.iters, args.repeat) for b in backends}
        per_iter = {b: 1e6 * t / args.iters for b, (t, _) in runs.items()}
        cols = " ".join(f"{per_iter[b]:16.1f}" for b in backends)
        if len(backends) > 1:
            speedup = per_iter["python"] / per_iter["cython"]
            diff = np.max(np.abs(runs["python"][1].coupling - runs["cython"][1].coupling))
            print(f"{name:<12} {cols} {speedup:8.1f} {diff:10.1e}")
        else:
            print(f"{name:<12} {cols}")


if __name__ == "__main__":
    main()
