#!/usr/bin/env python3
"""Benchmark the numba kernels against the vectorized numpy fallback.

The backend is fixed at import time, so this script re-executes itself in a
subprocess per backend (MATMART_BACKEND=numba / numpy), runs identical
seeded workloads, checks that both backends report matching statistics, and
prints a throughput table.

Usage:  python benchmarks/bench_backends.py [--trials-scale S]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _timed(fn, repeats=1):
    fn()  # warmup (JIT compile / cache touch)
    t0 = time.perf_counter()
    for _ in range(repeats):
        out = fn()
    return (time.perf_counter() - t0) / repeats, out


def _workloads(scale):
    from matmart import _kernels
    from matmart.bounds import BernsteinParams
    from matmart.fixtures import gaussian_chain, state_scaled_chain
    from matmart.supermartingale import s_final_samples, stopped_samples
    from matmart.verify import mc_tail_experiment

    rs = np.random.default_rng(0)
    stack = rs.normal(size=(int(100_000 * scale), 4, 4))
    stack = (stack + stack.transpose(0, 2, 1)) / 2.0

    g4 = gaussian_chain(d=4, horizon=25)
    s4 = state_scaled_chain(d=4, horizon=25)
    g3 = gaussian_chain(d=3, horizon=20)
    s2 = state_scaled_chain(d=2, horizon=20)
    p_g4 = BernsteinParams(x=0.6, y=1.0, c=1.0, n=25, d=4)
    p_s4 = BernsteinParams(x=0.6, y=1.0, c=0.9, n=25, d=4)

    single = rs.normal(size=(6, 6))
    single = (single + single.T) / 2.0

    return [
        ("batched eigvalsh, 1e5 x 4x4",
         lambda: float(_kernels.eigvalsh_stack(stack)[:, -1].sum())),
        ("per-matrix jacobi eigh, 2e4 x 6x6",
         lambda: float(sum(_kernels.jacobi_eigh(single)[0][-1]
                           for _ in range(int(20_000 * scale))))),
        ("tail experiment, gaussian d=4 n=25, 5e4 paths",
         lambda: mc_tail_experiment(g4, p_g4, int(50_000 * scale), seed=7).p_hat),
        ("tail experiment, state_scaled d=4 n=25, 2e4 paths",
         lambda: mc_tail_experiment(s4, p_s4, int(20_000 * scale), seed=7).p_hat),
        ("stopping-time scan, gaussian d=3 N=20, 5e4 paths",
         lambda: float(stopped_samples(g3, 0.5, 1.0, 0.5, 1.0,
                                       int(50_000 * scale), seed=7).s_stop.mean())),
        ("terminal S_N, state_scaled d=2 N=20, 5e4 paths",
         lambda: float(s_final_samples(s2, 0.5, 0.9, int(50_000 * scale),
                                       seed=7).mean())),
    ]


def run_worker(scale):
    from matmart._backend import active_backend

    results = []
    for name, fn in _workloads(scale):
        seconds, value = _timed(fn)
        results.append({"name": name, "seconds": seconds, "value": value})
    print(json.dumps({"backend": active_backend(), "results": results}))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    parser.add_argument("--trials-scale", type=float, default=1.0,
                        help="scale factor on workload sizes (default 1.0)")
    args = parser.parse_args()

    if args.worker:
        run_worker(args.trials_scale)
        return

    reports = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, MATMART_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker",
             "--trials-scale", str(args.trials_scale)],
            env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            raise SystemExit(f"{backend} worker failed")
        reports[backend] = json.loads(proc.stdout.strip().splitlines()[-1])

    print(f"{'workload':<52} {'numba':>9} {'numpy':>9} {'speedup':>8}  agree")
    print("-" * 90)
    for nb, npy in zip(reports["numba"]["results"], reports["numpy"]["results"]):
        assert nb["name"] == npy["name"]
        # identical streams: statistics agree to roundoff across backends
        close = np.isclose(nb["value"], npy["value"], rtol=1e-9, atol=1e-9)
        ratio = npy["seconds"] / nb["seconds"]
        print(f"{nb['name']:<52} {nb['seconds']:>8.3f}s {npy['seconds']:>8.3f}s "
              f"{ratio:>7.1f}x  {'yes' if close else 'NO'}")
    if not all(np.isclose(nb["value"], npy["value"], rtol=1e-9, atol=1e-9)
               for nb, npy in zip(reports["numba"]["results"],
                                  reports["numpy"]["results"])):
        raise SystemExit("backend results diverged; see table")


if __name__ == "__main__":
    main()
