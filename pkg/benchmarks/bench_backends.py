"""Compare the numba and numpy kernel backends on full model runs.

    python3 benchmarks/bench_backends.py [--runs 20] [--p-E 1e-4]

Reports the median wall time per run for each backend (after one warm-up run
that also triggers numba compilation) and checks that both backends produce
the same indicator series.
"""

import argparse
import statistics
import time

import numpy as np

from firmcluster import ModelParams, run
from firmcluster._accel import HAS_NUMBA, use_backend


def time_backend(name, params, runs):
    with use_backend(name):
        run(params)  # warm-up / JIT
        times = []
        for i in range(runs):
            p = params.replace(seed=params.seed + i)
            t0 = time.perf_counter()
            run(p)
            times.append(time.perf_counter() - t0)
        series = run(params).series
    return times, series


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=20)
    parser.add_argument("--p-E", type=float, default=1e-4, dest="p_e")
    parser.add_argument("--d-E", type=float, default=100.0, dest="d_e")
    parser.add_argument("--t-f", type=int, default=100, dest="t_f")
    args = parser.parse_args()

    params = ModelParams(interaction_prob=args.p_e, distance_decay=args.d_e, t_final=args.t_f)
    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    results = {}
    for name in backends:
        times, series = time_backend(name, params, args.runs)
        results[name] = (statistics.median(times), min(times), series)
        print(f"{name:6s} median {1e3 * results[name][0]:8.2f} ms   min {1e3 * results[name][1]:8.2f} ms")
    if "numba" in results:
        speedup = results["numpy"][0] / results["numba"][0]
        same = np.allclose(results["numpy"][2], results["numba"][2], rtol=1e-9, atol=1e-9)
        print(f"speed-up numba/numpy: {speedup:.2f}x   identical series: {same}")


if __name__ == "__main__":
    main()
