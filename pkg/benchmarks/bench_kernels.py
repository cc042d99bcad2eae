"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeats 20] [--seed 0]

Cases mirror the workloads of the package: the reduced basis pursuit LP solved
once per Monte Carlo sample, a LAD fit, and the row-subset enumeration of the
exact l0 oracle.
"""
import argparse
import time

import numpy as np

from sitl1 import _kernels


def bp_case(rng, n, r):
    # reduced problem of a detection instance: F has n - r rows, orthonormal
    q, _ = np.linalg.qr(rng.standard_normal((n, n - r)))
    f = q.T
    b = np.zeros(n - r)
    b[0] = 3.0
    return (np.hstack([f, -f]), np.zeros((n - r, 0)), b, np.ones(2 * n), 1e-9, 1e-9, 200)


def lad_case(rng, n, r):
    a = rng.standard_normal((n, r))
    y = a @ rng.standard_normal(r)
    y[rng.choice(n, n // 8, replace=False)] += 10.0
    eye = np.eye(n)
    return (np.hstack([eye, -eye]), a, y, np.ones(2 * n), 1e-9, 1e-9, 200)


def oracle_case(rng, n, r):
    a = rng.standard_normal((n, r))
    y = a @ rng.standard_normal(r)
    y[:2] += 5.0
    return (a, y, 1e-7 * max(1.0, float(np.abs(y).max())), 1e-10)


CASES = [
    ("bp n=64 r=8", "ipm", bp_case, (64, 8)),
    ("bp n=128 r=16", "ipm", bp_case, (128, 16)),
    ("lad n=64 r=8", "ipm", lad_case, (64, 8)),
    ("oracle n=16 r=4", "subset_l0_counts", oracle_case, (16, 4)),
    ("oracle n=24 r=3", "subset_l0_counts", oracle_case, (24, 3)),
]


def best_time(fn, args, repeats):
    fn(*args)  # warm up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = _kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the numpy fallback is available")
    print(f"{'case':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for label, kernel, make, dims in CASES:
        inputs = make(np.random.default_rng(args.seed), *dims)
        times = {b: best_time(getattr(_kernels.get_backend(b), kernel), inputs, args.repeats)
                 for b in backends}
        row = f"{label:<18}" + "".join(f"{times[b] * 1e3:>10.3f}ms" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
