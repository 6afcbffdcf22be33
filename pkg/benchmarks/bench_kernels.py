"""Compare the numba kernels against the pure-numpy fallback.

Runs every hot kernel on both implementations and prints a timing table.
Numba functions are called once before timing so compilation never lands
in a measurement.

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import math
import time

import numpy as np

from evhmm._backend import get_kernels


def timed(fn, loops, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        best = min(best, (time.perf_counter() - t0) / loops)
    return best * 1e3


def random_logs(rng, n, t):
    def rows(*shape):
        x = rng.uniform(0.05, 1.0, size=shape)
        return np.log(x / x.sum(axis=-1, keepdims=True))

    return {
        "log_pi": rows(n),
        "log_a": rows(n, n),
        "log_b": rows(t, n),
        "log_a2": rows(n, n, n),
        "log_b2": rows(t, n, n),
    }


def build_cases(rng):
    n_lat = 14
    size = 1 << n_lat
    dense = rng.dirichlet(np.ones(size))
    popcount = np.array([bin(i).count("1") for i in range(size)],
                        dtype=np.int64)
    m = random_logs(rng, n=25, t=300)
    m2 = random_logs(rng, n=10, t=120)
    return [
        (f"zeta_superset (2^{n_lat} subsets)", 50,
         lambda k: k["zeta_superset"](dense.copy(), n_lat)),
        (f"mobius_superset (2^{n_lat} subsets)", 50,
         lambda k: k["mobius_superset"](dense.copy(), n_lat)),
        (f"zeta_subset (2^{n_lat} subsets)", 50,
         lambda k: k["zeta_subset"](dense.copy(), n_lat)),
        (f"mobius_subset (2^{n_lat} subsets)", 50,
         lambda k: k["mobius_subset"](dense.copy(), n_lat)),
        (f"pignistic_num (2^{n_lat} subsets)", 50,
         lambda k: k["pignistic_num"](dense, popcount, n_lat)),
        ("forward1 (25 states, 300 steps)", 20,
         lambda k: k["forward1"](m["log_pi"], m["log_a"], m["log_b"])),
        ("viterbi1 (25 states, 300 steps)", 20,
         lambda k: k["viterbi1"](m["log_pi"], m["log_a"], m["log_b"])),
        ("forward2 (10 states, 120 steps)", 10,
         lambda k: k["forward2"](m2["log_pi"], m2["log_a"], m2["log_b"],
                                 m2["log_a2"], m2["log_b2"])),
        ("viterbi2 (10 states, 120 steps)", 10,
         lambda k: k["viterbi2"](m2["log_pi"], m2["log_a"], m2["log_b"],
                                 m2["log_a2"], m2["log_b2"])),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats per kernel; the best is reported")
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    cases = build_cases(rng)
    numpy_k = get_kernels("numpy")
    try:
        numba_k = get_kernels("numba")
    except ImportError:
        numba_k = None
        print("numba not importable; timing the numpy fallback only\n")

    width = max(len(name) for name, _, _ in cases)
    header = f"{'kernel':<{width}}  {'numpy ms':>10}"
    if numba_k is not None:
        header += f"  {'numba ms':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, loops, call in cases:
        call(numpy_k)
        t_np = timed(lambda: call(numpy_k), loops, args.repeats)
        line = f"{name:<{width}}  {t_np:>10.3f}"
        if numba_k is not None:
            call(numba_k)  # compile before timing
            t_nb = timed(lambda: call(numba_k), loops, args.repeats)
            line += f"  {t_nb:>10.3f}  {t_np / t_nb:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
