"""Compare the numpy and compiled round kernels.

Usage: ``python benchmarks/bench_kernels.py [--rounds N] [--repeat R]``

Each kernel runs on both backends; the outputs are checked for equality
before timings are reported, as rounds per second (best of R).
"""
import argparse
import time

import numpy as np

from nsbox import kernels
from nsbox.kernels import (
    BITS_EXAM_OWN,
    BITS_PRBOX,
    DIR_PRBOX_SINGLET,
    DIR_LOCAL,
    DIR_TONER_BACON,
    LABEL_LAMBDA1,
    stream_key,
)

ADIR = (0.0, 0.0, 1.0)
BDIR = (0.6, 0.0, 0.8)

CASES = {
    "sphere": lambda k, key, n: k.sphere(key, 0, n, LABEL_LAMBDA1),
    "pr-box": lambda k, key, n: k.run_bits(BITS_PRBOX, key, 0, n),
    "exam1-own": lambda k, key, n: k.run_bits(BITS_EXAM_OWN, key, 0, n),
    "toner-bacon": lambda k, key, n: k.run_dirs(DIR_TONER_BACON, key, 0, n, ADIR, BDIR),
    "prbox-singlet": lambda k, key, n: k.run_dirs(DIR_PRBOX_SINGLET, key, 0, n, ADIR, BDIR),
    "local-lhv": lambda k, key, n: k.run_dirs(DIR_LOCAL, key, 0, n, ADIR, BDIR),
}


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(x, y):
    if isinstance(x, tuple):
        return all(np.array_equal(a, b) for a, b in zip(x, y))
    return np.array_equal(x, y)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rounds", type=int, default=10**6)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the numpy backend only")
    key = stream_key(12345, 0)
    n = args.rounds
    print(f"{'kernel':<15}" + "".join(f"{b + ' rounds/s':>20}" for b in backends) + f"{'speedup':>10}  identical")
    for name, case in CASES.items():
        times, outs = [], []
        for b in backends:
            t, out = best_time(lambda: case(kernels.get_backend(b), key, n), args.repeat)
            times.append(t)
            outs.append(out)
        row = f"{name:<15}" + "".join(f"{n / t:>20,.0f}" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x  {same(outs[0], outs[1])}"
        print(row)


if __name__ == "__main__":
    main()
