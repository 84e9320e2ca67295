"""Compare the compiled and pure-Python round kernels.

    python3 benchmarks/bench_kernel.py [--rounds N] [--repeat R]

Both kernels run the same games; the traces are checked to be identical
before timings are reported.
"""
import argparse
import time

import numpy as np

from fictplay import PayoffMatrix, TieBreakRule, run
from fictplay._backend import available

CASES = [
    ("fp  I_3 exact", "fp", lambda: PayoffMatrix.identity(3)),
    ("fp  diag n=10 exact", "fp", lambda: PayoffMatrix.diagonal([0.5 + k / 8 for k in range(10)])),
    ("afp diag n=10 exact", "afp", lambda: PayoffMatrix.diagonal([0.5 + k / 8 for k in range(10)])),
    ("fp  gaussian 10x10 float", "fp",
     lambda: PayoffMatrix(np.random.default_rng(0).normal(size=(10, 10)).tolist())),
]


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    kernels = available()
    if "cython" not in kernels:
        print("compiled kernel not built; only the Python kernel is available")
    print(f"{'case':28s} " + " ".join(f"{k + ' [rounds/s]':>20s}" for k in kernels) + "   speedup")
    for label, kind, make in CASES:
        A = make()
        rule = TieBreakRule.identity(A.n)
        rates, traces = {}, {}
        for k in kernels:
            secs, tr = best_of(lambda: run(kind, A, rule, rounds=args.rounds, kernel=k), args.repeat)
            rates[k], traces[k] = args.rounds / secs, tr
        ref = traces[kernels[0]]
        for tr in traces.values():
            assert np.array_equal(tr.i, ref.i) and np.array_equal(tr.j, ref.j)
            assert np.array_equal(tr.psi_raw_all, ref.psi_raw_all)
        speed = f"{rates['cython'] / rates['python']:8.1f}x" if "cython" in rates else ""
        print(f"{label:28s} " + " ".join(f"{rates[k]:20.0f}" for k in kernels) + "  " + speed)


if __name__ == "__main__":
    main()
