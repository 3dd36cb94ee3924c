"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--candidates N] [--repeat R]

Reports the best-of-R wall time per kernel and backend, and checks that
both backends return the same numbers.
"""
import argparse
import time

import numpy as np

from qadpa import _pykernels

try:
    from qadpa import _ckernels
except ImportError:
    _ckernels = None

ZS = 10.6 + 5.7j
FIT_ARGS = (ZS, 25.0, 50.0, ZS.conjugate(), 50.0, 120.0, 10.0, 30.0)


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--candidates", type=int, default=1_000_000)
    ap.add_argument("--samples", type=int, default=1 << 20)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = args.candidates
    params = np.column_stack([rng.uniform(15, 110, n), rng.uniform(5, 175, n),
                              rng.uniform(15, 110, n), rng.uniform(5, 175, n)])
    x = 3.0 * np.sin(np.linspace(0, 2 * np.pi * 64, args.samples, endpoint=False))
    gains, clips = np.array([1.5, 1.9, 1.2]), np.array([1.45, 3.0, 2.5])

    cases = {
        f"match_fitness ({n} candidates)": lambda m: m.match_fitness(params, *FIT_ARGS),
        f"clip_chain ({args.samples} samples x 3 stages)": lambda m: m.clip_chain(x, gains, clips),
    }
    backends = [("numpy", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    if _ckernels is None:
        print("compiled kernels not built; timing the numpy backend only")
    for label, call in cases.items():
        times, outs = {}, {}
        for name, mod in backends:
            times[name], outs[name] = best_time(lambda: call(mod), args.repeat)
        line = "  ".join(f"{k} {v * 1e3:8.2f} ms" for k, v in times.items())
        if len(times) == 2:
            a, b = outs["numpy"], outs["cython"]
            a = a if isinstance(a, tuple) else (a,)
            b = b if isinstance(b, tuple) else (b,)
            err = max(float(np.max(np.abs(u - v))) for u, v in zip(a, b))
            line += f"  speed-up {times['numpy'] / times['cython']:5.2f}x  max|diff| {err:.1e}"
        print(f"{label:45s} {line}")


if __name__ == "__main__":
    main()
