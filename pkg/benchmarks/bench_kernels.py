"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--reps N] [--size N]

Times the tridiagonal sweep and the two simulators on identical inputs and
checks that both backends return the same answers.
"""
import argparse
import time

import numpy as np

from bdcat import _pykernels
from bdcat.model import RateSchedule

try:
    from bdcat import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--reps", type=int, default=20_000, help="simulated replications")
    ap.add_argument("--size", type=int, default=4096, help="tridiagonal system size")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels are not built; nothing to compare")
        return

    rng = np.random.default_rng(0)
    n = args.size
    lower = -np.ones(n - 1, dtype=complex)
    upper = -1.25 * np.ones(n - 1, dtype=complex)
    diag = (3.25 + 0.5j) * np.ones(n, dtype=complex)
    rhs = np.zeros((n, 3), dtype=complex)
    rhs[[0, 1, 5], [0, 1, 2]] = 1.0

    birth, death, tail = RateSchedule.constant(1.0, 1.25).kernel_params()
    u = rng.random(40 * args.reps)

    def sim(mod):
        t = np.empty(args.reps)
        k = np.empty(args.reps, dtype=np.int64)
        e = np.empty(args.reps, dtype=np.int64)
        done, used = mod.first_catastrophe(birth, death, tail, 0.4, 0.3, 0, args.reps, u, 10**6, t, k, e)
        return done, t[:done].copy()

    def hit(mod):
        s = np.empty(args.reps, dtype=np.int64)
        done, used = mod.state_at_time(birth, death, tail, 0.4, 0.3, 5, 2.0, args.reps, u, 10**6, s)
        return done, s[:done].copy()

    cases = [
        (f"thomas n={n}, 3 rhs", lambda m: m.thomas(lower, diag, upper, rhs),
         lambda a, b: np.allclose(a[0], np.asarray(b[0]), rtol=1e-12)),
        (f"first catastrophe, {args.reps} reps", sim,
         lambda a, b: a[0] == b[0] and np.array_equal(a[1], b[1])),
        (f"state at t=2, {args.reps} reps", hit,
         lambda a, b: a[0] == b[0] and np.array_equal(a[1], b[1])),
    ]
    print(f"{'kernel':<34}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}  agree")
    for name, fn, same in cases:
        tp, rp = best_of(lambda: fn(_pykernels), args.repeat)
        tc, rc = best_of(lambda: fn(_ckernels), args.repeat)
        print(f"{name:<34}{tp:>12.4f}{tc:>12.5f}{tp / tc:>10.1f}  {same(rp, rc)}")


if __name__ == "__main__":
    main()
