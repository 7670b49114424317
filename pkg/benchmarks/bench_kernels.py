"""Compiled vs pure-Python eigen kernels, with LAPACK for reference.

    python3 benchmarks/bench_kernels.py [--sizes 100 200] [--repeat 3]
"""
import argparse
import timeit

import numpy as np
import scipy.linalg as sla

from specpert.linalg import _kernels_py as pure

try:
    from specpert.linalg import _kernels as compiled
except ImportError:
    compiled = None


def _spd(n, seed=0):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    return m @ m.T / n + np.eye(n)


def _cases(mod, a):
    d, e, q = mod.tridiagonalize(a)
    return {
        "tridiagonalize": lambda: mod.tridiagonalize(a),
        "tql2": lambda: mod.tql2(d.copy(), e.copy(), q.copy()),
        "bisection": lambda: mod.bisect_eigenvalues(d, e),
        "cholesky": lambda: mod.cholesky(a, 1e-12),
    }


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 200])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    print(f"{'n':>5} {'kernel':<15} {'compiled [s]':>13} {'python [s]':>11} {'speedup':>8}")
    for n in args.sizes:
        a = _spd(n)
        py = _cases(pure, a)
        cy = _cases(compiled, a) if compiled is not None else {}
        for name, fn in py.items():
            t_py = _best(fn, args.repeat)
            if name in cy:
                t_cy = _best(cy[name], args.repeat)
                print(f"{n:>5} {name:<15} {t_cy:>13.5f} {t_py:>11.5f} {t_py / t_cy:>7.1f}x")
            else:
                print(f"{n:>5} {name:<15} {'n/a':>13} {t_py:>11.5f}")
        t_lapack = _best(lambda: sla.eigh(a), args.repeat)
        print(f"{n:>5} {'lapack eigh':<15} {t_lapack:>13.5f}")


if __name__ == "__main__":
    main()
