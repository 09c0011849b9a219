"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--sizes 100 1000 10000] [--repeat 5]

Reports the best-of-``repeat`` wall time per call for each kernel and mesh
size, the speed-up of the compiled backend, and the max difference between
the two outputs.
"""

import argparse
import timeit

import numpy as np

from neumann_homotopy._core import load_backend

P, Q, ALPHA = 2.0, 3.0, 1.0


def _cases(n):
    h = 1.0 / (n - 1)
    rng = np.random.default_rng(n)
    gamma = 2.0 + rng.uniform(0.0, 1.0, n)
    rhs = rng.standard_normal(n)
    u = np.full(n, 0.6)
    return {
        "shoot_power": lambda k: k.shoot_power(0.5, h, n, P, Q)[0],
        "tridiag_solve": lambda k: k.tridiag_solve(gamma, rhs),
        "residual_power": lambda k: k.residual_power(u, h, P, Q, ALPHA),
        # 64 single Newton steps along the path towards beta = 1
        "sweep_power": lambda k: _sweep(k, u, h),
    }


def _sweep(k, u, h):
    v = u.copy()
    k.sweep_power(v, h, P, Q, 1.0, 0.0, 64)
    return v


def bench(sizes, repeat):
    backends = {name: load_backend(name) for name in ("cython", "python")}
    print(f"{'kernel':<16}{'n':>8}{'cython [s]':>14}{'python [s]':>14}{'speed-up':>10}{'max diff':>11}")
    for n in sizes:
        for name, fn in _cases(n).items():
            times, outs = {}, {}
            for b, mod in backends.items():
                outs[b] = np.asarray(fn(mod))
                number = 1 if b == "python" and n > 1000 else 5
                times[b] = min(timeit.repeat(lambda: fn(mod), number=number, repeat=repeat)) / number
            diff = float(np.max(np.abs(outs["cython"] - outs["python"])))
            print(f"{name:<16}{n:>8}{times['cython']:>14.3e}{times['python']:>14.3e}"
                  f"{times['python'] / times['cython']:>10.1f}{diff:>11.1e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    try:
        load_backend("cython")
    except ImportError:
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation`")
    bench(args.sizes, args.repeat)


if __name__ == "__main__":
    main()
