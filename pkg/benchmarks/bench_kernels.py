"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from memdeblur import _pykernels

try:
    from memdeblur import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    n = 256 * 256
    t = rng.normal(0.0, 50.0, n)
    t[: n // 10] *= 1e-5  # exercise the series branch too
    lo, hi = np.full(n, -0.01), np.full(n, 1.01)
    f = rng.random((256, 256))
    return {
        "uniform_logmgf_grad 65536": lambda k: k.uniform_logmgf_grad(t, lo, hi),
        "chambolle_tv 256x256 x50": lambda k: k.chambolle_tv(f, 0.1, 50, 0.248),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled core not built; timing the fallback only")
    print(f"{'case':<28}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, fn in cases(rng).items():
        best = {name: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat))
                for name, k in backends.items()}
        row = f"{label:<28}" + "".join(f"{best[n] * 1e3:>10.2f}ms" for n in backends)
        if "cython" in best:
            row += f"{best['python'] / best['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
