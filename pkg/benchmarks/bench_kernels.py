"""Compare the compiled and pure-Python kernel assembly backends.

Usage: python3 benchmarks/bench_kernels.py [--sizes 100,400,1600] [--repeat 5]

Times ``cross_matrix`` for the plain kernel, a first derivative, and the
Laplacian-style cross term used by the influence grid, and checks that both
backends return the same matrices.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from gpinfluence import _kernels_py

try:
    from gpinfluence import _kernels_ext
except ImportError:  # extension not built
    _kernels_ext = None

CASES = {
    "k": ((0, 0, 0), (0, 0, 0)),
    "dk/dx": ((1, 0, 0), (0, 0, 0)),
    "d2k/dx dx'": ((1, 0, 0), (1, 0, 0)),
    "d4k/dx2 dy'2": ((2, 0, 0), (0, 2, 0)),
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="100,400,1600")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)
    ls = np.array([1.0, 0.8, 2.0])
    backends = [_kernels_py] + ([_kernels_ext] if _kernels_ext is not None else [])
    if _kernels_ext is None:
        print("compiled extension not built; timing the pure-Python backend only")
    print(f"{'n':>6} {'case':>14} " + " ".join(f"{b.NAME + ' ms':>12}" for b in backends) + "  speedup  max|diff|")
    for n in sizes:
        A = rng.normal(size=(n, 3))
        B = rng.normal(size=(n, 3))
        for name, (na, nb) in CASES.items():
            na_ = np.asarray(na, dtype=np.intc)
            nb_ = np.asarray(nb, dtype=np.intc)
            times, outs = [], []
            for b in backends:
                fn = lambda b=b: b.cross_matrix(A, B, ls, 1.3, na_, nb_)  # noqa: E731
                outs.append(fn())
                times.append(min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3)
            diff = float(np.max(np.abs(outs[0] - outs[-1])))
            speed = times[0] / times[-1]
            print(f"{n:>6} {name:>14} " + " ".join(f"{t:12.2f}" for t in times) + f"  {speed:7.2f}  {diff:.1e}")


if __name__ == "__main__":
    main()
