"""Benchmark the numba kernels against the pure-Python fallbacks.

Runs both implementations of each hot kernel on identical inputs and
prints a timing table. The active backend for normal library use is
selected by the CORPUSCAUSAL_BACKEND environment variable; this script
always exercises both code paths directly.

Usage: python benchmarks/bench_kernels.py
"""

import random
import time

import numpy as np

from corpuscausal import kernels


def timeit(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_intersection(n=200_000, queries=50):
    rng = np.random.default_rng(0)
    pairs = []
    for _ in range(queries):
        a = np.unique(rng.integers(0, 4 * n, size=n)).astype(np.int32)
        b = np.unique(rng.integers(0, 4 * n, size=n)).astype(np.int32)
        pairs.append((a, b))

    def run(fn):
        return lambda: [fn(a, b) for a, b in pairs]

    rows = []
    py_t = timeit(run(kernels.py_intersect_count))
    rows.append(("intersect_count", "python", py_t))
    if kernels.HAVE_NUMBA:
        kernels.nb_intersect_count(pairs[0][0], pairs[0][1])  # compile
        nb_t = timeit(run(kernels.nb_intersect_count))
        rows.append(("intersect_count", "numba", nb_t))
    return rows


def random_dag_masks(rng, n):
    parents = [0] * n
    children = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.4:
                parents[j] |= 1 << i
                children[i] |= 1 << j
    return parents, children


def bench_dsep(n_nodes=16, queries=20_000):
    rng = random.Random(7)
    parents, children = random_dag_masks(rng, n_nodes)
    parr = np.asarray(parents, dtype=np.int64)
    carr = np.asarray(children, dtype=np.int64)
    qs = []
    for _ in range(queries):
        x, y = rng.sample(range(n_nodes), 2)
        zmask = 0
        for v in range(n_nodes):
            if v not in (x, y) and rng.random() < 0.3:
                zmask |= 1 << v
        qs.append((x, y, zmask))

    rows = []
    py_t = timeit(
        lambda: [kernels.py_dsep_reachable(parents, children, x, y, z) for x, y, z in qs]
    )
    rows.append(("dsep_reachable", "python", py_t))
    if kernels.HAVE_NUMBA:
        kernels.nb_dsep_reachable(parr, carr, 0, 1, np.int64(0))  # compile
        nb_t = timeit(
            lambda: [
                kernels.nb_dsep_reachable(parr, carr, x, y, np.int64(z))
                for x, y, z in qs
            ]
        )
        rows.append(("dsep_reachable", "numba", nb_t))
    return rows


def main():
    print(f"active backend: {kernels.BACKEND} (numba available: {kernels.HAVE_NUMBA})")
    rows = bench_intersection() + bench_dsep()
    print(f"{'kernel':<18}{'impl':<9}{'best time':>12}")
    base = {}
    for name, impl, t in rows:
        base.setdefault(name, t)
        speedup = base[name] / t
        print(f"{name:<18}{impl:<9}{t:>11.4f}s  ({speedup:4.1f}x vs python)")


if __name__ == "__main__":
    main()
