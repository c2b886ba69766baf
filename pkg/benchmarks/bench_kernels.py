"""Timing comparison of the compiled and pure-python kernel backends.

Run as a script:

    python3 benchmarks/bench_kernels.py

Per-kernel micro benchmarks run both implementations in process; the
end-to-end section reruns a score computation in a subprocess with
MONOCAT_PURE=1 so the import-time backend choice is exercised for real.
"""

from __future__ import annotations

import os
import subprocess
import sys
import time

import numpy as np

from monocat.kernels import _pykernels

try:
    from monocat.kernels import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_convolve(rng, batch, la, lb):
    a = rng.random((batch, la))
    b = rng.random((batch, lb))
    cases = {"python": lambda: _pykernels.convolve_batch(a, b)}
    if _ckernels is not None:
        cases["compiled"] = lambda: _ckernels.convolve_batch(a, b)
    return {name: best_of(fn) for name, fn in cases.items()}


def bench_scatter(rng, n, rows):
    w = rng.random(n)
    idx = rng.integers(0, rows, size=n)
    cases = {"python": lambda: _pykernels.scatter_rows(w, idx, rows)}
    if _ckernels is not None:
        cases["compiled"] = lambda: _ckernels.scatter_rows(w, idx, rows)
    return {name: best_of(fn) for name, fn in cases.items()}


def bench_gather(rng, students, joint, rows, states):
    table = rng.random((rows, states))
    row_index = rng.integers(0, rows, size=joint)
    answered = rng.integers(0, states, size=students)
    base = rng.random((students, joint))

    def run(fn):
        like = base.copy()
        fn(like, table, row_index, answered)

    cases = {"python": lambda: run(_pykernels.gather_likelihood)}
    if _ckernels is not None:
        cases["compiled"] = lambda: run(_ckernels.gather_likelihood)
    return {name: best_of(fn) for name, fn in cases.items()}


def bench_pava(rng, batch, length):
    base = rng.random((batch, length))
    w = rng.random((batch, length)) + 0.1
    cases = {"python": lambda: _pykernels.pava_batch(base, w)}
    if _ckernels is not None:
        cases["compiled"] = lambda: _ckernels.pava_batch(base, w)
    return {name: best_of(fn) for name, fn in cases.items()}


def bench_sweeps(rng, shape):
    from monocat.model import covering_pairs

    order = covering_pairs(shape, (1,) * len(shape))
    fibers, starts, counts, lengths = order.fiber_pack
    base = rng.random((2, order.num_configs))
    w = rng.gamma(0.5, size=order.num_configs) + 1e-3

    def run(fn):
        levels = base.copy()
        fn(levels, fibers, starts, counts, lengths, w, 1e-10, 10_000)

    cases = {"python": lambda: run(_pykernels.sweep_levels)}
    if _ckernels is not None:
        cases["compiled"] = lambda: run(_ckernels.sweep_levels)
    return {name: best_of(fn) for name, fn in cases.items()}


def show(title, results):
    line = f"{title:<40}"
    for name in ("python", "compiled"):
        if name in results:
            line += f" {name} {results[name] * 1e3:9.3f} ms"
    if "compiled" in results and results["compiled"] > 0:
        line += f"   speedup {results['python'] / results['compiled']:5.1f}x"
    print(line)


def end_to_end():
    code = (
        "import time, monocat, monocat.kernels as k\n"
        "m = monocat.example_model(seed=0)\n"
        "t0 = time.perf_counter()\n"
        "for _ in range(20): monocat.score_distribution(m, {0: 1}, variant='B')\n"
        "print(k.BACKEND, time.perf_counter() - t0)\n"
    )
    for pure in ("0", "1"):
        env = dict(os.environ, MONOCAT_PURE=pure)
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
        )
        backend, seconds = out.stdout.split()
        print(f"score_distribution x20 [{backend:>8}]: {float(seconds):.3f} s")


def main():
    rng = np.random.default_rng(0)
    if _ckernels is None:
        print("compiled backend not built; timing the python backend only")
    show("convolve_batch (288, 27)x(288, 27)", bench_convolve(rng, 288, 27, 27))
    show("convolve_batch (288, 2)x(288, 2)", bench_convolve(rng, 288, 2, 2))
    show("convolve_batch (4, 512)x(4, 512)", bench_convolve(rng, 4, 512, 512))
    show("scatter_rows 1e6 -> 64", bench_scatter(rng, 1_000_000, 64))
    show("gather_likelihood (500, 288)", bench_gather(rng, 500, 288, 12, 3))
    show("pava_batch (2000, 24)", bench_pava(rng, 2000, 24))
    show("sweep_levels shape (3, 3, 3)", bench_sweeps(rng, (3, 3, 3)))
    end_to_end()


if __name__ == "__main__":
    main()
