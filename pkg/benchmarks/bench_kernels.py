"""Time each numba kernel against its numpy twin.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both implementations are imported directly, so the result does not depend on
``LAYERSPECTRA_NO_NUMBA``. The first numba call (compilation, or loading the
on-disk cache) is excluded from the timings.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from layerspectra import kernels
from layerspectra._accel import NUMBA_AVAILABLE
from layerspectra.numerics import bessel


def _cases(rng):
    n = 200_000
    s = np.linspace(0.0, 100.0, 2 * n + 1)
    k_half = 0.3 * np.exp(-((s - 50.0) ** 2))
    yield "meridian_rk4", kernels._meridian_rk4_numba, kernels._meridian_rk4_numpy, (k_half, 100.0 / n)

    m = 20_000
    p = rng.random((m, 2))
    q = p + 0.01 * rng.standard_normal((m, 2))
    ii = rng.integers(0, m, 500_000)
    jj = rng.integers(0, m, 500_000)
    yield "segment_pairs_hit", kernels._pairs_hit_numba, kernels._pairs_hit_numpy, (p, q, ii, jj)

    nodes = 200_000
    fp = rng.integers(-1, nodes, 800_000)
    fq = rng.integers(-1, nodes, 800_000)
    wt = rng.random(800_000)
    yield "face_triplets", kernels._faces_numba, kernels._faces_numpy, (fp, fq, wt, nodes)

    z = np.logspace(-4, 2.5, 400_000)
    yield "bessel_k01", bessel._k01_numba, bessel._k01_numpy, (z, True)


def _best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return min(times)


def _same(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.allclose(x, y, rtol=1e-12, atol=1e-14) for x, y in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba disabled: both columns time the same python loop or numpy code")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}  agree")
    for name, fast, slow, fargs in _cases(rng):
        ref = fast(*fargs)  # warm-up / compile
        agree = _same(ref, slow(*fargs))
        tf = _best(fast, fargs, args.repeat)
        ts = _best(slow, fargs, args.repeat)
        print(f"{name:<20}{1e3 * tf:>12.2f}{1e3 * ts:>12.2f}{ts / tf:>10.1f}  {'yes' if agree else 'NO'}")


if __name__ == "__main__":
    main()
