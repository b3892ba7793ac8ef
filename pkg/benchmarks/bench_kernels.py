"""Timing comparison of the geodesic integration kernels.

Runs the same workload through the compiled backend and the pure numpy
fallback and prints per-call times and the speedup.

    python3 benchmarks/bench_kernels.py [--t-end 20] [--orbits 8]
"""

import argparse
import statistics
import time

import numpy as np

from ktorus import ConformalFactor
from ktorus._kernels import pack_coeffs, pure

try:
    from ktorus._kernels import _fast
except ImportError:
    _fast = None


def bench(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-end", type=float, default=20.0)
    ap.add_argument("--orbits", type=int, default=8)
    ap.add_argument("--modes", type=int, default=24,
                    help="number of Fourier modes in the test metric")
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    coeffs = {}
    while len(coeffs) < args.modes:
        k = (int(rng.integers(-4, 5)), int(rng.integers(0, 5)))
        if k >= (0, 0) and k != (0, 0):
            coeffs[k] = 0.04 * rng.standard_normal() * 0.7 ** sum(map(abs, k))
    cf = ConformalFactor(coeffs=coeffs)
    packed = pack_coeffs(cf)
    starts = [np.array([rng.random(), rng.random(),
                        rng.random() * 2 * np.pi]) for _ in range(args.orbits)]
    ts = np.linspace(0.0, args.t_end, 256)

    def run(mod):
        def work():
            for y0 in starts:
                mod.integrate(*packed, y0, 0.0, ts)
        return work

    backends = [("pure numpy", pure)]
    if _fast is not None:
        backends.append(("compiled", _fast))
    else:
        print("compiled backend not built; timing pure numpy only")

    print(f"metric: {len(coeffs)} modes; {args.orbits} orbits to "
          f"t={args.t_end:g}; 256 output samples each")
    results = {}
    for name, mod in backends:
        dt = bench(run(mod))
        results[name] = dt
        print(f"  integrate  {name:12s} {dt:8.3f} s "
              f"({dt / args.orbits * 1e3:7.1f} ms/orbit)")

    xs = rng.uniform(0, 1, size=2000)
    ys = rng.uniform(0, 1, size=2000)

    def jets(mod):
        def work():
            for x, y in zip(xs, ys):
                mod.mu_jet1(*packed, x, y)
        return work

    for name, mod in backends:
        dt = bench(jets(mod))
        print(f"  mu_jet1    {name:12s} {dt * 1e6 / len(xs):8.2f} us/call")

    if _fast is not None:
        print(f"speedup (integrate): "
              f"{results['pure numpy'] / results['compiled']:.1f}x")


if __name__ == "__main__":
    main()
