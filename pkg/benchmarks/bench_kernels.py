"""Timing comparison of the compiled and pure-numpy kernel backends.

Runs grid slicing, its adjoint, and the variance-guided denoiser on
realistic sizes with both implementations and prints a small table.

    python benchmarks/bench_kernels.py [--repeat 5] [--size 1024]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rawlume._kernels import _ref

try:
    from rawlume._kernels import _core
except ImportError:
    _core = None


def _time(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=1024, help="full-res image side length")
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    h = w = args.size // 2  # packed-plane geometry
    grid = rng.normal(size=(16, 16, 16))
    guidance = rng.random((h, w))
    cotangent = rng.normal(size=(h, w))
    planes = rng.random((4, h, w))
    var = np.full((4, h, w), 2.5e-4)
    gain = np.full((h, w), 4.0)

    backends = [("python", _ref)]
    if _core is not None:
        backends.append(("cython", _core))
    else:
        print("compiled backend not available; showing pure python only")

    cases = [
        ("slice_grid", lambda mod: mod.slice_grid(grid, guidance)),
        ("slice_adjoint", lambda mod: mod.slice_adjoint(cotangent, guidance)),
        ("jbf_denoise", lambda mod: mod.jbf_denoise(planes, var, gain, 2, 2.0, 1e-6)),
    ]

    print(f"packed geometry {h}x{w}, best of {args.repeat}")
    print(f"{'kernel':<15}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for label, call in cases:
        times = [_time(lambda m=mod: call(m), args.repeat) for _, mod in backends]
        row = f"{label:<15}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2 and times[1] > 0:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    if _core is not None:
        a = _ref.slice_grid(grid, guidance)
        b = _core.slice_grid(grid, guidance)
        print(f"max |python - cython| slice_grid: {np.abs(a - b).max():.3e}")


if __name__ == "__main__":
    main()
