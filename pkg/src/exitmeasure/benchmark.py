"""Throughput benchmark of the compiled kernel against the numpy fallback.

Runs the same workloads through both implementations, verifies that the
results agree bit for bit, and reports walks (and steps) per second:

    python -m exitmeasure.benchmark [--n 200000] [--threads N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import _fallback, backend, conductivity, geometry

try:
    from . import _kernel
except ImportError:
    _kernel = None


def _workloads():
    disc = geometry.catalog("disc")
    annulus = geometry.catalog("annulus")
    five = geometry.catalog("disc_five_holes")
    kt2 = conductivity.identity_tensor(2)
    shell = geometry.catalog("shell3d")
    kt3 = conductivity.identity_tensor(3)
    return [
        ("disc 2D, eps 1e-6", disc, kt2, [0.5, 0.0], 1e-6),
        ("annulus 2D, eps 1e-10", annulus, kt2, [0.95, 0.0], 1e-10),
        ("five-hole disc 2D, eps 1e-10", five, kt2, [0.95, 0.0], 1e-10),
        ("spherical shell 3D, eps 1e-8", shell, kt3, [0.95, 0.0, 0.0], 1e-8),
    ]


def _time_impl(impl, dom, kt, pole, eps, n):
    geom = backend.pack_geometry(dom)
    ks = np.ascontiguousarray(kt.k_sqrt)
    pole = np.asarray(pole, dtype=float)
    t0 = time.perf_counter()
    x, steps, comp, err = impl.walk_exits_chunk(
        geom.gi, geom.gf, geom.comp_side, ks, pole, 0, 0, n, 2024, eps, 10**6)
    dt = time.perf_counter() - t0
    assert err < 0
    return dt, x, steps


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=200_000, help="walks per workload")
    args = p.parse_args(argv)

    if _kernel is None:
        print("compiled kernel not available; showing fallback only")
    header = f"{'workload':32} {'impl':9} {'time':>8} {'walks/s':>12} {'Msteps/s':>10}"
    print(header)
    print("-" * len(header))
    for name, dom, kt, pole, eps in _workloads():
        rows = []
        for label, impl in (("compiled", _kernel), ("fallback", _fallback)):
            if impl is None:
                continue
            n = args.n if label == "compiled" or args.n <= 50_000 else args.n // 10
            dt, x, steps = _time_impl(impl, dom, kt, pole, eps, n)
            rows.append((label, n, dt, x, steps))
            print(f"{name:32} {label:9} {dt:7.2f}s {n / dt:12.0f} "
                  f"{steps.sum() / dt / 1e6:10.1f}")
        if len(rows) == 2:
            n_common = min(rows[0][1], rows[1][1])
            same = (np.array_equal(rows[0][3][:n_common], rows[1][3][:n_common])
                    and np.array_equal(rows[0][4][:n_common], rows[1][4][:n_common]))
            print(f"{'':32} backends bit-identical on {n_common} walks: {same}")
            if not same:
                return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
