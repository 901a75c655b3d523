"""Benchmark the compiled kernels against the NumPy fallback.

Run:  python -m curvpic.benchmarks.bench_kernels [--particles N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from .. import kernels


def _time(fn, *args, repeat=3, **kwargs):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--particles", type=int, default=200_000)
    parser.add_argument("--boris-steps", type=int, default=2_000_000)
    args = parser.parse_args(argv)

    print(f"active backend: {kernels.BACKEND}")
    rng = np.random.default_rng(7)
    n = args.particles
    r0, r_max, n_r, n_theta = 1.0, 4 * np.pi, 64, 64
    dr = (r_max - r0) / n_r
    dth = 2 * np.pi / n_theta
    r = rng.uniform(5.0, 8.0, n)
    th = rng.uniform(0.0, 2 * np.pi, n)
    w = rng.uniform(0.5, 1.5, n)
    nodes = rng.standard_normal((n_r + 1, n_theta))

    rows = []
    for label, dep, gat, bor in (
        ("compiled" if kernels.BACKEND == "cython" else "numpy (no ext)",
         kernels.deposit_cic, kernels.gather_gradient, kernels.boris_orbit),
        ("numpy", kernels.deposit_cic_numpy, kernels.gather_gradient_numpy,
         kernels.boris_orbit_numpy),
    ):
        td, d = _time(dep, r, th, w, r0, dr, dth, n_r, n_theta)
        tg, g = _time(gat, nodes, r, th, r0, dr, dth, n_r, n_theta)
        # fallback Boris is a scalar python loop; scale its step count down
        steps = args.boris_steps if label != "numpy" else max(args.boris_steps // 100, 1)
        tb, _ = _time(bor, (0.36, 0.0), (-0.7, 0.08), 2**-6, (2**-6) ** 2, steps,
                      repeat=1)
        rows.append((label, td, tg, tb / steps, d, g))

    print(f"{'path':<16}{'deposit':>12}{'gather':>12}{'boris/step':>14}")
    for label, td, tg, tbs, _, _ in rows:
        print(f"{label:<16}{td * 1e3:>10.2f}ms{tg * 1e3:>10.2f}ms{tbs * 1e9:>11.1f}ns")

    d_err = np.max(np.abs(rows[0][4] - rows[1][4]))
    g_err = max(np.max(np.abs(rows[0][5][0] - rows[1][5][0])),
                np.max(np.abs(rows[0][5][1] - rows[1][5][1])))
    print(f"max |compiled - numpy|: deposit {d_err:.3e}, gather {g_err:.3e}")


if __name__ == "__main__":
    main()
