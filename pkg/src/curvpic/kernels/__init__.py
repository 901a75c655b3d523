"""Hot inner loops: particle deposition, field gather, Boris reference orbit.

A compiled Cython core (`_core`) is preferred; a vectorized NumPy fallback
(`_numpy`) is selected at import when the extension is unavailable. Both
expose the same three functions:

    deposit_cic(r, theta, weights, r0, dr, dth, n_r, n_theta) -> node array
    gather_gradient(node_vals, r, theta, r0, dr, dth, n_r, n_theta) -> (gr, gth)
    boris_orbit(x0, v0, eps, dt, n_steps, field_kind) -> (x, v)

`field_kind`: 0 = benchmark (E = -x), 1 = cubic (E = -(x1^2, x2^2));
both use b(x) = 1 + eps*sin(|x|).

Run `python -m curvpic.benchmarks.bench_kernels` to compare the two paths.
"""

from . import _numpy

try:
    from . import _core as _impl

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    _impl = _numpy
    BACKEND = "numpy"

deposit_cic = _impl.deposit_cic
gather_gradient = _impl.gather_gradient
boris_orbit = _impl.boris_orbit

# always-available reference path, used by tests and the benchmark
deposit_cic_numpy = _numpy.deposit_cic
gather_gradient_numpy = _numpy.gather_gradient
boris_orbit_numpy = _numpy.boris_orbit

__all__ = [
    "BACKEND",
    "deposit_cic",
    "gather_gradient",
    "boris_orbit",
    "deposit_cic_numpy",
    "gather_gradient_numpy",
    "boris_orbit_numpy",
]
