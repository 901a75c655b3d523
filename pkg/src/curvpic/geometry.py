"""Orthogonal curvilinear coordinate charts.

A chart is an orthogonal map F: y -> x together with its Jacobian matrix
DF (entries dx_i/dy_j), the inverse-transpose N = DF^{-T}, the Jacobian
determinant J = det(DF) and the Lame coefficients h_i = |dF/dy_i|.
Differential-form pullback/pushforward rules for 0/1/2/3-forms are
implemented on top of these.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SingularJacobianError",
    "OutOfDomainError",
    "CoordinateChart",
    "chart_polar",
    "chart_cylindrical",
    "chart_identity",
    "n_matrix",
    "lame_coefficients",
    "transform_form",
    "laplace_beltrami_coeffs",
    "K2",
]

# 2x2 rotation generator, K @ (a, b) = (b, -a)
K2 = np.array([[0.0, 1.0], [-1.0, 0.0]])

_DET_FLOOR = 1e-14


class SingularJacobianError(ValueError):
    """Jacobian determinant is (numerically) zero at the requested point."""


class OutOfDomainError(ValueError):
    """Point lies outside the chart's domain box."""


@dataclass(frozen=True)
class CoordinateChart:
    """Immutable orthogonal coordinate chart.

    Parameters
    ----------
    dim : 2 or 3.
    forward : map y -> x (Cartesian).
    jacobian_matrix : map y -> DF(y), with (DF)_ij = dx_i/dy_j.
    domain_box : per-axis (lo, hi) bounds.
    boundary : per-axis kind, each "dirichlet-wall" or "periodic".
    name : short identifier used in output headers.
    """

    dim: int
    forward: Callable[[np.ndarray], np.ndarray]
    jacobian_matrix: Callable[[np.ndarray], np.ndarray]
    domain_box: tuple[tuple[float, float], ...]
    boundary: tuple[str, ...]
    name: str = "chart"

    def jacobian_det(self, y) -> float:
        return float(np.linalg.det(self.jacobian_matrix(np.asarray(y, float))))

    def contains(self, y) -> bool:
        y = np.asarray(y, float)
        for i, (lo, hi) in enumerate(self.domain_box):
            if self.boundary[i] == "periodic":
                continue
            if not (lo < y[i] < hi):
                return False
        return True


def _polar_forward(y):
    r, th = y[0], y[1]
    return np.array([r * np.cos(th), r * np.sin(th)])


def _polar_jac(y):
    r, th = y[0], y[1]
    c, s = np.cos(th), np.sin(th)
    return np.array([[c, -r * s], [s, r * c]])


def chart_polar(r0: float = 1e-6, r_max: float = 4.0 * np.pi) -> CoordinateChart:
    """Polar chart x1 = r cos(theta), x2 = r sin(theta) on [r0, r_max] x [0, 2pi).

    The radial axis is a Dirichlet wall (r0 > 0 keeps the axis singularity
    out of the domain), the angular axis is periodic.
    """
    if r0 <= 0:
        raise ValueError("r0 must be positive (axis singularity excluded)")
    return CoordinateChart(
        dim=2,
        forward=_polar_forward,
        jacobian_matrix=_polar_jac,
        domain_box=((r0, r_max), (0.0, 2.0 * np.pi)),
        boundary=("dirichlet-wall", "periodic"),
        name="polar",
    )


def _cyl_forward(y):
    r, th, z = y[0], y[1], y[2]
    return np.array([r * np.cos(th), r * np.sin(th), z])


def _cyl_jac(y):
    r, th = y[0], y[1]
    c, s = np.cos(th), np.sin(th)
    return np.array([[c, -r * s, 0.0], [s, r * c, 0.0], [0.0, 0.0, 1.0]])


def chart_cylindrical(
    r0: float = 1e-6,
    r_max: float = 4.0 * np.pi,
    z_bounds: tuple[float, float] = (-10.0, 10.0),
) -> CoordinateChart:
    """Cylindrical chart (r, theta, z); Lame coefficients (1, r, 1)."""
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    return CoordinateChart(
        dim=3,
        forward=_cyl_forward,
        jacobian_matrix=_cyl_jac,
        domain_box=((r0, r_max), (0.0, 2.0 * np.pi), z_bounds),
        boundary=("dirichlet-wall", "periodic", "dirichlet-wall"),
        name="cylindrical",
    )


def chart_identity(dim: int = 2, half_width: float = 100.0) -> CoordinateChart:
    """Identity chart F = id on a large box; DF = I, J = 1."""
    eye = np.eye(dim)
    return CoordinateChart(
        dim=dim,
        forward=lambda y: np.asarray(y, float).copy(),
        jacobian_matrix=lambda y: eye.copy(),
        domain_box=tuple((-half_width, half_width) for _ in range(dim)),
        boundary=tuple("dirichlet-wall" for _ in range(dim)),
        name="identity",
    )


def n_matrix(chart: CoordinateChart, y) -> np.ndarray:
    """N(y) = DF(y)^{-T} by direct small-matrix inversion."""
    df = chart.jacobian_matrix(np.asarray(y, float))
    det = np.linalg.det(df)
    if abs(det) < _DET_FLOOR:
        raise SingularJacobianError(
            f"chart '{chart.name}': |det DF| = {abs(det):.3e} at y = {np.asarray(y)}"
        )
    return np.linalg.inv(df).T


def lame_coefficients(chart: CoordinateChart, y) -> np.ndarray:
    """Lame coefficients h_i = |column i of DF| = sqrt(g_ii)."""
    df = chart.jacobian_matrix(np.asarray(y, float))
    h = np.linalg.norm(df, axis=0)
    if np.any(h <= 0):
        raise SingularJacobianError(f"degenerate Lame coefficient at y = {np.asarray(y)}")
    return h


def transform_form(
    chart: CoordinateChart,
    kind: str,
    value,
    y,
    direction: str = "to_cartesian",
):
    """Apply the differential-form transformation rule between frames.

    kind: 'zero_form' (scalar, unchanged), 'one_form' (E = N Etilde),
    'two_form' (B = DF Btilde / J), 'three_form' (h = htilde / J).
    direction 'to_curvilinear' applies the inverse rule.
    """
    if direction not in ("to_cartesian", "to_curvilinear"):
        raise ValueError(f"unknown direction {direction!r}")
    if kind == "zero_form":
        return value
    y = np.asarray(y, float)
    df = chart.jacobian_matrix(y)
    det = np.linalg.det(df)
    if abs(det) < _DET_FLOOR:
        raise SingularJacobianError(f"|det DF| = {abs(det):.3e} at y = {y}")
    v = np.asarray(value, float)
    if kind == "one_form":
        n = np.linalg.inv(df).T
        return n @ v if direction == "to_cartesian" else df.T @ v
    if kind == "two_form":
        if direction == "to_cartesian":
            return (df @ v) / det
        return det * (np.linalg.inv(df) @ v)
    if kind == "three_form":
        return v / det if direction == "to_cartesian" else v * det
    raise ValueError(f"unknown form kind {kind!r}")


def laplace_beltrami_coeffs(chart: CoordinateChart, y) -> np.ndarray:
    """Per-axis coefficients (prod_k h_k) / h_i^2 of the curvilinear Laplacian.

    In 3D these are h_j h_k / h_i; the 2D reduction treats the missing axis
    as having unit scale factor (polar: (r, 1/r)).
    """
    h = lame_coefficients(chart, y)
    prod = np.prod(h)
    return prod / h**2
