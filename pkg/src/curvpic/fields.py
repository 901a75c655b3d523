"""Electric/magnetic field providers.

Two kinds of provider feed the pushers:

* analytic models (single-particle benchmarks): Cartesian E(x) and an
  out-of-plane scalar b(x1, x2), with the magnetization parameter eps
  (the physical field is b/eps);
* a finite-element Poisson solve on the polar annulus: Q1 tensor-product
  elements on a uniform (r, theta) grid, Dirichlet walls in r, periodic
  in theta, bilinear form  a(u, w) = int( r u_r w_r + (1/r) u_th w_th ).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import CoordinateChart, OutOfDomainError

__all__ = [
    "AnalyticFieldModel",
    "make_benchmark_field",
    "make_cubic_potential_field",
    "PolarFemGrid",
    "StiffnessMatrix",
    "PotentialCoefficients",
    "assemble_stiffness",
    "solve_poisson",
    "eval_field_at",
    "PoissonSolveError",
]


class PoissonSolveError(RuntimeError):
    """Linear solve failed to reach the requested residual."""


@dataclass(frozen=True)
class AnalyticFieldModel:
    """Analytic field: Cartesian E(x), out-of-plane scalar b(x), parameter eps."""

    e_field: Callable[[np.ndarray], np.ndarray]
    b_scalar: Callable[[np.ndarray], float]
    epsilon: float
    name: str = "analytic"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def e_curvilinear(self, chart: CoordinateChart, y) -> np.ndarray:
        """Pull E back to the 1-form components: Etilde = DF^T E(F(y))."""
        y = np.asarray(y, float)
        return chart.jacobian_matrix(y).T @ self.e_field(chart.forward(y))

    def b_at_y(self, chart: CoordinateChart, y) -> float:
        return float(self.b_scalar(chart.forward(np.asarray(y, float))))


def make_benchmark_field(epsilon: float) -> AnalyticFieldModel:
    """Single-particle benchmark: E(x) = -x, b(x) = 1 + eps*sin(|x|)."""
    eps = float(epsilon)

    def e(x):
        return -np.asarray(x, float)

    def b(x):
        x = np.asarray(x, float)
        return 1.0 + eps * np.sin(np.sqrt(x[0] ** 2 + x[1] ** 2))

    return AnalyticFieldModel(e, b, eps, name="benchmark")


def make_cubic_potential_field(epsilon: float) -> AnalyticFieldModel:
    """Cubic potential phi = (x1^3 + x2^3)/3, so E = -(x1^2, x2^2); b as benchmark."""
    eps = float(epsilon)

    def e(x):
        x = np.asarray(x, float)
        return np.array([-x[0] ** 2, -x[1] ** 2])

    def b(x):
        x = np.asarray(x, float)
        return 1.0 + eps * np.sin(np.sqrt(x[0] ** 2 + x[1] ** 2))

    return AnalyticFieldModel(e, b, eps, name="cubic")


def cubic_potential(x) -> float:
    x = np.asarray(x, float)
    return float((x[0] ** 3 + x[1] ** 3) / 3.0)


def benchmark_potential(x) -> float:
    x = np.asarray(x, float)
    return float(0.5 * (x[0] ** 2 + x[1] ** 2))


# ---------------------------------------------------------------------------
# FEM grid on the annulus
# ---------------------------------------------------------------------------

# 2-point Gauss rule on [0, 1]
_GP = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
_GW = np.array([0.5, 0.5])


@dataclass(frozen=True)
class PolarFemGrid:
    """Uniform tensor-product Q1 grid on [r0, r_max] x [0, 2pi).

    Nodes: (n_r + 1) radial levels times n_theta angular levels (periodic).
    Free DOFs exclude the two Dirichlet radial levels: (n_r - 1) * n_theta,
    indexed dof = (i - 1) * n_theta + j for radial level i in 1..n_r-1.
    """

    r0: float
    r_max: float
    n_r: int
    n_theta: int

    def __post_init__(self):
        if not (0 < self.r0 < self.r_max):
            raise ValueError("need 0 < r0 < r_max")
        if self.n_r < 2 or self.n_theta < 3:
            raise ValueError("grid too coarse")

    @property
    def dr(self) -> float:
        return (self.r_max - self.r0) / self.n_r

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    @property
    def r_nodes(self) -> np.ndarray:
        return self.r0 + self.dr * np.arange(self.n_r + 1)

    @property
    def theta_nodes(self) -> np.ndarray:
        return self.dtheta * np.arange(self.n_theta)

    @property
    def n_dofs(self) -> int:
        return (self.n_r - 1) * self.n_theta

    def dof_index(self, i: int, j: int) -> int:
        """Free-DOF index of node (radial level i, angular level j), or -1."""
        if i <= 0 or i >= self.n_r:
            return -1
        return (i - 1) * self.n_theta + (j % self.n_theta)

    def node_values(self, coeffs: np.ndarray) -> np.ndarray:
        """Expand DOF vector to the full (n_r+1, n_theta) node array (walls = 0)."""
        full = np.zeros((self.n_r + 1, self.n_theta))
        full[1:-1, :] = np.asarray(coeffs, float).reshape(self.n_r - 1, self.n_theta)
        return full

    def locate(self, r, theta):
        """Cell indices and local coordinates in [0,1]^2 for points (r, theta)."""
        r = np.asarray(r, float)
        theta = np.mod(np.asarray(theta, float), 2.0 * np.pi)
        if np.any(r < self.r0 - 1e-12) or np.any(r > self.r_max + 1e-12):
            raise OutOfDomainError("radial coordinate outside [r0, r_max]")
        i = np.clip(((r - self.r0) / self.dr).astype(int), 0, self.n_r - 1)
        j = np.clip((theta / self.dtheta).astype(int), 0, self.n_theta - 1)
        xi = (r - self.r0) / self.dr - i
        eta = theta / self.dtheta - j
        return i, j, xi, eta


@dataclass(frozen=True)
class StiffnessMatrix:
    """Assembled sparse SPD stiffness matrix with a cached factorization."""

    grid: PolarFemGrid
    matrix: sp.csr_matrix

    @cached_property
    def _factor(self):
        return spla.splu(self.matrix.tocsc())


@dataclass(frozen=True)
class PotentialCoefficients:
    grid: PolarFemGrid
    values: np.ndarray  # length n_dofs


def _cell_matrix(r_left: float, dr: float, dth: float) -> np.ndarray:
    """4x4 element matrix on one cell, nodes ordered (00, 10, 01, 11).

    Local index convention: first digit = radial corner, second = angular.
    The r and 1/r coefficients are evaluated at the 2x2 Gauss points.
    """
    ke = np.zeros((4, 4))
    # bilinear shape functions N(xi, eta), order (00, 10, 01, 11)
    for a, wa in zip(_GP, _GW):
        for b, wb in zip(_GP, _GW):
            r = r_left + a * dr
            n_xi = np.array([-(1 - b), (1 - b), -b, b]) / dr
            n_eta = np.array([-(1 - a), -a, (1 - a), a]) / dth
            w = wa * wb * dr * dth
            ke += w * (r * np.outer(n_xi, n_xi) + (1.0 / r) * np.outer(n_eta, n_eta))
    return ke


def assemble_stiffness(grid: PolarFemGrid) -> StiffnessMatrix:
    """Assemble a(u, w) = int( r u_r w_r + (1/r) u_th w_th ) dr dtheta.

    Dirichlet rows/columns at r = r0 and r = r_max are eliminated;
    theta-periodicity is folded into the DOF map.
    """
    rows, cols, vals = [], [], []
    r_nodes = grid.r_nodes
    for i in range(grid.n_r):
        ke = _cell_matrix(r_nodes[i], grid.dr, grid.dtheta)
        for j in range(grid.n_theta):
            # global free-DOF ids of the cell's 4 corners, -1 on walls
            ids = [
                grid.dof_index(i, j),
                grid.dof_index(i + 1, j),
                grid.dof_index(i, j + 1),
                grid.dof_index(i + 1, j + 1),
            ]
            for a in range(4):
                if ids[a] < 0:
                    continue
                for b in range(4):
                    if ids[b] < 0:
                        continue
                    rows.append(ids[a])
                    cols.append(ids[b])
                    vals.append(ke[a, b])
    m = sp.coo_matrix(
        (vals, (rows, cols)), shape=(grid.n_dofs, grid.n_dofs)
    ).tocsr()
    return StiffnessMatrix(grid=grid, matrix=m)


def solve_poisson(
    stiffness: StiffnessMatrix, rhs: np.ndarray, tol: float = 1e-10
) -> PotentialCoefficients:
    """Solve M phi = rhs to relative residual <= tol (sparse LU, SPD system)."""
    rhs = np.asarray(rhs, float)
    if rhs.shape != (stiffness.grid.n_dofs,):
        raise ValueError(f"rhs length {rhs.shape} != DOF count {stiffness.grid.n_dofs}")
    if not np.any(rhs):
        return PotentialCoefficients(stiffness.grid, np.zeros_like(rhs))
    x = stiffness._factor.solve(rhs)
    rnorm = np.linalg.norm(stiffness.matrix @ x - rhs)
    if rnorm > tol * np.linalg.norm(rhs):
        raise PoissonSolveError(
            f"residual {rnorm:.3e} exceeds {tol:.1e} * ||rhs||"
        )
    return PotentialCoefficients(stiffness.grid, x)


def eval_field_at(grid: PolarFemGrid, coeffs: PotentialCoefficients | np.ndarray, y):
    """Curvilinear field Etilde(y) = -grad_y phi_h at a single point y = (r, theta)."""
    vals = coeffs.values if isinstance(coeffs, PotentialCoefficients) else np.asarray(coeffs, float)
    full = grid.node_values(vals)
    gr, gth = gather_gradient(grid, full, np.atleast_1d(y[0]), np.atleast_1d(y[1]))
    return np.array([-gr[0], -gth[0]])


def _manufactured_phi(grid: PolarFemGrid):
    """Smooth reference potential and its strong-form source on the annulus.

    phi(r, theta) = sin(pi (r - r0) / L) cos(3 theta), L = r_max - r0;
    the source g satisfies  -d/dr(r phi_r) - phi_tt / r = g, matching the
    assembled bilinear form (test functions vanish on the walls).
    """
    L = grid.r_max - grid.r0
    k = np.pi / L

    def phi(r, th):
        return np.sin(k * (r - grid.r0)) * np.cos(3.0 * th)

    def source(r, th):
        s = np.sin(k * (r - grid.r0))
        c = np.cos(k * (r - grid.r0))
        ang = np.cos(3.0 * th)
        phi_r = k * c * ang
        phi_rr = -k * k * s * ang
        return -phi_r - r * phi_rr + 9.0 * s * ang / r

    return phi, source


# 3-point Gauss rule on [0, 1], used for load vectors and error norms
_GP3 = 0.5 + 0.5 * np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GW3 = np.array([5.0, 8.0, 5.0]) / 18.0


def project_source(grid: PolarFemGrid, source) -> np.ndarray:
    """Load vector f_j = int W_j(r, theta) g(r, theta) dr dtheta (free DOFs)."""
    f = np.zeros((grid.n_r + 1, grid.n_theta))
    r_nodes = grid.r_nodes
    th_nodes = grid.theta_nodes
    for a, wa in zip(_GP3, _GW3):
        for b, wb in zip(_GP3, _GW3):
            shp = np.array([(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b])
            w = wa * wb * grid.dr * grid.dtheta
            for i in range(grid.n_r):
                r = r_nodes[i] + a * grid.dr
                th = th_nodes + b * grid.dtheta
                g = source(r, th) * w
                jp = np.arange(grid.n_theta)
                jq = (jp + 1) % grid.n_theta
                f[i, jp] += shp[0] * g
                f[i + 1, jp] += shp[1] * g
                f[i, jq] += shp[2] * g
                f[i + 1, jq] += shp[3] * g
    return f[1:-1, :].ravel()


def l2_error(grid: PolarFemGrid, coeffs, exact) -> float:
    """L2-norm (dr dtheta measure) of the bilinear FEM field minus `exact`."""
    vals = coeffs.values if isinstance(coeffs, PotentialCoefficients) else np.asarray(coeffs)
    full = grid.node_values(vals)
    acc = 0.0
    r_nodes = grid.r_nodes
    th_nodes = grid.theta_nodes
    jp = np.arange(grid.n_theta)
    jq = (jp + 1) % grid.n_theta
    for a, wa in zip(_GP3, _GW3):
        for b, wb in zip(_GP3, _GW3):
            w = wa * wb * grid.dr * grid.dtheta
            for i in range(grid.n_r):
                r = r_nodes[i] + a * grid.dr
                th = th_nodes + b * grid.dtheta
                fh = (
                    full[i, jp] * (1 - a) * (1 - b)
                    + full[i + 1, jp] * a * (1 - b)
                    + full[i, jq] * (1 - a) * b
                    + full[i + 1, jq] * a * b
                )
                acc += w * float(np.sum((fh - exact(r, th)) ** 2))
    return np.sqrt(acc)


def manufactured_errors(r0: float, r_max: float, resolutions) -> list[float]:
    """Solve the manufactured problem at each resolution; return L2 errors."""
    errs = []
    for n in resolutions:
        grid = PolarFemGrid(r0, r_max, n, n)
        phi, source = _manufactured_phi(grid)
        stiff = assemble_stiffness(grid)
        rhs = project_source(grid, source)
        coeffs = solve_poisson(stiff, rhs)
        errs.append(l2_error(grid, coeffs, phi))
    return errs


def gather_gradient(grid: PolarFemGrid, node_vals: np.ndarray, r, theta):
    """Bilinear-basis gradient (d/dr, d/dtheta) of a nodal field at many points."""
    from . import kernels

    return kernels.gather_gradient(
        np.ascontiguousarray(node_vals, float),
        np.ascontiguousarray(r, float),
        np.ascontiguousarray(theta, float),
        grid.r0, grid.dr, grid.dtheta, grid.n_r, grid.n_theta,
    )
