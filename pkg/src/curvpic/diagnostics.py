"""Conserved-quantity monitors, Poisson-structure checks, density binning,
and theta-mode spectral analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import PolarFemGrid, PotentialCoefficients, StiffnessMatrix
from .geometry import K2, CoordinateChart, n_matrix
from .pic import ParticleEnsemble, deposit_nodes

__all__ = [
    "EnergyRecord",
    "total_energy",
    "particle_energy",
    "poisson_matrix",
    "jacobi_residual",
    "hat_matrix",
    "hat_matrix_checks",
    "DensityGrid",
    "density_grid",
    "theta_mode_amplitudes",
    "trajectory_error",
]


@dataclass(frozen=True)
class EnergyRecord:
    time: float
    kinetic: float
    potential: float

    @property
    def total(self) -> float:
        return self.kinetic + self.potential


def total_energy(
    ensemble: ParticleEnsemble,
    stiffness: StiffnessMatrix,
    coeffs: PotentialCoefficients,
    time: float = 0.0,
) -> EnergyRecord:
    """Discrete Hamiltonian: 1/2 sum alpha_s |V_s|^2 + 1/2 Phi^T M Phi."""
    act = ensemble.active
    kin = 0.5 * float(np.sum(ensemble.alpha[act] * np.sum(ensemble.v[act] ** 2, axis=1)))
    phi = coeffs.values
    pot = 0.5 * float(phi @ (stiffness.matrix @ phi))
    return EnergyRecord(time, kin, pot)


def particle_energy(x, v, potential_fn, time: float = 0.0) -> EnergyRecord:
    """Single-particle energy 1/2 |v|^2 + phi(x) for an analytic potential."""
    v = np.asarray(v, float)
    return EnergyRecord(time, 0.5 * float(v @ v), float(potential_fn(x)))


def poisson_matrix(ensemble: ParticleEnsemble, chart: CoordinateChart, b_field) -> np.ndarray:
    """Antisymmetric structure matrix of the discrete bracket (2D charts).

    Block layout over Z = (Y, V):
        [ 0                 W^{-1} N^T      ]
        [ -W^{-1} N   (1/eps) W^{-1} N Bhat N^T ]
    with per-particle blocks N(Y_s) and Bhat_s = b(F(Y_s)) K.
    """
    n_p = ensemble.n_particles
    d = chart.dim
    size = 2 * d * n_p
    out = np.zeros((size, size))
    for s in range(n_p):
        y = ensemble.y[s]
        a = ensemble.alpha[s]
        n = n_matrix(chart, y)
        b = b_field.b_at_y(chart, y)
        top = slice(d * s, d * (s + 1))
        bot = slice(d * n_p + d * s, d * n_p + d * (s + 1))
        out[top, bot] = n.T / a
        out[bot, top] = -n / a
        out[bot, bot] = (n @ (b * K2) @ n.T) / (a * b_field.epsilon)
    return out


def jacobi_residual(
    ensemble: ParticleEnsemble, chart: CoordinateChart, b_field, h: float = 1e-6
) -> float:
    """Max residual of the Jacobi identity for the structure matrix,
    with dK/dZ by central finite differences (K depends on Y only)."""
    n_p = ensemble.n_particles
    d = chart.dim
    ny = d * n_p
    size = 2 * ny

    def k_of(yflat):
        ens = ParticleEnsemble(
            yflat.reshape(n_p, d), ensemble.v, ensemble.alpha, ensemble.active
        )
        return poisson_matrix(ens, chart, b_field)

    y0 = ensemble.y.ravel().astype(float)
    k0 = k_of(y0)
    dk = np.zeros((size, size, size))  # dK_ij / dZ_l, nonzero only l < ny
    for l in range(ny):
        e = np.zeros(ny)
        e[l] = h
        dk[:, :, l] = (k_of(y0 + e) - k_of(y0 - e)) / (2.0 * h)
    # T_ijk = sum_l dK_ij/dZ_l K_lk + cyclic
    t = (
        np.einsum("ijl,lk->ijk", dk, k0)
        + np.einsum("jkl,li->ijk", dk, k0)
        + np.einsum("kil,lj->ijk", dk, k0)
    )
    return float(np.max(np.abs(t)))


def hat_matrix(b_vec) -> np.ndarray:
    """Cross-product matrix of B = (b1, b2, b3):
    [[0, b3, -b2], [-b3, 0, b1], [b2, -b1, 0]]."""
    b1, b2, b3 = np.asarray(b_vec, float)
    return np.array([[0.0, b3, -b2], [-b3, 0.0, b1], [b2, -b1, 0.0]])


def hat_matrix_checks(b_vec, n_samples: int = 20, seed: int = 0) -> dict:
    """Residuals of Bhat^3 = -b^2 Bhat and (B.y) B = Bhat^2 y + b^2 y."""
    b = np.asarray(b_vec, float)
    bh = hat_matrix(b)
    b2 = float(b @ b)
    res_cubic = float(np.max(np.abs(bh @ bh @ bh + b2 * bh)))
    rng = np.random.default_rng(seed)
    res_proj = 0.0
    for _ in range(n_samples):
        y = rng.standard_normal(3)
        lhs = (b @ y) * b
        rhs = bh @ bh @ y + b2 * y
        res_proj = max(res_proj, float(np.max(np.abs(lhs - rhs))))
    return {"cubic_identity": res_cubic, "projection_identity": res_proj}


@dataclass(frozen=True)
class DensityGrid:
    """Node-centered estimate of r * rho_tilde on the (n_r+1, n_theta) grid."""

    grid: PolarFemGrid
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return self.grid.dr * self.grid.dtheta


def density_grid(ensemble: ParticleEnsemble, grid: PolarFemGrid) -> DensityGrid:
    """CIC-bin active charge to nodes and divide by the (r, theta) cell area."""
    nodes = deposit_nodes(ensemble, grid)
    return DensityGrid(grid, nodes / (grid.dr * grid.dtheta))


def theta_mode_amplitudes(density: DensityGrid, max_mode: int) -> np.ndarray:
    """Relative amplitudes |c_m| / |c_0| of the radially integrated theta profile.

    Two-sided DFT convention: a profile 1 + a*cos(m theta) gives amplitude a/2
    at mode m. Modes 0..max_mode are returned.
    """
    if max_mode >= density.grid.n_theta // 2:
        raise ValueError("max_mode must be below the theta Nyquist mode")
    profile = np.trapezoid(density.values, dx=density.grid.dr, axis=0)
    c = np.fft.rfft(profile)
    c0 = abs(c[0])
    if c0 == 0.0:
        return np.zeros(max_mode + 1)
    return np.abs(c[: max_mode + 1]) / c0


def trajectory_error(y_num, y_ref) -> dict:
    """Componentwise final error and max-over-time Euclidean error."""
    y_num = np.asarray(y_num, float)
    y_ref = np.asarray(y_ref, float)
    if y_num.shape != y_ref.shape:
        raise ValueError(f"shape mismatch {y_num.shape} vs {y_ref.shape}")
    diff = y_num - y_ref
    return {
        "final": np.abs(diff[-1]),
        "max_euclidean": float(np.max(np.linalg.norm(diff, axis=-1))),
    }
