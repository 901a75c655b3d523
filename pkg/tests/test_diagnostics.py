"""Energy bookkeeping, bracket-structure checks, and spectral diagnostics."""

import numpy as np
import pytest

from curvpic import diagnostics
from curvpic.diagnostics import (
    DensityGrid,
    density_grid,
    hat_matrix,
    hat_matrix_checks,
    jacobi_residual,
    particle_energy,
    poisson_matrix,
    theta_mode_amplitudes,
    total_energy,
    trajectory_error,
)
from curvpic.fields import PolarFemGrid, assemble_stiffness, make_benchmark_field, solve_poisson
from curvpic.geometry import chart_polar
from curvpic.pic import DiocotronParams, ParticleEnsemble, deposit_charge, sample_diocotron

GRID = PolarFemGrid(1.0, 4.0 * np.pi, 16, 16)
CHART = chart_polar(GRID.r0, GRID.r_max)


def test_total_energy_terms():
    ens = sample_diocotron(DiocotronParams(), 500, seed=1)
    stiff = assemble_stiffness(GRID)
    coeffs = solve_poisson(stiff, deposit_charge(ens, GRID))
    rec = total_energy(ens, stiff, coeffs, time=2.5)
    kin = 0.5 * np.sum(ens.alpha * np.sum(ens.v**2, axis=1))
    pot = 0.5 * coeffs.values @ (stiff.matrix @ coeffs.values)
    assert rec.time == 2.5
    assert rec.kinetic == pytest.approx(kin)
    assert rec.potential == pytest.approx(pot)
    assert rec.total == pytest.approx(kin + pot)
    assert rec.potential > 0


def test_particle_energy():
    rec = particle_energy([1.0, 0.0], [0.0, 2.0], lambda x: 7.0)
    assert rec.kinetic == pytest.approx(2.0)
    assert rec.potential == pytest.approx(7.0)


def test_poisson_matrix_antisymmetric():
    rng = np.random.default_rng(3)
    fieldm = make_benchmark_field(0.5)
    for n_p in (1, 2, 3):
        y = np.column_stack([rng.uniform(1.0, 5.0, n_p), rng.uniform(0, 2 * np.pi, n_p)])
        ens = ParticleEnsemble(y, np.zeros((n_p, 2)), rng.uniform(0.5, 2.0, n_p),
                               np.ones(n_p, bool))
        k = poisson_matrix(ens, CHART, fieldm)
        assert k.shape == (4 * n_p, 4 * n_p)
        assert np.max(np.abs(k + k.T)) < 1e-12


def test_poisson_matrix_block_values():
    fieldm = make_benchmark_field(0.25)
    y = np.array([[2.0, 0.7]])
    a = np.array([1.5])
    ens = ParticleEnsemble(y, np.zeros((1, 2)), a, np.ones(1, bool))
    k = poisson_matrix(ens, CHART, fieldm)
    from curvpic.geometry import K2, n_matrix
    n = n_matrix(CHART, y[0])
    b = fieldm.b_at_y(CHART, y[0])
    assert np.allclose(k[:2, 2:], n.T / a[0])
    assert np.allclose(k[2:, :2], -n / a[0])
    assert np.allclose(k[2:, 2:], n @ (b * K2) @ n.T / (a[0] * 0.25))


def test_jacobi_identity_single_particle():
    fieldm = make_benchmark_field(1.0)
    ens = ParticleEnsemble(np.array([[3.0, 1.0]]), np.zeros((1, 2)),
                           np.ones(1), np.ones(1, bool))
    assert jacobi_residual(ens, CHART, fieldm) < 1e-5


def test_hat_matrix_identities():
    rng = np.random.default_rng(8)
    for _ in range(10):
        b = rng.standard_normal(3)
        bh = hat_matrix(b)
        assert np.allclose(bh + bh.T, 0.0)
        assert np.allclose(bh @ b, 0.0, atol=1e-14)
        checks = hat_matrix_checks(b)
        assert checks["cubic_identity"] < 1e-13 * max(1.0, np.linalg.norm(b) ** 3) * 100
        assert checks["projection_identity"] < 1e-12


def test_hat_matrix_cross_product():
    b = np.array([1.0, 2.0, 3.0])
    y = np.array([0.5, -1.0, 2.0])
    assert np.allclose(hat_matrix(b) @ y, -np.cross(b, y))


def test_density_grid_scaling():
    ens = sample_diocotron(DiocotronParams(), 2000, seed=6)
    d = density_grid(ens, GRID)
    assert d.values.shape == (GRID.n_r + 1, GRID.n_theta)
    assert np.isclose(d.values.sum() * d.cell_area, ens.active_charge)


def test_theta_mode_amplitudes_synthetic():
    # profile 1 + 0.3 cos(4 theta), uniform in r: expect amplitude 0.15 at m=4
    th = GRID.theta_nodes
    prof = 1.0 + 0.3 * np.cos(4.0 * th)
    vals = np.repeat(prof[None, :], GRID.n_r + 1, axis=0)
    amps = theta_mode_amplitudes(DensityGrid(GRID, vals), max_mode=6)
    assert amps[0] == pytest.approx(1.0)
    assert amps[4] == pytest.approx(0.15, abs=1e-12)
    assert np.all(amps[[1, 2, 3, 5, 6]] < 1e-12)


def test_theta_mode_amplitudes_nyquist_guard():
    vals = np.ones((GRID.n_r + 1, GRID.n_theta))
    with pytest.raises(ValueError):
        theta_mode_amplitudes(DensityGrid(GRID, vals), max_mode=GRID.n_theta // 2)


def test_trajectory_error():
    a = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    b = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
    out = trajectory_error(a, b)
    assert np.allclose(out["final"], [0.0, 0.5])
    assert out["max_euclidean"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        trajectory_error(a, b[:2])
