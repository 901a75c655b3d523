"""Acceptance gate: one test (and one printed pass/fail line) per criterion.

Run with `pytest -v -s tests/test_acceptance.py` to see the per-criterion
lines; with plain `pytest -v` the test names themselves carry the verdicts.
"""

import numpy as np
import pytest

from curvpic import diagnostics, experiments as ex, geometry, pushers
from curvpic.fields import (
    PolarFemGrid,
    assemble_stiffness,
    cubic_potential,
    make_benchmark_field,
    make_cubic_potential_field,
    manufactured_errors,
    solve_poisson,
)
from curvpic.geometry import K2, chart_identity, chart_polar
from curvpic.pic import (
    DiocotronParams,
    ParticleEnsemble,
    apply_boundary,
    deposit_charge,
    pic_step,
    push_ensemble,
    sample_diocotron,
)
from curvpic.pushers import SchemeParams, rotation_inverse


def _report(num, name, ok, detail):
    print(f"CRITERION {num} ({name}): {'PASS' if ok else 'FAIL'} — {detail}")


def test_criterion_1_ap_rate_in_eps():
    """Slope of max-error vs eps=2^-m, m=2..10: 1.0+-0.2 raw, 2.0+-0.2 prepared."""
    results = {}
    ok = True
    for scheme in ("apsi1", "apsi2"):
        for prepared, target, tol in ((False, 1.0, 0.2), (True, 2.0, 0.2)):
            eps, errs = ex.ap_error_sweep(scheme, m_values=range(2, 11),
                                          dt=0.1, t_final=10.0, prepared=prepared)
            slope = ex.fit_loglog_slope(eps, errs)
            key = f"{scheme}/{'prepared' if prepared else 'raw'}"
            results[key] = slope
            ok &= abs(slope - target) <= tol
    detail = ", ".join(f"{k}={v:.3f}" for k, v in results.items())
    _report(1, "AP rate in eps", ok, detail)
    assert ok, detail


def test_criterion_2_order_in_dt():
    """Final-time order vs the Boris reference: APSI1 1.0+-0.2, APSI2 2.0+-0.3."""
    cases = [
        ("apsi1", 1e-2, np.pi / 20, 1.0, 0.2),
        ("apsi1", 1e-3, np.pi / 20, 1.0, 0.2),
        ("apsi2", 1e-3, np.pi / 5, 2.0, 0.3),
        ("apsi2", 1e-4, np.pi / 5, 2.0, 0.3),
    ]
    ok = True
    parts = []
    for scheme, eps, base, target, tol in cases:
        dts, _, _, ee = ex.dt_order_sweep(scheme, eps, base, t_final=np.pi)
        slope = ex.fit_loglog_slope(dts, ee)
        parts.append(f"{scheme}@eps={eps:g}: {slope:.3f}")
        ok &= abs(slope - target) <= tol
    detail = ", ".join(parts)
    _report(2, "order in dt", ok, detail)
    assert ok, detail


def test_criterion_3_rotation_inverse():
    """(I - beta K) rotation_inverse(beta) = I to 1e-14 for 1000 random betas."""
    rng = np.random.default_rng(0)
    worst = 0.0
    for b in rng.uniform(-1e6, 1e6, 1000):
        m = (np.eye(2) - b * K2) @ rotation_inverse(b)
        worst = max(worst, float(np.max(np.abs(m - np.eye(2)))))
    ok = worst < 1e-14
    _report(3, "closed-form inverse", ok, f"max residual {worst:.2e}")
    assert ok


def test_criterion_4_structure_checks():
    """Bracket antisymmetry, FD Jacobi identity, hat-matrix identities."""
    rng = np.random.default_rng(12)
    chart = chart_polar()
    fieldm = make_benchmark_field(1.0)

    skew = 0.0
    for _ in range(10):
        n_p = int(rng.integers(1, 4))
        y = np.column_stack([rng.uniform(1.0, 5.0, n_p), rng.uniform(0, 2 * np.pi, n_p)])
        ens = ParticleEnsemble(y, np.zeros((n_p, 2)), rng.uniform(0.5, 2.0, n_p),
                               np.ones(n_p, bool))
        k = diagnostics.poisson_matrix(ens, chart, fieldm)
        skew = max(skew, float(np.max(np.abs(k + k.T))))

    jac = 0.0
    for _ in range(5):
        y = np.array([[rng.uniform(1.0, 5.0), rng.uniform(0, 2 * np.pi)]])
        ens = ParticleEnsemble(y, np.zeros((1, 2)), np.ones(1), np.ones(1, bool))
        jac = max(jac, diagnostics.jacobi_residual(ens, chart, fieldm))

    cubic = proj = 0.0
    for _ in range(20):
        checks = diagnostics.hat_matrix_checks(rng.standard_normal(3),
                                               seed=int(rng.integers(1 << 31)))
        cubic = max(cubic, checks["cubic_identity"])
        proj = max(proj, checks["projection_identity"])

    ok = skew < 1e-12 and jac < 1e-5 and cubic < 1e-13 and proj < 1e-13
    detail = f"skew {skew:.1e}, jacobi {jac:.1e}, hat {cubic:.1e}/{proj:.1e}"
    _report(4, "structure checks", ok, detail)
    assert ok, detail


def test_criterion_5_fem_correctness():
    """Manufactured-solution L2 order 2.0+-0.2 on 16->32->64; residual <= 1e-10."""
    errs = manufactured_errors(1.0, 4.0 * np.pi, (16, 32, 64))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    order_ok = bool(np.all(np.abs(orders - 2.0) <= 0.2))
    # residual bound is enforced inside solve_poisson; check directly too
    g = PolarFemGrid(1.0, 4.0 * np.pi, 32, 32)
    s = assemble_stiffness(g)
    rhs = np.random.default_rng(2).standard_normal(g.n_dofs)
    c = solve_poisson(s, rhs)
    res = np.linalg.norm(s.matrix @ c.values - rhs) / np.linalg.norm(rhs)
    ok = order_ok and res <= 1e-10
    detail = f"orders {orders[0]:.3f}, {orders[1]:.3f}; rel residual {res:.1e}"
    _report(5, "FEM correctness", ok, detail)
    assert ok, detail


def test_criterion_6_energy_stability():
    """Cubic field, eps=2^-8, dt=0.1, T=0.5/sqrt(eps): relative total-energy
    variation after step 1 stays below 5%."""
    eps = 2.0**-8
    fieldm = make_cubic_potential_field(eps)
    t_final = 0.5 / np.sqrt(eps)
    _, _, kin, pot = ex.energy_series(chart_identity(), fieldm, cubic_potential,
                                      "apsi1", ex.CUBIC_Y0, ex.SINGLE_V0, 0.1, t_final)
    tot = kin + pot
    rel = np.abs(tot[1:] - tot[1]) / abs(tot[1])
    ok = bool(np.all(np.isfinite(rel)) and rel.max() < 0.05)
    _report(6, "energy stability", ok, f"max relative variation {rel.max():.4f}")
    assert ok


def test_criterion_7_diocotron():
    """eps=0.01: mode-5 grows on [5,20] and dominates at t=20; alpha=0 control
    shows no dominance; eps=1 loses >= 10% of charge by T=2."""
    grid = PolarFemGrid(1.0, 4.0 * np.pi, 64, 64)
    dioc = DiocotronParams(l=5, alpha_perturb=0.2)

    res = ex.diocotron_run(dioc, grid, 0.01, 0.1, 20.0, 200_000,
                           seed=42, collect_every=5)
    m5 = res.modes[:, 5]
    sel = (res.times >= 5.0) & (res.times <= 20.0)
    growth = m5[sel]
    grows = bool(np.all(np.diff(growth) > -1e-4) and growth[-1] > 1.5 * growth[0])
    final = res.modes[-1, 1:9]
    dominant = bool(np.argmax(final) + 1 == 5)

    ctrl = ex.diocotron_run(DiocotronParams(l=5, alpha_perturb=0.0), grid, 0.01,
                            0.1, 20.0, 200_000, seed=42, collect_every=10)
    ctrl_final = ctrl.modes[-1, 1:9]
    ctrl_clean = bool(ctrl_final[4] < 0.2 * final[4])

    loss_run = ex.diocotron_run(dioc, grid, 1.0, 0.1, 2.0, 200_000,
                                seed=42, collect_every=5)
    frac = 1.0 - loss_run.active_charge[-1] / loss_run.active_charge[0]
    loss_ok = bool(frac >= 0.10)

    ok = grows and dominant and ctrl_clean and loss_ok
    detail = (f"mode5 {growth[0]:.3f}->{growth[-1]:.3f} grows={grows}, "
              f"dominant={dominant}, control mode5 {ctrl_final[4]:.3f} clean={ctrl_clean}, "
              f"eps=1 charge loss {frac:.4f} (>=0.10: {loss_ok}; known red — "
              f"see the decisions ledger: measured physics saturates near 1%)")
    _report(7, "diocotron desk-scale", ok, detail)
    assert ok, detail


def test_criterion_8_oracle_equivalence():
    """pic_step equals the manual deposit/solve/push/boundary compose bitwise."""
    grid = PolarFemGrid(1.0, 4.0 * np.pi, 16, 16)
    chart = chart_polar(grid.r0, grid.r_max)
    params = SchemeParams(0.05, 0.1)
    stiff = assemble_stiffness(grid)
    ens_a = sample_diocotron(DiocotronParams(), 1, seed=3)
    ens_b = ens_a.copy()
    ok = True
    for _ in range(10):
        res = pic_step(ens_a, grid, chart, params, "apsi1", "deactivate",
                       stiffness=stiff)
        ens_a = res.ensemble
        coeffs = solve_poisson(stiff, deposit_charge(ens_b, grid))
        ens_b = apply_boundary(push_ensemble(ens_b, coeffs, grid, params, "apsi1"),
                               grid, "deactivate")
        ok &= bool(np.array_equal(ens_a.y, ens_b.y)
                   and np.array_equal(ens_a.v, ens_b.v)
                   and np.array_equal(ens_a.active, ens_b.active))
    _report(8, "oracle equivalence", ok, "bitwise over 10 steps")
    assert ok
