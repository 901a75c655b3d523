"""Semi-implicit pushers, guiding-center steps, and initial-data helpers."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from curvpic import pushers
from curvpic.fields import make_benchmark_field
from curvpic.geometry import K2, chart_identity, chart_polar
from curvpic.pushers import (
    GAMMA,
    ParticleState,
    SchemeParams,
    apsi1_step,
    apsi2_step,
    boris_step,
    gc_euler_step,
    gc_modified_initial,
    gc_rk2_step,
    gc_velocity,
    rotation_inverse,
    well_prepared_velocity,
)

Y0 = np.array([0.36, 0.6])
V0 = np.array([-0.7, 0.08])


def _exact_final(eps, t_final, y0=Y0, v0=V0):
    """High-accuracy integration of the stiff characteristic system (identity
    chart, benchmark field) with an adaptive solver."""
    def rhs(t, z):
        x, v = z[:2], z[2:]
        b = 1.0 + eps * np.sin(np.hypot(*x))
        return np.concatenate([v / eps, (-x + (b / eps) * (K2 @ v)) / eps])

    sol = solve_ivp(rhs, [0.0, t_final], np.concatenate([y0, v0]),
                    rtol=1e-11, atol=1e-12, dense_output=False)
    return sol.y[:2, -1], sol.y[2:, -1]


def test_scheme_params_derived_ratios():
    p = SchemeParams(0.1, 0.5)
    assert p.tau == pytest.approx(0.2)
    assert p.lam == pytest.approx(0.4)
    with pytest.raises(ValueError):
        SchemeParams(-0.1, 0.5)
    with pytest.raises(ValueError):
        SchemeParams(0.1, 0.0)


def test_rotation_inverse_closed_form():
    rng = np.random.default_rng(1)
    for b in rng.uniform(-1e6, 1e6, 200):
        m = (np.eye(2) - b * K2) @ rotation_inverse(b)
        assert np.max(np.abs(m - np.eye(2))) < 1e-14


def test_apsi1_first_order_convergence():
    eps = 0.5
    t_final = 1.0
    chart = chart_identity()
    fieldm = make_benchmark_field(eps)
    y_ex, _ = _exact_final(eps, t_final)
    errs = []
    for n in (40, 80, 160):
        st = ParticleState(Y0, V0)
        params = SchemeParams(t_final / n, eps)
        for _ in range(n):
            st = apsi1_step(st, fieldm, chart, params)
        errs.append(np.linalg.norm(st.y - y_ex))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 0.8)


def test_apsi2_second_order_convergence():
    eps = 0.5
    t_final = 1.0
    chart = chart_identity()
    fieldm = make_benchmark_field(eps)
    y_ex, _ = _exact_final(eps, t_final)
    errs = []
    for n in (40, 80, 160):
        st = ParticleState(Y0, V0)
        params = SchemeParams(t_final / n, eps)
        for _ in range(n):
            st = apsi2_step(st, fieldm, chart, params)
        errs.append(np.linalg.norm(st.y - y_ex))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.7)


def test_apsi_schemes_agree_across_charts():
    # one step from the same physical point must agree between the identity
    # and polar charts after mapping back to Cartesian
    eps = 0.25
    fieldm = make_benchmark_field(eps)
    params = SchemeParams(0.01, eps)
    ident = chart_identity()
    polar = chart_polar()
    y_cart = np.array([0.36, 0.6])
    y_pol = np.array([np.hypot(*y_cart), np.arctan2(y_cart[1], y_cart[0])])
    for step in (apsi1_step, apsi2_step):
        a = step(ParticleState(y_cart, V0), fieldm, ident, params)
        b = step(ParticleState(y_pol, V0), fieldm, polar, params)
        xb = polar.forward(b.y)
        # the schemes are chart-dependent discretizations; agreement is to
        # O(dt^2) for one step, not exact
        assert np.allclose(a.y, xb, atol=2e-3)
        assert np.allclose(a.v, b.v, atol=2e-3)


def test_strong_field_damps_to_drift_manifold():
    # lam >> 1: after a few steps v approaches eps * K N Etilde / b
    eps = 2.0**-6
    chart = chart_identity()
    fieldm = make_benchmark_field(eps)
    params = SchemeParams(0.1, eps)
    st = ParticleState(Y0, V0)
    for _ in range(5):
        st = apsi1_step(st, fieldm, chart, params)
    v_drift = well_prepared_velocity(st.y, fieldm, chart)
    assert np.linalg.norm(st.v - v_drift) < 5e-3


def test_well_prepared_velocity_formula():
    eps = 0.1
    chart = chart_identity()
    fieldm = make_benchmark_field(eps)
    v = well_prepared_velocity(Y0, fieldm, chart)
    b = fieldm.b_at_y(chart, Y0)
    assert np.allclose(v, (eps / b) * (K2 @ (-Y0)), atol=1e-14)


def test_gc_velocity_polar_vs_identity():
    eps = 0.1
    fieldm = make_benchmark_field(eps)
    ident = chart_identity()
    polar = chart_polar()
    u_cart = np.array([0.5, 1.2])
    u_pol = np.array([np.hypot(*u_cart), np.arctan2(u_cart[1], u_cart[0])])
    g_cart = gc_velocity(u_cart, fieldm, ident)
    g_pol = gc_velocity(u_pol, fieldm, polar)
    # push the polar drift forward through DF to compare physical velocities
    df = polar.jacobian_matrix(u_pol)
    assert np.allclose(df @ g_pol, g_cart, atol=1e-12)


def test_gc_steps_converge_to_drift_flow():
    eps = 0.05
    chart = chart_identity()
    fieldm = make_benchmark_field(eps)
    t_final = 2.0

    def rhs(t, u):
        return gc_velocity(u, fieldm, chart)

    u_ex = solve_ivp(rhs, [0, t_final], Y0, rtol=1e-11, atol=1e-12).y[:, -1]
    for step, min_rate in ((gc_euler_step, 0.8), (gc_rk2_step, 1.7)):
        errs = []
        for n in (50, 100, 200):
            u = Y0.copy()
            dt = t_final / n
            for _ in range(n):
                u = step(u, fieldm, chart, dt)
            errs.append(np.linalg.norm(u - u_ex))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(rates > min_rate), (step.__name__, rates)


def test_gc_modified_initial_formula():
    eps = 0.1
    chart = chart_identity()
    fieldm = make_benchmark_field(eps)
    u0 = gc_modified_initial(Y0, V0, fieldm, chart)
    b = fieldm.b_at_y(chart, Y0)
    expect = Y0 + (eps / b) * (K2 @ V0 + (eps / b) * (-Y0))
    assert np.allclose(u0, expect, atol=1e-14)


def test_boris_step_matches_kernel_loop():
    from curvpic import kernels
    eps = 0.05
    fieldm = make_benchmark_field(eps)
    params = SchemeParams(1e-3, eps)
    x, v = Y0.copy(), V0.copy()
    for _ in range(50):
        x, v = boris_step(x, v, fieldm, params)
    xk, vk = kernels.boris_orbit(Y0, V0, eps, 1e-3, 50, 0)
    assert np.allclose(x, xk, atol=1e-12)
    assert np.allclose(v, vk, atol=1e-12)


def test_gamma_value():
    assert GAMMA == pytest.approx(1.0 - 1.0 / np.sqrt(2.0))
