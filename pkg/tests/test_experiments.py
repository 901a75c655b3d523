"""Experiment drivers: sweeps, references, and the diocotron loop (small sizes)."""

import numpy as np
import pytest

from curvpic import experiments as ex
from curvpic.fields import PolarFemGrid
from curvpic.geometry import chart_identity
from curvpic.fields import make_benchmark_field
from curvpic.pic import DiocotronParams


def test_cartesian_to_polar_and_wrap():
    y = ex.cartesian_to_polar([0.0, -2.0])
    assert np.isclose(y[0], 2.0)
    assert np.isclose(y[1], 1.5 * np.pi)
    assert ex.wrap_angle_diff(0.1, 2 * np.pi - 0.1) == pytest.approx(0.2)
    assert ex.wrap_angle_diff(-0.1, 0.1) == pytest.approx(-0.2)


def test_simulate_scheme_shapes():
    fieldm = make_benchmark_field(0.25)
    ys, vs = ex.simulate_scheme(chart_identity(), fieldm, "apsi1",
                                ex.SINGLE_Y0, ex.SINGLE_V0, 0.1, 1.0)
    assert ys.shape == (11, 2) and vs.shape == (11, 2)
    assert np.allclose(ys[0], ex.SINGLE_Y0)


def test_boris_reference_step_cap():
    with pytest.raises(RuntimeError):
        ex.boris_reference_final(chart_identity(), 0, 1e-6, ex.SINGLE_Y0,
                                 ex.SINGLE_V0, 10.0)


def test_boris_reference_identity_vs_polar():
    from curvpic.geometry import chart_polar
    eps = 0.05
    y_id, x_id, _ = ex.boris_reference_final(chart_identity(), 0, eps,
                                             ex.SINGLE_Y0, ex.SINGLE_V0, 0.5)
    y0_pol = ex.cartesian_to_polar(ex.SINGLE_Y0)
    y_pol, x_pol, _ = ex.boris_reference_final(chart_polar(), 0, eps,
                                               y0_pol, ex.SINGLE_V0, 0.5)
    assert np.allclose(x_id, x_pol, atol=1e-12)
    assert np.isclose(y_pol[0], np.hypot(*x_id))


def test_fit_loglog_slope():
    xs = np.array([1.0, 0.5, 0.25])
    assert ex.fit_loglog_slope(xs, 3.0 * xs**2) == pytest.approx(2.0)


def test_ap_sweep_short():
    eps, errs = ex.ap_error_sweep("apsi1", m_values=(3, 5, 7), dt=0.1, t_final=2.0)
    assert eps.shape == errs.shape == (3,)
    assert np.all(errs > 0)
    # errors shrink with eps
    assert errs[-1] < errs[0]


def test_dt_sweep_short():
    dts, e1, e2, ee = ex.dt_order_sweep("apsi1", 1e-2, np.pi / 20, n_refine=3,
                                        t_final=np.pi / 4)
    assert len(dts) == 3
    assert ee[-1] < ee[0]


def test_diocotron_run_bookkeeping():
    grid = PolarFemGrid(1.0, 4 * np.pi, 16, 16)
    res = ex.diocotron_run(DiocotronParams(), grid, 0.05, 0.1, 0.5, 2000,
                           seed=5, snapshot_times=(0.3,), collect_every=1,
                           max_mode=7)
    assert res.times[0] == 0.0 and np.isclose(res.times[-1], 0.5)
    assert res.modes.shape[1] == 8
    assert 0.3 in res.snapshots
    assert len(res.energy) == 5          # one record per collected step > 0
    assert res.active_charge[0] >= res.active_charge[-1]


def test_diocotron_run_deterministic():
    grid = PolarFemGrid(1.0, 4 * np.pi, 16, 16)
    kw = dict(seed=5, collect_every=1, max_mode=7)
    a = ex.diocotron_run(DiocotronParams(), grid, 0.05, 0.1, 0.3, 1000, **kw)
    b = ex.diocotron_run(DiocotronParams(), grid, 0.05, 0.1, 0.3, 1000, **kw)
    assert np.array_equal(a.ensemble.y, b.ensemble.y)
    assert np.array_equal(a.modes, b.modes)


def test_diocotron_gc_run_matches_shapes():
    grid = PolarFemGrid(1.0, 4 * np.pi, 16, 16)
    res = ex.diocotron_gc_run(DiocotronParams(), grid, 0.1, 0.3, 1000, seed=5,
                              kind="gc_rk2", snapshot_times=(0.2,), max_mode=7)
    assert res.modes.shape[1] == 8
    assert 0.2 in res.snapshots
    assert res.energy == []


def test_energy_series_cubic_survival():
    from curvpic.fields import make_cubic_potential_field, cubic_potential
    eps = 2.0**-8
    fieldm = make_cubic_potential_field(eps)
    ys, vs, kin, pot = ex.energy_series(chart_identity(), fieldm, cubic_potential,
                                        "apsi1", ex.CUBIC_Y0, ex.SINGLE_V0, 0.1, 4.0)
    assert np.all(np.isfinite(ys))
    tot = kin + pot
    assert np.all(np.isfinite(tot))
