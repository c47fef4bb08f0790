import math

import numpy as np
import pytest

from _systems import HALF_PI
from shapemap import collapse as col
from shapemap.expr import VariableLayout
from shapemap.geometry import make_congruence, make_system, unit_direction

EXP = VariableLayout(["x1", "x2"], ["y"])


def test_steps_for():
    assert col.steps_for(1.0, 0.25) == [0.25] * 4
    assert col.steps_for([0, 1.0], 0.25) == [0.25] * 4
    st = col.steps_for(1.0, 0.3)
    assert st[:3] == [0.3] * 3 and st[3] == pytest.approx(0.1)
    assert col.steps_for(-0.5, 0.2) == pytest.approx([-0.2, -0.2, -0.1])
    assert col.steps_for(0, 0.1) == []
    assert sum(col.steps_for(3.0, 1e-3)) == pytest.approx(3.0, abs=1e-9)
    with pytest.raises(ValueError):
        col.steps_for(1.0, 0)
    with pytest.raises(ValueError):
        col.steps_for([0.5, 1.0], 0.1)


def test_rk4_step_exact_for_cubic():
    f = lambda y: np.array([3 * y[1] ** 2, 1.0])
    y = col.rk4_step(f, np.array([0.0, 0.0]), 0.5)
    assert y[0] == pytest.approx(0.125, abs=1e-15)


def test_lemniscate_curve(lem_parts):
    _, Z, dt, _ = lem_parts
    r0 = 1.3
    curve = col.integrate_curve(Z, dt, [HALF_PI, 0.2, r0], 1.0, 1e-3)
    assert curve.reason == col.SPAN_EXHAUSTED
    assert len(curve.s) == 1001
    want = r0 * np.sin(HALF_PI + curve.s)
    assert np.max(np.abs(curve.points[:, 2] - want)) <= 1e-10
    assert np.allclose(curve.points[:, 1], 0.2)


def test_exp2_curve(exp2):
    d = exp2.direction("x1").direction
    curve = col.integrate_curve(exp2.congruence, d, [0.0, 0.0, 1.0], 1.0, 1e-3)
    assert np.max(np.abs(curve.points[:, 2] - np.exp(curve.s))) <= 1e-10
    assert np.allclose(curve.points[:, 0], curve.s, atol=1e-13)


def test_zero_congruence_curve():
    Z = make_congruence(EXP, {("y", "x1"): "0", ("y", "x2"): "0"})
    d = unit_direction(EXP, "x2")
    curve = col.integrate_curve(Z, d, [0.5, 0.0, 3.0], 0.7, 0.1)
    assert np.all(curve.points[:, 2] == 3.0)
    assert np.allclose(curve.points[:, 1], curve.s)
    assert np.all(curve.points[:, 0] == 0.5)


def test_backward_curve(lem_parts):
    _, Z, dt, _ = lem_parts
    curve = col.integrate_curve(Z, dt, [HALF_PI, 0.0, 1.0], -1.0, 1e-3)
    assert curve.s[-1] == pytest.approx(-1.0)
    assert np.max(np.abs(curve.points[:, 2] - np.sin(HALF_PI + curve.s))) <= 1e-10


def test_curve_stops_on_domain_error():
    Z = make_congruence(EXP, {("y", "x1"): "1/(1 - x1)", ("y", "x2"): "0"})
    d = unit_direction(EXP, "x1")
    curve = col.integrate_curve(Z, d, [0.0, 0.0, 0.0], 2.0, 0.25)
    assert curve.reason == col.DOMAIN_ERROR
    assert curve.s[-1] == pytest.approx(0.75)
    assert "division" in curve.message
    sys = make_system(2, 1, EXP, {})
    rep = col.collapse_scan(sys, Z, d, [0.0, 0.0, 0.0], 2.0, h=0.25)
    assert not rep.detected and rep.reason == col.DOMAIN_ERROR
    assert rep.samples[-1].s == pytest.approx(0.75)
    assert rep.s_extrapolated is None


def test_mu_lemniscate_t_is_constant(lem_parts):
    sys, Z, dt, _ = lem_parts
    curve = col.integrate_curve(Z, dt, [HALF_PI, 0.3, 1.0], 1.0, 1e-2)
    mu = col.mu_factor(sys, Z, dt, curve, mu0=2.5)
    assert np.max(np.abs(mu - 2.5)) <= 1e-12


def test_mu_lemniscate_theta(lem_parts):
    sys, Z, _, dth = lem_parts
    curve = col.integrate_curve(Z, dth, [1.0, 0.0, 1.0], 0.7, 1e-3)
    mu = col.mu_factor(sys, Z, dth, curve)
    want = np.sqrt(np.cos(2 * curve.s))
    assert np.max(np.abs(mu - want)) <= 1e-8


def test_mu_exp2(exp2):
    d = exp2.direction().direction
    curve = col.integrate_curve(exp2.congruence, d, [0.0, 0.0, 1.0], 1.0, 1e-2)
    assert np.all(col.mu_factor(exp2.system, exp2.congruence, d, curve, 0.5) == 0.5)


def test_scan_lemniscate_t(lem_parts):
    sys, Z, dt, _ = lem_parts
    rep = col.collapse_scan(sys, Z, dt, [HALF_PI, 0.2, 1.0], 3.0, h=1e-3)
    assert rep.detected and rep.reason in (col.TRACE_BLOWUP, col.VOLUME_THRESHOLD)
    assert abs(rep.s_extrapolated + HALF_PI - math.pi) <= 1e-3
    assert rep.s_detect <= rep.s_extrapolated + 1e-3
    t = HALF_PI + rep.s
    ok = t <= 2.8
    assert np.max(np.abs(rep.logVolume[ok] - np.log(np.sin(t[ok])))) <= 1e-6
    assert all(smp.mu == 1.0 for smp in rep.samples)
    assert rep.samples[0].logVolume == 0.0


def test_scan_lemniscate_theta(lem_parts):
    sys, Z, _, dth = lem_parts
    rep = col.collapse_scan(sys, Z, dth, [1.0, 0.0, 1.0], 1.5, h=1e-3)
    assert rep.detected
    assert abs(rep.s_extrapolated - math.pi / 4) <= 1e-3
    ok = rep.s <= 0.7
    assert np.max(np.abs(rep.logVolume[ok] - np.log(np.cos(2 * rep.s[ok])))) <= 1e-6


def test_scan_exp2_not_detected(exp2):
    d = exp2.direction().direction
    rep = col.collapse_scan(exp2.system, exp2.congruence, d, [0.0, 0.0, 1.0], 10.0, h=1e-2)
    assert not rep.detected and rep.reason == col.SPAN_EXHAUSTED
    assert rep.s_detect is None and rep.s_extrapolated is None
    assert np.max(np.abs(rep.logVolume - 2 * rep.s)) <= 1e-8
    assert rep.s[-1] == pytest.approx(10.0)


def test_log_volume_derivative_matches_trace(lem_parts):
    sys, Z, dt, _ = lem_parts
    h = 1e-3
    rep = col.collapse_scan(sys, Z, dt, [HALF_PI, 0.0, 1.0], 0.9, h=h)
    L = rep.logVolume
    C = np.array([smp.C for smp in rep.samples])
    dL = (L[2:] - L[:-2]) / (2 * h)
    assert np.max(np.abs(dL - C[1:-1])) <= 10 * h * h


def test_volume_threshold_monotone(lem_parts):
    sys, Z, dt, _ = lem_parts
    found = []
    for vmin in (1e-1, 1e-2, 1e-3):
        rep = col.collapse_scan(sys, Z, dt, [HALF_PI, 0.0, 1.0], 3.0, h=5e-3, vol_min=vmin, C_big=1e12, C_max=1e15)
        assert rep.reason == col.VOLUME_THRESHOLD
        assert rep.logVolume[-1] <= math.log(vmin)
        found.append(rep.s_detect)
    assert found == sorted(found)
    # exp(L) = sin t, so the first crossing sits just past arcsin(vmin) from π
    assert found[0] + HALF_PI == pytest.approx(math.pi - math.asin(0.1), abs=1e-2)


def test_extrapolate():
    mk = lambda s, C: col.CurveSample(s, None, C, 0.0, 1.0)
    # C = 1/(s - 2): secant on 1/C is exact
    smp = [mk(1.998, 1 / (1.998 - 2)), mk(1.999, 1 / (1.999 - 2))]
    assert col.extrapolate(smp, 1e2) == pytest.approx(2.0, abs=1e-12)
    assert col.extrapolate(smp, 1e4) is None
    assert col.extrapolate(smp[:1], 1.0) is None


def test_integrator_fourth_order(lem_parts):
    _, Z, dt, _ = lem_parts
    span = 2.8 - HALF_PI
    errs = []
    for h in (0.1, 0.05):
        c = col.integrate_curve(Z, dt, [HALF_PI, 0.0, 1.0], span, h)
        errs.append(np.max(np.abs(c.points[:, 2] - np.sin(HALF_PI + c.s))))
    assert errs[0] / errs[1] >= 14


def test_initial_points(lemniscate):
    lay = lemniscate.layout
    pts = col.initial_points(lay, "theta", [0.0, 0.5, 1.0], {"t": HALF_PI}, {"r": "sqrt(cos(2*theta))"})
    assert pts[0][1].y == (1.0,)
    assert pts[1][1].y[0] == pytest.approx(math.sqrt(math.cos(1.0)))
    assert pts[2][1] is None


def test_surface_exp2(exp2):
    d = exp2.direction("x1").direction
    labels = np.linspace(-0.5, 0.5, 5)
    starts = col.initial_points(exp2.layout, "x2", labels, {"x1": 0.0}, {"y": "exp(2*x2)"})
    rows = col.surface_sample(exp2.congruence, d, starts, (-0.5, 1.0), 1e-2, stride=10)
    assert len(rows) == 5 * 16
    for s, label, p in rows:
        assert p[0] == pytest.approx(s, abs=1e-12)
        assert p[2] == pytest.approx(math.exp(p[0] + 2 * label), rel=1e-9)


def test_surface_lemniscate(lemniscate):
    sf = lemniscate.surface
    d = lemniscate.direction(sf.direction).direction
    values = np.linspace(-1.0, 1.0, 9)
    starts = col.initial_points(lemniscate.layout, sf.variable, values, sf.base, sf.initial)
    rows = col.surface_sample(lemniscate.congruence, d, starts, (-0.5, 0.5), 0.01, 10)
    err = max(abs(p[2] - math.sin(p[0]) * math.sqrt(math.cos(2 * label))) for _, label, p in rows)
    assert err <= 1e-6
    emitted = sorted({label for _, label, _ in rows})
    assert emitted == [th for th in values if math.cos(2 * th) >= 0]
    assert len(rows) == len(emitted) * 11


def test_surface_flat_for_zero_congruence():
    Z = make_congruence(EXP, {("y", "x1"): "0", ("y", "x2"): "0"})
    starts = col.initial_points(EXP, "x2", [0.0, 1.0], {"x1": 0.0}, {"y": "x2"})
    rows = col.surface_sample(Z, unit_direction(EXP, 0), starts, 1.0, 0.1)
    assert all(p[2] == label for _, label, p in rows)


def test_coarse_step_over_pole_is_detected(lem_parts):
    sys, Z, _, dth = lem_parts
    rep = col.collapse_scan(sys, Z, dth, [1.0, 0.0, 1.0], 1.5, h=1e-2)
    assert rep.detected and rep.reason == col.TRACE_BLOWUP
    assert rep.s_detect < math.pi / 4
    assert all(smp.C < 0 for smp in rep.samples[1:])
    assert abs(rep.s_extrapolated - math.pi / 4) <= 1e-6


def test_smooth_sign_change_is_not_a_pole():
    # C = Tr A = x1 crosses zero slowly along x1
    sys = make_system(2, 1, EXP, {("y", "x1", "x1"): "y + x1^2*y", ("y", "x1", "x2"): "0", ("y", "x2", "x2"): "0"})
    Z = make_congruence(EXP, {("y", "x1"): "x1*y", ("y", "x2"): "0"})
    rep = col.collapse_scan(sys, Z, unit_direction(EXP, 0), [-1.0, 0.0, 1.0], 2.0, h=0.1)
    assert not rep.detected and rep.reason == col.SPAN_EXHAUSTED
    assert rep.logVolume[-1] == pytest.approx(0.0, abs=1e-12)
