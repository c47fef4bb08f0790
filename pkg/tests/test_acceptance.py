"""Acceptance criteria; each test prints one PASS/FAIL line."""

import math

import numpy as np
import pytest

from shapemap import collapse as col
from shapemap.config import random_base_points, random_jet_points, validation_grid
from shapemap.curvature import canonical_curvature, jacobi, jacobi_plus, vertical_identity_residuals
from shapemap.expr import DerivativeRequest, derivative, parse
from shapemap.geometry import commutator_residual, embedded_residual, h_trace_residual
from shapemap.shape import evolution_residual_directional, evolution_residual_total, shape_operator, total_shape
from test_expr import ABC, CORPUS, POINT, _dense, _fd1, _fd2

HALF_PI = math.pi / 2


@pytest.fixture()
def report(capsys):
    def emit(n, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:>2} {title}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def _v(d, u):
    return np.array([float(e(list(u))) for e in d.v])


def test_01_shape_traces(lemniscate, report):
    sys, Z = lemniscate.system, lemniscate.congruence
    dt, dth = lemniscate.direction("t").direction, lemniscate.direction("theta").direction
    err_t = max(abs(shape_operator(sys, Z, dt, [t, 0.1, 1.2]).trace - 1 / math.tan(t))
                for t in np.linspace(0.2, 3.0, 20))
    err_th = max(abs(shape_operator(sys, Z, dth, [1.1, th, 1.2]).trace + 2 * math.tan(2 * th))
                 for th in np.linspace(-0.7, 0.7, 22)[1:-1])
    report(1, "lemniscate shape traces", max(err_t, err_th) <= 1e-9, f"max error t {err_t:.2e}, theta {err_th:.2e}")


def test_02_volume_closed_form(lemniscate, report):
    cfg = lemniscate
    rep = col.collapse_scan(cfg.system, cfg.congruence, cfg.direction("t").direction, [HALF_PI, 0.2, 1.0], 3.0, h=1e-3)
    t = HALF_PI + rep.s
    ok = t <= 2.8
    err = float(np.max(np.abs(rep.logVolume[ok] - np.log(np.sin(t[ok])))))
    report(2, "log volume = log sin t", err <= 1e-6, f"max error {err:.2e} over {ok.sum()} samples")


def test_03_collapse_locations(lemniscate, report):
    cfg = lemniscate
    rt = col.collapse_scan(cfg.system, cfg.congruence, cfg.direction("t").direction, [HALF_PI, 0.2, 1.0], 3.0, h=1e-3)
    rth = col.collapse_scan(cfg.system, cfg.congruence, cfg.direction("theta").direction, [1.0, 0.0, 1.0], 1.5,
                            h=1e-3)
    et = abs(HALF_PI + rt.s_extrapolated - math.pi)
    eth = abs(rth.s_extrapolated - math.pi / 4)
    report(3, "collapse at t = pi and theta = pi/4", max(et, eth) <= 1e-3, f"errors {et:.2e}, {eth:.2e}")


def test_04_embeddedness(lemniscate, exp2, report):
    worst = 0.0
    count = 0
    for cfg in (lemniscate, exp2):
        for b in validation_grid(cfg, cfg.direction()):
            worst = max(worst, embedded_residual(cfg.system, cfg.congruence, b), commutator_residual(cfg.congruence, b))
            count += 1
    report(4, "embeddedness on 5x5x5 grids", worst <= 1e-12, f"max residual {worst:.2e} at {count} points")


def test_05_identity_and_evolution_residuals(lemniscate, exp2, report):
    worst = {}
    for cfg in (lemniscate, exp2):
        jets = random_jet_points(cfg, 100, cfg.run["seed"])
        bases = random_base_points(cfg, 100, cfg.run["seed"])
        for name in cfg.directions:
            d = cfg.direction(name).direction
            for p in jets:
                for k, v in vertical_identity_residuals(cfg.system, d, p).items():
                    worst[k] = max(worst.get(k, 0.0), v)
            for b in bases:
                r1 = float(np.max(np.abs(evolution_residual_directional(cfg.system, cfg.congruence, d, b))))
                r2 = float(np.max(np.abs(evolution_residual_total(cfg.system, cfg.congruence, d, b))))
                worst["directional"] = max(worst.get("directional", 0.0), r1)
                worst["total"] = max(worst.get("total", 0.0), r2)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(5, "identity and evolution residuals", max(worst.values()) <= 1e-7, detail)


def test_06_structural_invariants(lemniscate, exp2, report):
    gaps = dict.fromkeys(["contraction", "trace", "h_trace", "antisym", "curv_contraction"], 0.0)
    for cfg in (lemniscate, exp2):
        bases = random_base_points(cfg, 100, 7)
        jets = random_jet_points(cfg, 100, 7)
        for name in cfg.directions:
            d = cfg.direction(name).direction
            for b in bases:
                u = b.dense()
                S = shape_operator(cfg.system, cfg.congruence, d, b)
                T = total_shape(cfg.system, cfg.congruence, d, b)
                v = _v(d, u)
                gaps["contraction"] = max(gaps["contraction"], float(np.max(np.abs(
                    np.einsum("svi,i->sv", T.A, v) - S.A))))
                gaps["trace"] = max(gaps["trace"], abs(float(v @ T.trace_form) - S.trace))
            for p in jets:
                z = p.dense()
                v = _v(d, z)
                gaps["h_trace"] = max(gaps["h_trace"], h_trace_residual(cfg.system, d, p))
                cc = canonical_curvature(cfg.system, p, d)
                gaps["antisym"] = max(gaps["antisym"], float(np.max(np.abs(cc.B + np.swapaxes(cc.B, 2, 3)))))
                c1 = np.max(np.abs(cc.R_plus - np.einsum("k,skij->sij", v, cc.B)))
                c2 = np.max(np.abs(jacobi_plus(cfg.system, d, p) - np.einsum("sivk,k->siv", jacobi(cfg.system, d, p), v)))
                gaps["curv_contraction"] = max(gaps["curv_contraction"], float(c1), float(c2))
    ok = (gaps["contraction"] <= 1e-12 and gaps["trace"] <= 1e-12 and gaps["h_trace"] <= 1e-10
          and gaps["antisym"] <= 1e-12 and gaps["curv_contraction"] <= 1e-12)
    report(6, "structural invariants", ok, ", ".join(f"{k} {v:.1e}" for k, v in gaps.items()))


def test_07_derivative_engine(report):
    e1 = e2 = sym = 0.0
    for text in CORPUS:
        e = parse(text, ABC)
        z = _dense(POINT, ABC)
        for k in range(4):
            ad = derivative(e, DerivativeRequest(tuple(z), (k,)))
            e1 = max(e1, abs(ad - _fd1(e, z, k)) / max(1.0, abs(ad)))
            for l in range(4):
                ad2 = derivative(e, DerivativeRequest(tuple(z), (k, l)))
                e2 = max(e2, abs(ad2 - _fd2(e, z, k, l)) / max(1.0, abs(ad2)))
                if l > k:
                    sym = max(sym, abs(ad2 - derivative(e, DerivativeRequest(tuple(z), (l, k)))))
    ok = e1 <= 1e-6 and e2 <= 1e-4 and sym <= 1e-12
    report(7, "derivative engine vs finite differences", ok, f"order1 {e1:.1e}, order2 {e2:.1e}, symmetry {sym:.1e}")


def test_08_integrator_order(lemniscate, report):
    d = lemniscate.direction("t").direction
    errs = []
    for h in (0.1, 0.05):
        c = col.integrate_curve(lemniscate.congruence, d, [HALF_PI, 0.0, 1.3], 2.8 - HALF_PI, h)
        errs.append(float(np.max(np.abs(c.points[:, 2] - 1.3 * np.sin(HALF_PI + c.s)))))
    ratio = errs[0] / errs[1]
    report(8, "RK4 convergence order", ratio >= 14, f"errors {errs[0]:.2e} -> {errs[1]:.2e}, ratio {ratio:.1f}")


def test_09_exp2_analytics(exp2, report):
    cfg = exp2
    d = cfg.direction().direction
    bases = random_base_points(cfg, 20, 3)
    eA = max(abs(shape_operator(cfg.system, cfg.congruence, d, b).A[0, 0] - (1 + 0.5 * 2)) for b in bases)
    eP = 0.0
    for p in random_jet_points(cfg, 20, 3):
        phi = jacobi_plus(cfg.system, d, p)
        eP = max(eP, abs(phi[0, 0, 0] + 2), abs(phi[0, 1, 0] + 4))
    rep = col.collapse_scan(cfg.system, cfg.congruence, d, [0.0, 0.0, 1.0], 10.0, h=1e-2)
    eL = float(np.max(np.abs(rep.logVolume - 2 * rep.s)))
    ok = eA <= 1e-12 and eP <= 1e-10 and not rep.detected and eL <= 1e-8
    report(9, "EXP2 analytics", ok, f"A {eA:.1e}, Phi+ {eP:.1e}, detected {rep.detected}, logVolume {eL:.1e}")


def test_10_surface(lemniscate, report):
    cfg = lemniscate
    sf = cfg.surface
    d = cfg.direction(sf.direction).direction
    starts = col.initial_points(cfg.layout, sf.variable, sf.values, sf.base, sf.initial)
    rows = col.surface_sample(cfg.congruence, d, starts, sf.span, sf.h, sf.stride)
    err = max(abs(p[2] - math.sin(p[0]) * math.sqrt(math.cos(2 * lab))) for _, lab, p in rows)
    labels = sorted({lab for _, lab, _ in rows})
    valid = [th for th in sf.values if math.cos(2 * th) >= 0]
    per_label = {lab: 0 for lab in labels}
    for _, lab, _ in rows:
        per_label[lab] += 1
    grid = len(sf.values), max(per_label.values())
    ok = err <= 1e-6 and labels == valid and grid == (50, 50) and set(per_label.values()) == {50}
    report(10, "solution surface", ok,
           f"max error {err:.2e}, {len(labels)} of {len(sf.values)} labels kept, {grid[1]} rows per label")
