"""Congruence curves, compatible volumes and collapse detection.

All integration is classical fixed-step RK4. The trace integral and the μ
factor ride along as extra state components, so the trace is accumulated
with the Simpson weights of the stage values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .expr import Expression, parse
from .expr.dual import to_float_array
from .geometry import BasePoint, Congruence, Direction, PdeSystem, _dense_base, base_point, h_at, lift_at, z_at
from .shape import shape_at

VOLUME_THRESHOLD = "volume-threshold"
TRACE_BLOWUP = "trace-blowup"
SPAN_EXHAUSTED = "span-exhausted"
DOMAIN_ERROR = "curve-domain-error"


@dataclass(frozen=True)
class CurveSample:
    s: float
    point: BasePoint
    C: float
    logVolume: float
    mu: float


@dataclass
class CollapseReport:
    detected: bool
    reason: str
    s_detect: float | None = None
    s_extrapolated: float | None = None
    samples: list = field(default_factory=list)
    message: str | None = None

    @property
    def s(self) -> np.ndarray:
        return np.array([smp.s for smp in self.samples])

    @property
    def logVolume(self) -> np.ndarray:
        return np.array([smp.logVolume for smp in self.samples])


@dataclass
class Curve:
    """Samples of an integral curve of Z_v; ``reason`` says why it stopped."""

    s: np.ndarray
    points: np.ndarray
    reason: str
    h: float
    message: str | None = None

    def base_points(self, layout) -> list[BasePoint]:
        return [base_point(layout, row) for row in self.points]


@dataclass(frozen=True)
class ScanOptions:
    h: float = 1e-3
    vol_min: float = 1e-6
    C_big: float = 1e3
    C_max: float = 1e8
    mu0: float = 1.0


# stepping --------------------------------------------------------------------

def steps_for(span, h: float) -> list[float]:
    """Signed step sizes covering ``span`` (a length or ``[0, S]``), last one possibly shorter."""
    if isinstance(span, (list, tuple)):
        lo, hi = span
        if lo != 0:
            raise ValueError("curve spans start at 0")
        span = hi
    span = float(span)
    if h <= 0:
        raise ValueError("step h must be positive")
    if span == 0:
        return []
    sign = 1.0 if span > 0 else -1.0
    length = abs(span)
    k = int(math.floor(length / h + 1e-9))
    steps = [sign * h] * k
    rest = length - k * h
    if rest > 1e-9 * h:
        steps.append(sign * rest)
    return steps


def rk4_step(f: Callable, y: np.ndarray, h: float, k1=None) -> np.ndarray:
    if k1 is None:
        k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def zv_float(cong: Congruence, dirn: Direction, u) -> np.ndarray:
    """Z_v at base vector ``u`` as floats."""
    lay = cong.layout
    v = np.array(dirn.values(u), dtype=float)
    Z = np.array(z_at(cong, list(u)), dtype=float)
    return np.concatenate([v, Z @ v]) if lay.m else v


def _finite(y) -> bool:
    return bool(np.all(np.isfinite(y)))


def integrate_curve(cong: Congruence, dirn: Direction, start, span, h: float) -> Curve:
    lay = cong.layout
    u = np.array(_dense_base(lay, start), dtype=float)
    f = lambda y: zv_float(cong, dirn, y)
    s, ss, pts = 0.0, [0.0], [u.copy()]
    for dh in steps_for(span, h):
        try:
            u = rk4_step(f, u, dh)
            if not _finite(u):
                raise DomainError("non-finite state")
        except (DomainError, OverflowError, ZeroDivisionError) as err:
            return Curve(np.array(ss), np.array(pts), DOMAIN_ERROR, h, str(err))
        s += dh
        ss.append(s)
        pts.append(u.copy())
    return Curve(np.array(ss), np.array(pts), SPAN_EXHAUSTED, h)


def h_trace_bar(sys: PdeSystem, cong: Congruence, dirn: Direction, u) -> float:
    """Σ_σ v^i H̄^σ_{σi} at base vector ``u``."""
    u = list(u)
    H = to_float_array(h_at(sys, dirn, lift_at(cong, u)))
    v = np.array(dirn.values(u), dtype=float)
    return float(np.einsum("ssi,i->", H, v))


def trace_bar(sys, cong, dirn, u) -> float:
    return float(np.trace(to_float_array(shape_at(sys, cong, dirn, list(u)))))


def mu_factor(sys: PdeSystem, cong: Congruence, dirn: Direction, curve: Curve, mu0: float = 1.0) -> np.ndarray:
    """μ along ``curve``, re-integrated with the curve's own steps."""
    N = cong.layout.size("base")

    def f(y):
        u = y[:N]
        return np.concatenate([zv_float(cong, dirn, u), [-y[N] * h_trace_bar(sys, cong, dirn, u)]])

    y = np.concatenate([curve.points[0], [mu0]])
    out = [mu0]
    for dh in np.diff(curve.s):
        y = rk4_step(f, y, dh)
        out.append(float(y[N]))
    return np.array(out)


def collapse_scan(sys: PdeSystem, cong: Congruence, dirn: Direction, start, span, opts: ScanOptions | None = None,
                  **kwargs) -> CollapseReport:
    """Integrate (x, y, log volume, μ) along Z_v and watch for collapse.

    Triggers are the volume threshold, |C| ≥ C_max with C < 0, and a sign
    flip of C from negative to positive that the step cannot have resolved
    (|C_prev| ≥ C_big, or |C|·h ≥ 1 on both sides). That means the step
    jumped across the pole: the sample beyond it is discarded and the pole
    is located by interpolating 1/C across the flip.
    """
    opts = opts or ScanOptions(**kwargs)
    lay = cong.layout
    N = lay.size("base")
    log_vmin = math.log(opts.vol_min)

    def f(y):
        u = y[:N]
        C = trace_bar(sys, cong, dirn, u)
        g = h_trace_bar(sys, cong, dirn, u)
        return np.concatenate([zv_float(cong, dirn, u), [C, -y[N + 1] * g]])

    def sample(s, y, k):
        return CurveSample(s, base_point(lay, y[:N]), float(k[N]), float(y[N]), float(y[N + 1]))

    y = np.concatenate([_dense_base(lay, start), [0.0, opts.mu0]])
    try:
        k = f(y)
    except DomainError as err:
        return CollapseReport(False, DOMAIN_ERROR, samples=[], message=str(err))
    samples = [sample(0.0, y, k)]
    s = 0.0
    for dh in steps_for(span, opts.h):
        try:
            y_new = rk4_step(f, y, dh, k1=k)
            k_new = f(y_new)
            if not (_finite(y_new) and _finite(k_new)):
                raise DomainError("non-finite state")
        except (DomainError, OverflowError, ZeroDivisionError) as err:
            return CollapseReport(False, DOMAIN_ERROR, samples=samples, message=str(err))
        C_prev, C = samples[-1].C, float(k_new[N])
        if C_prev < 0 < C and (abs(C_prev) >= opts.C_big or min(-C_prev, C) * abs(dh) >= 1.0):
            rep = _detected(TRACE_BLOWUP, samples, opts)
            rep.s_extrapolated = _secant_zero(samples[-1].s, C_prev, samples[-1].s + dh, C)
            return rep
        s += dh
        y, k = y_new, k_new
        samples.append(sample(s, y, k))
        if y[N] <= log_vmin:
            return _detected(VOLUME_THRESHOLD, samples, opts)
        if abs(C) >= opts.C_max and C < 0:
            return _detected(TRACE_BLOWUP, samples, opts)
    return CollapseReport(False, SPAN_EXHAUSTED, samples=samples)


def _detected(reason, samples, opts) -> CollapseReport:
    last = samples[-1]
    return CollapseReport(True, reason, last.s, extrapolate(samples, opts.C_big), samples)


def extrapolate(samples: Sequence[CurveSample], C_big: float) -> float | None:
    """Zero of w = 1/C by the secant through the last two samples, once |C| ≥ C_big."""
    if len(samples) < 2:
        return None
    a, b = samples[-2], samples[-1]
    if abs(b.C) < C_big:
        return None
    return _secant_zero(a.s, a.C, b.s, b.C)


def _secant_zero(sa, Ca, sb, Cb) -> float | None:
    if Ca == 0 or Cb == 0:
        return None
    wa, wb = 1.0 / Ca, 1.0 / Cb
    if wb == wa:
        return None
    return sb - wb * (sb - sa) / (wb - wa)


# surfaces ---------------------------------------------------------------------

def initial_points(layout, variable: str, values, base: dict, initial: dict) -> list[tuple[float, BasePoint | None]]:
    """Starting points for each transverse label.

    ``base`` fixes the remaining independent coordinates; ``initial`` gives
    each dependent coordinate as an expression in the independent ones. A
    label whose initial data leaves the domain maps to ``None``.
    """
    k_var = layout.resolve_independent(variable)
    exprs = {}
    for name in layout.dependent:
        text = initial[name]
        exprs[name] = text if isinstance(text, Expression) else parse(str(text), layout, "independent")
    out = []
    for label in values:
        x = []
        for i, name in enumerate(layout.independent):
            x.append(float(label) if i == k_var else float(base[name]))
        try:
            y = [float(exprs[name](x)) for name in layout.dependent]
        except DomainError:
            out.append((float(label), None))
            continue
        out.append((float(label), BasePoint(tuple(x), tuple(y))))
    return out


def surface_sample(cong: Congruence, dirn: Direction, starts, span, h: float, stride: int = 1) -> list[tuple]:
    """Rows ``(s, label, point)`` along Z_v from each start, every ``stride`` steps.

    ``span = (lo, hi)`` with ``lo ≤ 0 ≤ hi`` integrates both ways. Curves
    stop at the first domain error; labels without a start emit nothing.
    """
    lo, hi = (0.0, float(span)) if np.isscalar(span) else (float(span[0]), float(span[1]))
    rows = []
    for label, start in starts:
        if start is None:
            continue
        back = integrate_curve(cong, dirn, start, lo, h) if lo < 0 else None
        fwd = integrate_curve(cong, dirn, start, hi, h)
        part = []
        if back is not None:
            for k in range(len(back.s) - 1, 0, -1):
                if k % stride == 0:
                    part.append((float(back.s[k]), label, back.points[k]))
        for k in range(len(fwd.s)):
            if k % stride == 0:
                part.append((float(fwd.s[k]), label, fwd.points[k]))
        rows.extend(part)
    return rows
