"""TOML configuration files describing a system, congruence and runs."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import tomli

from .errors import ConfigError, DimensionError, ExpressionError, LayoutError
from .expr import VariableLayout, parse
from .geometry import BasePoint, Congruence, Direction, PdeSystem, base_point, jet_point, make_congruence, make_direction, make_system

DEFAULT_SEED = 0xB0F

RUN_DEFAULTS = {
    "span": 1.0,
    "h": 1e-3,
    "vol_min": 1e-6,
    "C_big": 1e3,
    "C_max": 1e8,
    "mu0": 1.0,
    "seed": DEFAULT_SEED,
    "n_verify": 100,
    "grid_radius": 0.1,
}


@dataclass
class DirectionSpec:
    name: str
    direction: Direction
    start: BasePoint
    span: float
    v_text: list


@dataclass
class SurfaceSpec:
    variable: str
    values: list
    base: dict
    initial: dict
    span: tuple
    h: float
    stride: int
    direction: str


@dataclass
class Config:
    path: str
    layout: VariableLayout
    system: PdeSystem
    congruence: Congruence
    default: str
    directions: dict
    run: dict
    box: dict
    jet_box: dict
    points: list
    jet_points: list
    surface: SurfaceSpec | None
    raw: dict = field(repr=False, default_factory=dict)

    def direction(self, name: str | None = None) -> DirectionSpec:
        """Named direction: a [directions] entry, the default, or a unit vector."""
        if name is None:
            name = self.default
        if name in self.directions:
            return self.directions[name]
        if name in self.layout.independent:
            a = self.layout.independent.index(name)
            v = ["1" if i == a else "0" for i in range(self.layout.n)]
            d = make_direction(self.layout, a, v)
            return DirectionSpec(name, d, self.directions[self.default].start, self.run["span"], v)
        raise ConfigError(f"unknown direction {name!r}; known: {sorted(self.directions)}", self.path)

    def to_dict(self) -> dict:
        """Normalised form: every F entry present, defaults filled in."""
        lay = self.layout
        F, Z = {}, {}
        for s, dep in enumerate(lay.dependent):
            F[dep] = {}
            for i, xi in enumerate(lay.independent):
                row = {}
                for j in range(i, lay.n):
                    row[lay.independent[j]] = self.system.F[s][i][j].text
                F[dep][xi] = row
            Z[dep] = {xi: self.congruence.Z[s][i].text for i, xi in enumerate(lay.independent)}
        base = lambda b: {nm: float(val) for nm, val in zip(lay.base_names, b.dense())}
        default = self.directions[self.default]
        out = {
            "space": {"independent": list(lay.independent), "dependent": list(lay.dependent)},
            "pde": {"F": F},
            "congruence": {"Z": Z},
            "direction": {
                "name": default.name,
                "adapted": lay.independent[default.direction.adapted],
                "v": list(default.v_text),
            },
            "run": dict(self.run, start=base(default.start),
                        box={k: list(v) for k, v in self.box.items()},
                        jet_box={k: list(v) for k, v in self.jet_box.items()},
                        points=[base(b) for b in self.points],
                        jet_points=[dict(zip(lay.names, p.dense())) for p in self.jet_points]),
        }
        others = {}
        for nm, spec in self.directions.items():
            if nm == self.default:
                continue
            others[nm] = {
                "adapted": lay.independent[spec.direction.adapted],
                "v": list(spec.v_text),
                "start": base(spec.start),
                "span": spec.span,
            }
        if others:
            out["directions"] = others
        if self.surface is not None:
            sf = self.surface
            out["surface"] = {
                "variable": sf.variable,
                "values": list(sf.values),
                "base": dict(sf.base),
                "initial": dict(sf.initial),
                "span": list(sf.span),
                "h": sf.h,
                "stride": sf.stride,
                "direction": sf.direction,
            }
        return out


# loading ----------------------------------------------------------------------------

def resolve_path(path: str) -> tuple[str, str]:
    """Return (display name, text); bundled configs are found by file name."""
    p = Path(path)
    if p.is_file():
        return str(p), p.read_text(encoding="utf-8")
    bundled = resources.files("shapemap") / "configs" / p.name
    if p.suffix == ".cfg" and bundled.is_file():
        return str(path), bundled.read_text(encoding="utf-8")
    raise ConfigError(f"cannot read config file {path!r}", f"{path}:0")


def load_config(path: str) -> Config:
    name, text = resolve_path(path)
    return loads(text, name)


def _line_of(text: str, *needles) -> int:
    lines = text.splitlines()
    for needle in needles:
        if not needle:
            continue
        for k, line in enumerate(lines, 1):
            if needle in line:
                return k
    return 1


class _Ctx:
    def __init__(self, text, name):
        self.text, self.name = text, name

    def fail(self, message, *needles):
        raise ConfigError(message, f"{self.name}:{_line_of(self.text, *needles)}")


def loads(text: str, name: str = "<config>") -> Config:
    ctx = _Ctx(text, name)
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        m = re.search(r"line (\d+)", str(err))
        raise ConfigError(str(err), f"{name}:{m.group(1) if m else 1}") from None
    try:
        return _build(raw, ctx)
    except ConfigError:
        raise
    except ExpressionError as err:
        ctx.fail(str(err), f'"{getattr(err, "text", "")}"' if getattr(err, "text", "") else None,
                 getattr(err, "name", None))
    except (LayoutError, DimensionError, ValueError, KeyError, TypeError) as err:
        ctx.fail(f"{type(err).__name__}: {err}")


def _section(raw, key, ctx, required=True) -> dict:
    sec = raw.get(key)
    if sec is None:
        if required:
            ctx.fail(f"missing [{key}] section")
        return {}
    if not isinstance(sec, dict):
        ctx.fail(f"[{key}] must be a table", f"{key} =")
    return sec


def _expr_text(value, ctx, where):
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        ctx.fail(f"{where} must be an expression string", where.split(".")[-1])
    return value if isinstance(value, str) else repr(float(value))


def _parse_with_location(ctx, fn, text):
    try:
        return fn()
    except ExpressionError as err:
        ctx.fail(str(err), f'"{text}"', text)


def _build(raw: dict, ctx: _Ctx) -> Config:
    space = _section(raw, "space", ctx)
    try:
        layout = VariableLayout(space.get("independent", ()), space.get("dependent", ()))
    except LayoutError as err:
        ctx.fail(str(err), "independent", "dependent")
    n, m = layout.n, layout.m

    # system
    pde = _section(raw, "pde", ctx)
    Ftab = pde.get("F", {})
    entries = {}
    for dep, rows in Ftab.items():
        if dep not in layout.dependent:
            ctx.fail(f"F entry for unknown dependent variable {dep!r}", f"F.{dep}")
        for xi, cols in rows.items():
            for xj, value in cols.items():
                if xi not in layout.independent or xj not in layout.independent:
                    ctx.fail(f"F.{dep}.{xi}.{xj}: unknown independent variable", f"F.{dep}.{xi}.{xj}")
                i, j = layout.independent.index(xi), layout.independent.index(xj)
                key = (dep, *sorted((i, j)))
                if key in entries:
                    ctx.fail(f"F.{dep}.{xi}.{xj} duplicates an entry", f"F.{dep}.{xj}.{xi}")
                entries[key] = _expr_text(value, ctx, f"F.{dep}.{xi}.{xj}")
    for key, textv in entries.items():
        _parse_with_location(ctx, lambda: parse(textv, layout, "jet"), textv)
    system = make_system(n, m, layout, entries)

    # congruence
    cong_sec = _section(raw, "congruence", ctx)
    Zraw = cong_sec.get("Z", {})
    Zentries = {}
    for dep in layout.dependent:
        row = Zraw.get(dep, {})
        for xi in layout.independent:
            if xi not in row:
                ctx.fail(f"missing congruence entry Z.{dep}.{xi}", "[congruence]")
            textv = _expr_text(row[xi], ctx, f"Z.{dep}.{xi}")
            Zentries[dep, xi] = _parse_with_location(ctx, lambda: parse(textv, layout, "base"), textv)
    congruence = make_congruence(layout, Zentries)

    # run parameters
    run_sec = _section(raw, "run", ctx, required=False)
    run = dict(RUN_DEFAULTS)
    for key in RUN_DEFAULTS:
        if key in run_sec:
            val = run_sec[key]
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                ctx.fail(f"run.{key} must be a number", f"{key} =")
            run[key] = int(val) if key in ("seed", "n_verify") else float(val)
    if run["h"] <= 0:
        ctx.fail("run.h must be positive", "h =")
    if run["vol_min"] <= 0:
        ctx.fail("run.vol_min must be positive", "vol_min")

    def point(obj, where):
        if not isinstance(obj, dict):
            ctx.fail(f"{where} must be a table of coordinates", where)
        try:
            return base_point(layout, obj)
        except DimensionError as err:
            ctx.fail(f"{where}: {err}", where)

    start = point(run_sec.get("start", {nm: 0.0 for nm in layout.base_names}), "start")

    # directions
    dsec = _section(raw, "direction", ctx)
    directions = {}

    def make_dir(sec, nm, default_start, default_span):
        adapted = sec.get("adapted")
        if adapted not in layout.independent:
            ctx.fail(f"direction {nm!r}: adapted must name an independent variable", "adapted")
        v = sec.get("v")
        if v is None:
            v = ["1" if x == adapted else "0" for x in layout.independent]
        if isinstance(v, dict):
            v = [v.get(x, "0") for x in layout.independent]
        v = [_expr_text(e, ctx, "v") for e in v]
        a = layout.independent.index(adapted)
        if len(v) != n:
            ctx.fail(f"direction {nm!r}: v needs {n} components", "v =")
        if v[a].strip() not in ("1", "1.0"):
            ctx.fail(f"direction {nm!r}: v component for {adapted!r} must be \"1\"", "v =")
        for e in v:
            _parse_with_location(ctx, lambda: parse(e, layout, "independent"), e)
        d = make_direction(layout, a, v)
        st = point(sec["start"], "start") if "start" in sec else default_start
        span = float(sec.get("span", default_span))
        return DirectionSpec(nm, d, st, span, v)

    default_name = dsec.get("name", dsec.get("adapted"))
    directions[default_name] = make_dir(dsec, default_name, start, run["span"])
    for nm, sec in _section(raw, "directions", ctx, required=False).items():
        if not isinstance(sec, dict):
            ctx.fail(f"[directions.{nm}] must be a table", f"directions.{nm}")
        if nm == default_name:
            ctx.fail(f"direction name {nm!r} is already used by [direction]", f"directions.{nm}")
        sec = dict(sec)
        sec.setdefault("adapted", nm if nm in layout.independent else None)
        directions[nm] = make_dir(sec, nm, start, run["span"])

    # sampling
    box = {}
    for nm, rng in run_sec.get("box", {}).items():
        if nm not in layout.names or not (isinstance(rng, list) and len(rng) == 2):
            ctx.fail(f"run.box.{nm} must be [lo, hi] for a known coordinate", "box")
        box[nm] = (float(rng[0]), float(rng[1]))
    for nm in layout.base_names:
        if nm not in box:
            c = start.dense()[layout.index(nm)]
            box[nm] = (c - 1.0, c + 1.0)
    jet_box = {nm: box.pop(nm) for nm in list(box) if nm in layout.jet_names}
    for nm, rng in run_sec.get("jet_box", {}).items():
        if nm not in layout.jet_names:
            ctx.fail(f"run.jet_box.{nm}: not a jet coordinate", "jet_box")
        jet_box[nm] = (float(rng[0]), float(rng[1]))
    for nm in layout.jet_names:
        jet_box.setdefault(nm, (-1.0, 1.0))
    points = [point(p, "points") for p in run_sec.get("points", [])] or [start]
    jet_points = []
    for p in run_sec.get("jet_points", []):
        try:
            jet_points.append(jet_point(layout, p))
        except DimensionError as err:
            ctx.fail(f"jet_points: {err}", "jet_points")

    surface = None
    if "surface" in raw:
        surface = _build_surface(raw["surface"], layout, ctx, default_name)

    run.pop("start", None)
    return Config(ctx.name, layout, system, congruence, default_name, directions, run, box, jet_box,
                  points, jet_points, surface, raw)


def _build_surface(sec, layout, ctx, default_name) -> SurfaceSpec:
    var = sec.get("variable")
    if var not in layout.independent:
        ctx.fail("surface.variable must name an independent variable", "variable")
    values = sec.get("values")
    if isinstance(values, dict):
        values = list(np.linspace(float(values["start"]), float(values["stop"]), int(values["num"])))
    if not isinstance(values, list) or not values:
        ctx.fail("surface.values must be a list or {start, stop, num}", "values")
    values = [float(v) for v in values]
    base = {k: float(v) for k, v in sec.get("base", {}).items()}
    for nm in layout.independent:
        if nm != var and nm not in base:
            ctx.fail(f"surface.base needs a value for {nm!r}", "base")
    initial = dict(sec.get("initial", {}))
    for dep in layout.dependent:
        if dep not in initial:
            ctx.fail(f"surface.initial needs an expression for {dep!r}", "initial")
        textv = _expr_text(initial[dep], ctx, "initial")
        _parse_with_location(ctx, lambda: parse(textv, layout, "independent"), textv)
        initial[dep] = textv
    span = sec.get("span", [0.0, 1.0])
    span = (0.0, float(span)) if isinstance(span, (int, float)) else (float(span[0]), float(span[1]))
    if span[0] > 0 or span[1] < 0:
        ctx.fail("surface.span must contain 0", "span")
    h = float(sec.get("h", 1e-2))
    stride = int(sec.get("stride", 1))
    if h <= 0 or stride < 1:
        ctx.fail("surface.h must be positive and stride at least 1", "stride")
    return SurfaceSpec(var, values, base, initial, span, h, stride, sec.get("direction", default_name))


def random_base_points(cfg: Config, count: int, seed: int) -> list[BasePoint]:
    rng = np.random.default_rng(seed)
    lo = np.array([cfg.box[nm][0] for nm in cfg.layout.base_names])
    hi = np.array([cfg.box[nm][1] for nm in cfg.layout.base_names])
    return [base_point(cfg.layout, rng.uniform(lo, hi)) for _ in range(count)]


def random_jet_points(cfg: Config, count: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    boxes = [cfg.box[nm] for nm in cfg.layout.base_names] + [cfg.jet_box[nm] for nm in cfg.layout.jet_names]
    lo, hi = np.array([b[0] for b in boxes]), np.array([b[1] for b in boxes])
    return [jet_point(cfg.layout, rng.uniform(lo, hi)) for _ in range(count)]


def validation_grid(cfg: Config, spec: DirectionSpec, per_axis: int = 5) -> list[BasePoint]:
    """``per_axis``^(n+m) base points within ``grid_radius`` of the start."""
    r = cfg.run["grid_radius"]
    c = np.array(spec.start.dense())
    axes = [np.linspace(ci - r, ci + r, per_axis) for ci in c]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([g.ravel() for g in mesh], axis=1)
    return [base_point(cfg.layout, row) for row in flat]
