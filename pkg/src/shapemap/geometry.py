"""PDE systems, congruences, adapted directions and the adapted splitting.

Everything here works on dense coordinate vectors ``z`` laid out as in
:class:`~shapemap.expr.VariableLayout`. The ``*_at`` helpers accept vectors
whose entries may be tagged duals, so higher derivatives of any quantity are
obtained by differentiating the helper itself.

The adapted coordinate is handled by relabelling: wherever the adapted
formulas single out index 1 we use ``Direction.adapted`` instead, which keeps
every tensor in the user's coordinate order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError, DomainError, SingularFrameError
from .expr import Expression, VariableLayout, parse
from .expr.dual import directional, partial, primal, to_float_array

DET_MIN = 1e-12


# data ---------------------------------------------------------------------

@dataclass(frozen=True)
class PdeSystem:
    """Connection-type system y^σ_ij = F^σ_ij(x, y, y').

    ``F[σ][i][j]`` and ``F[σ][j][i]`` are the same object.
    """

    layout: VariableLayout
    F: tuple

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def m(self) -> int:
        return self.layout.m

    @property
    def size(self) -> int:
        return self.layout.size("jet")


@dataclass(frozen=True)
class Congruence:
    """Embedded first-order connection, ``Z[σ][i]`` over base variables."""

    layout: VariableLayout
    Z: tuple


@dataclass(frozen=True)
class Direction:
    """Adapted pair: φ = dx^adapted and v = v^i(x) ∂_i with v^adapted = 1."""

    layout: VariableLayout
    adapted: int
    v: tuple

    @property
    def others(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.layout.n) if i != self.adapted)

    def values(self, z) -> list:
        out = []
        for i, e in enumerate(self.v):
            try:
                out.append(e(z))
            except DomainError as err:
                raise err.with_index((i,)) from None
        return out

    @property
    def is_constant(self) -> bool:
        return all(e.is_constant for e in self.v)


@dataclass(frozen=True)
class BasePoint:
    x: tuple
    y: tuple

    def dense(self) -> list[float]:
        return [float(t) for t in self.x] + [float(t) for t in self.y]


@dataclass(frozen=True)
class JetPoint:
    x: tuple
    y: tuple
    yx: tuple  # yx[σ][i]

    def dense(self) -> list[float]:
        out = [float(t) for t in self.x] + [float(t) for t in self.y]
        for row in self.yx:
            out.extend(float(t) for t in row)
        return out

    @property
    def base(self) -> BasePoint:
        return BasePoint(self.x, self.y)


@dataclass(frozen=True)
class HTensor:
    """Semi-horizontal coefficients, ``H[ν][σ][k]`` holding H^ν_{σk}."""

    H: np.ndarray
    v: np.ndarray
    adapted: int


def base_point(layout: VariableLayout, values) -> BasePoint:
    """BasePoint from a dense sequence or a name mapping."""
    if isinstance(values, BasePoint):
        _check_dims(layout, values)
        return values
    if isinstance(values, JetPoint):
        return values.base
    if isinstance(values, Mapping):
        try:
            values = [float(values[nm]) for nm in layout.base_names]
        except KeyError as err:
            raise DimensionError(f"missing coordinate {err.args[0]!r}") from None
    values = [float(t) for t in values]
    if len(values) != layout.size("base"):
        raise DimensionError(f"expected {layout.size('base')} base coordinates, got {len(values)}")
    return BasePoint(tuple(values[: layout.n]), tuple(values[layout.n:]))


def jet_point(layout: VariableLayout, values) -> JetPoint:
    """JetPoint from a dense sequence or a name mapping (missing jets are 0)."""
    if isinstance(values, JetPoint):
        _check_dims(layout, values)
        return values
    if isinstance(values, Mapping):
        unknown = set(values) - set(layout.names)
        if unknown:
            raise DimensionError(f"unknown coordinates {sorted(unknown)}")
        values = [float(values.get(nm, 0.0)) for nm in layout.names]
    values = [float(t) for t in values]
    n, m = layout.n, layout.m
    if len(values) != layout.size("jet"):
        raise DimensionError(f"expected {layout.size('jet')} jet coordinates, got {len(values)}")
    yx = tuple(tuple(values[n + m + s * n: n + m + (s + 1) * n]) for s in range(m))
    return JetPoint(tuple(values[:n]), tuple(values[n:n + m]), yx)


def _check_dims(layout, p):
    if len(p.x) != layout.n or len(p.y) != layout.m:
        raise DimensionError("point dimensions do not match the layout")
    if isinstance(p, JetPoint) and (len(p.yx) != layout.m or any(len(r) != layout.n for r in p.yx)):
        raise DimensionError("jet dimensions do not match the layout")


def _dense_jet(sys, p) -> list:
    return jet_point(sys.layout, p).dense()


def _dense_base(layout, b) -> list:
    return base_point(layout, b).dense()


# construction ---------------------------------------------------------------

def _as_expr(value, layout, scope) -> Expression:
    if isinstance(value, Expression):
        if value.layout != layout:
            raise DimensionError("expression is bound to a different layout")
        if any(k >= layout.size(scope) for k in value.variables):
            raise DimensionError(f"expression {value.text!r} uses variables outside the {scope} scope")
        return value
    if isinstance(value, (int, float)):
        value = repr(float(value))
    return parse(value, layout, scope)


def make_system(n: int, m: int, layout: VariableLayout, F: Mapping) -> PdeSystem:
    """Build a symmetric system from its upper-triangular entries.

    Keys of ``F`` are ``(σ, i, j)`` triples of indices or names. A pair given
    as ``(j, i)`` is read as ``(i, j)``; entries never given default to ``0``.
    """
    if layout.n != n or layout.m != m:
        raise DimensionError(f"layout has (n, m) = ({layout.n}, {layout.m}), expected ({n}, {m})")
    if n < 2:
        raise DimensionError("at least two independent variables are required")
    entries: dict[tuple[int, int, int], object] = {}
    for key, value in F.items():
        if len(key) != 3:
            raise DimensionError(f"F key {key!r} must be (dependent, i, j)")
        try:
            s = layout.resolve_dependent(key[0])
            i, j = sorted((layout.resolve_independent(key[1]), layout.resolve_independent(key[2])))
        except Exception as err:
            raise DimensionError(str(err)) from None
        if (s, i, j) in entries:
            raise DimensionError(f"F entry {key!r} given twice")
        entries[s, i, j] = value
    zero = parse("0", layout, "jet")
    table = [[[None] * n for _ in range(n)] for _ in range(m)]
    for s in range(m):
        for i in range(n):
            for j in range(i, n):
                e = _as_expr(entries[s, i, j], layout, "jet") if (s, i, j) in entries else zero
                table[s][i][j] = table[s][j][i] = e
    return PdeSystem(layout, tuple(tuple(tuple(r) for r in t) for t in table))


def make_congruence(layout: VariableLayout, Z) -> Congruence:
    """``Z`` maps ``(σ, i)`` to an expression over (x, y), or is an m×n table."""
    n, m = layout.n, layout.m
    table = [[None] * n for _ in range(m)]
    if isinstance(Z, Mapping):
        for key, value in Z.items():
            s, i = layout.resolve_dependent(key[0]), layout.resolve_independent(key[1])
            table[s][i] = _as_expr(value, layout, "base")
    else:
        if len(Z) != m or any(len(row) != n for row in Z):
            raise DimensionError(f"Z must be {m}x{n}")
        table = [[_as_expr(e, layout, "base") for e in row] for row in Z]
    missing = [(s, i) for s in range(m) for i in range(n) if table[s][i] is None]
    if missing:
        raise DimensionError(f"missing congruence entries {missing}")
    return Congruence(layout, tuple(tuple(r) for r in table))


def make_direction(layout: VariableLayout, adapted, v, *, seed: int = 0) -> Direction:
    """Adapted direction; ``v`` is a sequence or a name mapping of expressions."""
    a = layout.resolve_independent(adapted)
    if isinstance(v, Mapping):
        v = [v.get(nm, "0") for nm in layout.independent]
    if len(v) != layout.n:
        raise DimensionError(f"v needs {layout.n} components, got {len(v)}")
    exprs = tuple(_as_expr(e, layout, "independent") for e in v)
    _check_unit(exprs[a], layout, seed)
    return Direction(layout, a, exprs)


def _check_unit(e: Expression, layout, seed):
    if e.is_constant:
        if abs(e([]) - 1.0) > 1e-12:
            raise ValueError(f"v component of the adapted coordinate must be 1, got {e.text!r}")
        return
    rng = np.random.default_rng(seed)
    checked = 0
    for _ in range(10):
        z = list(rng.uniform(-1.0, 1.0, layout.n))
        try:
            val = e(z)
        except DomainError:
            continue
        checked += 1
        if abs(val - 1.0) > 1e-12:
            raise ValueError(f"v component of the adapted coordinate must be 1, got {e.text!r}")
    if not checked:
        raise ValueError(f"could not evaluate {e.text!r} to check that it equals 1")


def unit_direction(layout: VariableLayout, adapted) -> Direction:
    a = layout.resolve_independent(adapted)
    return make_direction(layout, a, ["1" if i == a else "0" for i in range(layout.n)])


# dual-compatible kernels ---------------------------------------------------------

def f_at(sys: PdeSystem, z) -> list:
    """Nested m×n×n list of F values at the dense jet vector ``z``."""
    n = sys.n
    out = []
    for s, block in enumerate(sys.F):
        rows = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                try:
                    val = block[i][j](z)
                except DomainError as err:
                    raise err.with_index((s, i, j)) from None
                rows[i][j] = rows[j][i] = val
        out.append(rows)
    return out


def z_at(cong: Congruence, u) -> list:
    """Nested m×n list of Z values at the dense base vector ``u``."""
    out = []
    for s, row in enumerate(cong.Z):
        vals = []
        for i, e in enumerate(row):
            try:
                vals.append(e(u))
            except DomainError as err:
                raise err.with_index((s, i)) from None
        out.append(vals)
    return out


def lift_at(cong: Congruence, u) -> list:
    """Dense jet vector of the lift of base vector ``u`` under Z."""
    z = list(u)
    for row in z_at(cong, u):
        z.extend(row)
    return z


def gamma_vector_at(sys: PdeSystem, i: int, z, F=None) -> list:
    """Components of Γ_i on J¹ at ``z``."""
    lay = sys.layout
    n, m = sys.n, sys.m
    if F is None:
        F = f_at(sys, z)
    vec = [0.0] * sys.size
    vec[i] = 1.0
    for s in range(m):
        vec[lay.y(s)] = z[lay.yx(s, i)]
        for j in range(n):
            vec[lay.yx(s, j)] = F[s][i][j]
    return vec


def zfield_at(cong: Congruence, i: int, u, Zv=None) -> list:
    """Components of Z_i = ∂_i + Z_i^σ ∂_σ on Y."""
    lay = cong.layout
    if Zv is None:
        Zv = z_at(cong, u)
    vec = [0.0] * lay.size("base")
    vec[i] = 1.0
    for s in range(lay.m):
        vec[lay.y(s)] = Zv[s][i]
    return vec


def h_at(sys: PdeSystem, dirn: Direction, z) -> list:
    """Nested ``H[ν][σ][k]`` at ``z`` from the adapted formulas."""
    n, m, a = sys.n, sys.m, dirn.adapted
    lay = sys.layout
    v = dirn.values(z)
    others = dirn.others
    dF = [partial(lambda w: f_at(sys, w), z, lay.yx(s, a)) for s in range(m)]
    H = [[[0.0] * n for _ in range(m)] for _ in range(m)]
    for nu in range(m):
        for s in range(m):
            d = dF[s][nu]
            acc = d[a][a]
            for p in others:
                for q in others:
                    acc = acc - v[p] * v[q] * d[p][q]
            H[nu][s][a] = 0.5 * acc
            for p in others:
                acc = 0.0
                for k in range(n):
                    acc = acc + v[k] * d[p][k]
                H[nu][s][p] = acc
    return H


def hfield_at(sys: PdeSystem, s: int, H) -> list:
    lay = sys.layout
    vec = [0.0] * sys.size
    vec[lay.y(s)] = 1.0
    for nu in range(sys.m):
        for k in range(sys.n):
            vec[lay.yx(nu, k)] = H[nu][s][k]
    return vec


def _basis(size: int, k: int) -> np.ndarray:
    e = np.zeros(size, dtype=object)
    e[k] = 1.0
    return e


@dataclass
class FrameAt:
    """Adapted frame, coframe and projectors at one dense point."""

    F: list
    v: list
    H: list
    gamma: np.ndarray  # (n, N)
    h: np.ndarray  # (m, N)
    w: np.ndarray  # (m, n-1, N)
    vert: np.ndarray  # (m, N): ∂/∂y_a^σ
    dx: np.ndarray  # (n, N)
    omega: np.ndarray  # (m, N)
    psi: np.ndarray  # (m, n, N)

    def G(self):
        return sum(np.multiply.outer(g, f) for g, f in zip(self.gamma, self.dx))

    def P(self):
        return sum(np.multiply.outer(h, w) for h, w in zip(self.h, self.omega))

    def Q(self, lay):
        out = 0
        for s in range(len(self.psi)):
            for i in range(len(self.dx)):
                out = out + np.multiply.outer(_basis(lay.size("jet"), lay.yx(s, i)), self.psi[s][i])
        return out

    def Q_plus(self):
        out = 0
        for s, vec in enumerate(self.vert):
            form = sum(vk * self.psi[s][k] for k, vk in enumerate(self.v))
            out = out + np.multiply.outer(vec, form)
        return out

    def Q_tilde(self, others):
        out = 0
        for nu in range(len(self.w)):
            for c, p in enumerate(others):
                out = out + np.multiply.outer(self.w[nu][c], self.psi[nu][p])
        return out


def frame_at(sys: PdeSystem, dirn: Direction, z) -> FrameAt:
    lay = sys.layout
    n, m, N, a = sys.n, sys.m, sys.size, dirn.adapted
    F = f_at(sys, z)
    H = h_at(sys, dirn, z)
    v = dirn.values(z)
    gamma = np.array([gamma_vector_at(sys, i, z, F) for i in range(n)], dtype=object)
    h = np.array([hfield_at(sys, s, H) for s in range(m)], dtype=object)
    w = np.zeros((m, n - 1, N), dtype=object)
    for nu in range(m):
        for c, p in enumerate(dirn.others):
            w[nu, c, lay.yx(nu, p)] = 1.0
            w[nu, c, lay.yx(nu, a)] = -v[p]
    vert = np.array([_basis(N, lay.yx(s, a)) for s in range(m)], dtype=object)
    dx = np.array([_basis(N, i) for i in range(n)], dtype=object)
    omega = np.zeros((m, N), dtype=object)
    for s in range(m):
        omega[s, lay.y(s)] = 1.0
        for j in range(n):
            omega[s, j] = -z[lay.yx(s, j)]
    psi = np.zeros((m, n, N), dtype=object)
    for nu in range(m):
        for k in range(n):
            row = _basis(N, lay.yx(nu, k))
            for i in range(n):
                row[i] = row[i] - F[nu][k][i]
            for s in range(m):
                row = row - H[nu][s][k] * omega[s]
            psi[nu, k] = row
    return FrameAt(F, v, H, gamma, h, w, vert, dx, omega, psi)


# public operations ------------------------------------------------------------

def gamma_apply(sys: PdeSystem, i, f, p) -> float:
    """Γ_i(f) at the jet point ``p``; ``f`` is an Expression or a callable on dense vectors."""
    i = sys.layout.resolve_independent(i)
    z = _dense_jet(sys, p)
    if isinstance(f, Expression) and f.layout != sys.layout:
        raise DimensionError("expression is bound to a different layout")
    return float(primal(directional(f, z, gamma_vector_at(sys, i, z))))


def h_coeffs(sys: PdeSystem, dirn: Direction, p) -> HTensor:
    z = _dense_jet(sys, p)
    H = to_float_array(h_at(sys, dirn, z))
    v = to_float_array(dirn.values(z))
    return HTensor(H, v, dirn.adapted)


def h_trace_residual(sys: PdeSystem, dirn: Direction, p) -> float:
    """max |2 v^k H^ν_{σk} − v^i v^k ∂F^ν_ik/∂y^σ_a| over σ, ν."""
    z = _dense_jet(sys, p)
    lay = sys.layout
    H = to_float_array(h_at(sys, dirn, z))
    v = to_float_array(dirn.values(z))
    worst = 0.0
    for s in range(sys.m):
        dF = to_float_array(partial(lambda w: f_at(sys, w), z, lay.yx(s, dirn.adapted)))
        for nu in range(sys.m):
            lhs = 2.0 * v @ H[nu, s]
            rhs = v @ dF[nu] @ v
            worst = max(worst, abs(lhs - rhs))
    return worst


@dataclass(frozen=True)
class SplittingFrame:
    """Rows of the adapted frame in coordinate components.

    ``w[ν][c]`` is W_ν^p for ``p = others[c]``; ``matrix`` stacks
    gamma, h, w and vertical in that order.
    """

    gamma: np.ndarray
    h: np.ndarray
    w: np.ndarray
    vertical: np.ndarray
    others: tuple
    matrix: np.ndarray
    det: float


def splitting_frame(sys: PdeSystem, dirn: Direction, p) -> SplittingFrame:
    z = _dense_jet(sys, p)
    fr = frame_at(sys, dirn, z)
    gamma, h = to_float_array(fr.gamma), to_float_array(fr.h)
    w, vert = to_float_array(fr.w), to_float_array(fr.vert)
    mat = np.vstack([gamma, h, w.reshape(-1, sys.size), vert])
    det = float(np.linalg.det(mat))
    if not math.isfinite(det) or abs(det) < DET_MIN:
        raise SingularFrameError(f"adapted frame is degenerate (det = {det:.3g})")
    return SplittingFrame(gamma, h, w, vert, dirn.others, mat, det)


def projectors(sys: PdeSystem, dirn: Direction, p) -> dict[str, np.ndarray]:
    """Float matrices of G, P, Q, Q_plus and Q_tilde, ``K[a, b]`` = K^a_b."""
    z = _dense_jet(sys, p)
    fr = frame_at(sys, dirn, z)
    return {
        "G": to_float_array(fr.G()),
        "P": to_float_array(fr.P()),
        "Q": to_float_array(fr.Q(sys.layout)),
        "Q_plus": to_float_array(fr.Q_plus()),
        "Q_tilde": to_float_array(fr.Q_tilde(dirn.others)),
    }


def jet_lift(cong: Congruence, b) -> JetPoint:
    lay = cong.layout
    return jet_point(lay, [float(t) for t in lift_at(cong, _dense_base(lay, b))])


def embedded_residual(sys: PdeSystem, cong: Congruence, b) -> float:
    """max |F^σ_ij(lift b) − Z_i(Z^σ_j)(b)|."""
    if cong.layout != sys.layout:
        raise DimensionError("system and congruence use different layouts")
    u = _dense_base(cong.layout, b)
    Fbar = to_float_array(f_at(sys, lift_at(cong, u)))
    Zv = z_at(cong, u)
    worst = 0.0
    for i in range(sys.n):
        ZiZ = to_float_array(directional(lambda w: z_at(cong, w), u, zfield_at(cong, i, u, Zv)))
        worst = max(worst, float(np.max(np.abs(Fbar[:, i, :] - ZiZ))))
    return worst


def commutator_residual(cong: Congruence, b) -> float:
    """max over i < j and σ of |Z_i(Z^σ_j) − Z_j(Z^σ_i)|."""
    lay = cong.layout
    u = _dense_base(lay, b)
    Zv = z_at(cong, u)
    D = [to_float_array(directional(lambda w: z_at(cong, w), u, zfield_at(cong, i, u, Zv)))
         for i in range(lay.n)]
    worst = 0.0
    for i in range(lay.n):
        for j in range(i + 1, lay.n):
            worst = max(worst, float(np.max(np.abs(D[i][:, j] - D[j][:, i]))))
    return worst
