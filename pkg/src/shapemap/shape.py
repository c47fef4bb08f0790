"""Directional and total shape operators of a congruence and their evolution.

Barred quantities are evaluated at the jet lift of a base point under Z.
Operators are stored in the (ω̄, ∂/∂y) basis with ω̄^ν = dy^ν − Z^ν_j dx^j.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .curvature import jacobi_at, lie_derivative_11, r_plus_at
from .errors import DimensionError
from .expr.dual import directional, partial, to_float_array
from .geometry import (
    Congruence,
    Direction,
    PdeSystem,
    _dense_base,
    embedded_residual,
    h_at,
    lift_at,
    z_at,
    zfield_at,
)

EMBED_WARN = 1e-8


@dataclass(frozen=True)
class ShapeMatrix:
    """``A[σ][ν]`` = A^σ_ν."""

    A: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.A))


@dataclass(frozen=True)
class TotalShape:
    """``A[σ][ν][i]`` = A^σ_{νi}."""

    A: np.ndarray

    @property
    def trace_form(self) -> np.ndarray:
        return np.einsum("ssi->i", self.A)


def _check(sys, cong, dirn):
    if not (sys.layout == cong.layout == dirn.layout):
        raise DimensionError("system, congruence and direction use different layouts")


def total_shape_at(sys: PdeSystem, cong: Congruence, dirn: Direction, u) -> list:
    """Nested ``A[σ][ν][i]`` at the dense base vector ``u`` (dual-compatible)."""
    lay = sys.layout
    n, m = lay.n, lay.m
    Hbar = h_at(sys, dirn, lift_at(cong, u))
    dZ = [partial(lambda w: z_at(cong, w), u, lay.y(nu)) for nu in range(m)]  # [ν][σ][i]
    return [[[dZ[nu][s][i] - Hbar[s][nu][i] for i in range(n)] for nu in range(m)] for s in range(m)]


def shape_at(sys, cong, dirn, u) -> list:
    A = total_shape_at(sys, cong, dirn, u)
    v = dirn.values(u)
    m, n = sys.m, sys.n
    out = [[0.0] * m for _ in range(m)]
    for s in range(m):
        for nu in range(m):
            acc = 0.0
            for i in range(n):
                acc = acc + v[i] * A[s][nu][i]
            out[s][nu] = acc
    return out


def _warn_embedding(sys, cong, b):
    res = embedded_residual(sys, cong, b)
    if res > EMBED_WARN:
        warnings.warn(f"congruence is not embedded at {b} (residual {res:.3g})", RuntimeWarning, stacklevel=3)


def shape_operator(sys: PdeSystem, cong: Congruence, dirn: Direction, b, *, check: bool = True) -> ShapeMatrix:
    _check(sys, cong, dirn)
    u = _dense_base(sys.layout, b)
    if check:
        _warn_embedding(sys, cong, u)
    return ShapeMatrix(to_float_array(shape_at(sys, cong, dirn, u)))


def total_shape(sys: PdeSystem, cong: Congruence, dirn: Direction, b, *, check: bool = True) -> TotalShape:
    _check(sys, cong, dirn)
    u = _dense_base(sys.layout, b)
    if check:
        _warn_embedding(sys, cong, u)
    return TotalShape(to_float_array(total_shape_at(sys, cong, dirn, u)))


def traces(S: ShapeMatrix, T: TotalShape, dirn: Direction | None = None, b=None) -> tuple[float, np.ndarray]:
    """Tr A_Z and the trace 1-form of the total operator.

    When ``dirn`` and ``b`` are given, the contraction of the trace form with
    v is checked against Tr A_Z.
    """
    tr, form = S.trace, T.trace_form
    if dirn is not None and b is not None:
        u = _dense_base(dirn.layout, b)
        v = to_float_array(dirn.values(u))
        gap = abs(float(v @ form) - tr)
        if gap > 1e-9 * max(1.0, abs(tr)):
            raise ValueError(f"trace form contracts to {float(v @ form)!r}, not Tr A = {tr!r}")
    return tr, form


def a_squared(T) -> np.ndarray:
    """``A2[ν][ρ][i][k]`` = ½ Σ_σ (A^σ_{ρk} A^ν_{σi} − A^σ_{ρi} A^ν_{σk})."""
    A = T.A if isinstance(T, TotalShape) else np.asarray(T, dtype=float)
    P = np.einsum("srk,vsi->vrik", A, A)
    return 0.5 * (P - P.transpose(0, 1, 3, 2))


# evolution residuals -----------------------------------------------------------------

def _omega_bar(cong, u, Zv=None) -> np.ndarray:
    """Rows ω̄^ν in coordinate components on Y."""
    lay = cong.layout
    if Zv is None:
        Zv = z_at(cong, u)
    out = np.zeros((lay.m, lay.size("base")), dtype=object)
    for nu in range(lay.m):
        out[nu, lay.y(nu)] = 1.0
        for j in range(lay.n):
            out[nu, j] = -Zv[nu][j]
    return out


def _shape_coord(sys, cong, dirn, u) -> np.ndarray:
    """A_Z as a (1,1) tensor on Y: rows y^σ, ``K[a, b]`` = K^a_b."""
    lay = sys.layout
    A = shape_at(sys, cong, dirn, u)
    om = _omega_bar(cong, u)
    N = lay.size("base")
    K = np.zeros((N, N), dtype=object)
    for s in range(lay.m):
        row = np.zeros(N, dtype=object)
        for nu in range(lay.m):
            row = row + A[s][nu] * om[nu]
        K[lay.y(s)] = row
    return K


def _zv_at(cong, dirn, u) -> np.ndarray:
    lay = cong.layout
    v = dirn.values(u)
    Zv = z_at(cong, u)
    out = np.zeros(lay.size("base"), dtype=object)
    for i in range(lay.n):
        out[i] = v[i]
    for s in range(lay.m):
        acc = 0.0
        for i in range(lay.n):
            acc = acc + v[i] * Zv[s][i]
        out[lay.y(s)] = acc
    return out


def directional_residual_matrix(sys, cong, dirn, b) -> np.ndarray:
    """L_{Z_v}A + A∘A + i_{Z_v}(Φ̄_+ + r̄_+) as a full (1,1) tensor on Y."""
    _check(sys, cong, dirn)
    lay = sys.layout
    n, m, a = lay.n, lay.m, dirn.adapted
    u = _dense_base(lay, b)
    z = [float(t) for t in lift_at(cong, u)]
    v = to_float_array(dirn.values(u))
    K = to_float_array(_shape_coord(sys, cong, dirn, u))
    lie = lie_derivative_11(lambda w: _zv_at(cong, dirn, w), lambda w: _shape_coord(sys, cong, dirn, w), u)
    At = to_float_array(total_shape_at(sys, cong, dirn, u))
    om = to_float_array(_omega_bar(cong, u))
    psi = np.einsum("vmp,mb->vpb", At, om)  # ψ̄^ν_p = A^ν_{μp} ω̄^μ
    Phi = jacobi_at(sys, dirn, z)
    Phip = np.einsum("sivk,k->siv", Phi, v)
    rp = r_plus_at(sys, dirn, z)

    extra = np.zeros_like(K)
    for s in range(m):
        row = np.einsum("i,iv,vb->b", v, Phip[s], om)
        row += np.einsum("i,ipv,vpb->b", v, rp.c[s], psi)
        row -= np.einsum("i,ip,pb->b", v, rp.d[s], psi[s])
        extra[lay.y(s)] = row
    return lie + K @ K + extra


def evolution_residual_directional(sys: PdeSystem, cong: Congruence, dirn: Direction, b) -> np.ndarray:
    """m×m ω̄-components of the directional evolution residual (zero when the theory holds)."""
    full = directional_residual_matrix(sys, cong, dirn, b)
    lay = sys.layout
    ys = [lay.y(s) for s in range(lay.m)]
    return full[np.ix_(ys, ys)]


def evolution_residual_total(sys: PdeSystem, cong: Congruence, dirn: Direction, b) -> np.ndarray:
    """Residual ``R[ν][ρ][i][k]`` of [[Z, Â]] + A² + Z∧Φ on dx^i∧dx^k∧ω̄^ρ ⊗ ∂_ν.

    Every coefficient is taken as its (i, k) antisymmetric part ½(X_ik − X_ki).
    """
    _check(sys, cong, dirn)
    lay = sys.layout
    n, m = lay.n, lay.m
    u = _dense_base(lay, b)
    Zv = z_at(cong, u)
    A = to_float_array(total_shape_at(sys, cong, dirn, u))  # [σ][ν][k]
    H = to_float_array(h_at(sys, dirn, lift_at(cong, u)))  # [ν][ρ][k]
    dZ = to_float_array([partial(lambda w: z_at(cong, w), u, lay.y(r)) for r in range(m)])  # [ρ][σ][i]
    ZA = []
    ZH = []
    for i in range(n):
        field = zfield_at(cong, i, u, Zv)
        ZA.append(to_float_array(directional(lambda w: total_shape_at(sys, cong, dirn, w), u, field)))
        ZH.append(to_float_array(directional(lambda w: h_at(sys, dirn, lift_at(cong, w)), u, field)))
    ZA, ZH = np.array(ZA), np.array(ZH)  # [i][·][·][k]

    # C[ν][ρ][i][k]
    C = (np.einsum("vsk,rsi->vrik", A, dZ)
         - np.einsum("srk,svi->vrik", A, dZ)
         + np.einsum("ivrk->vrik", ZA))
    ZPhi = np.einsum("ivrk->vrik", ZH) + np.einsum("sri,vsk->vrik", H, H)

    def anti(X):
        return 0.5 * (X - X.transpose(0, 1, 3, 2))

    return anti(C) + a_squared(A) + anti(ZPhi)
