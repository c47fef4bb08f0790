"""Curvatures of the adapted splitting and the identities relating them.

Vector-valued 2-forms are stored as arrays ``T[a, b, c]``: component ``a``
of the value on the coordinate pair ``(∂_b, ∂_c)``. Wedge products carry no
normalising factor, ``(α∧β)(X, Y) = α(X)β(Y) − α(Y)β(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .expr.dual import directional, partial, to_float_array
from .geometry import (
    Direction,
    PdeSystem,
    _dense_jet,
    f_at,
    frame_at,
    gamma_vector_at,
    h_at,
    hfield_at,
)


@dataclass(frozen=True)
class CanonicalCurvature:
    """``B[σ][k][i][j]`` = [Γ_i, Γ_j]^σ_k; ``R_plus[σ][i][j]`` = v^k B when a direction is given."""

    B: np.ndarray
    R_plus: np.ndarray | None = None


@dataclass(frozen=True)
class RPlusMixed:
    """Coefficients of r_+.

    ``c[σ][i][p][ν]`` multiplies dx^i∧ψ^ν_p ⊗ ∂/∂y^σ_a (zero for p = a) and
    ``d[ν][i][p]`` = ∂v^p/∂x^i enters as −dx^i∧ψ^ν_p ⊗ ∂/∂y^ν_a.
    """

    c: np.ndarray
    d: np.ndarray


# kernels on dense vectors --------------------------------------------------------

def gamma_f_at(sys: PdeSystem, z, F=None) -> list:
    """``DF[i][σ][j][k]`` = Γ_i(F^σ_jk)."""
    if F is None:
        F = f_at(sys, z)
    return [directional(lambda w: f_at(sys, w), z, gamma_vector_at(sys, i, z, F)) for i in range(sys.n)]


def curvature_at(sys: PdeSystem, z) -> np.ndarray:
    n, m = sys.n, sys.m
    DF = to_float_array(gamma_f_at(sys, z))
    B = np.zeros((m, n, n, n))
    for i in range(n):
        for j in range(i + 1, n):
            # B[σ][k][i][j] = Γ_i(F^σ_jk) − Γ_j(F^σ_ik)
            B[:, :, i, j] = DF[i][:, j, :] - DF[j][:, i, :]
            B[:, :, j, i] = -B[:, :, i, j]
    return B


def jacobi_at(sys: PdeSystem, dirn: Direction, z) -> np.ndarray:
    """Float ``Φ[ν][i][σ][k]`` at ``z``."""
    n, m = sys.n, sys.m
    F = f_at(sys, z)
    H = h_at(sys, dirn, z)
    GH = to_float_array([directional(lambda w: h_at(sys, dirn, w), z, gamma_vector_at(sys, i, z, F))
                         for i in range(n)])  # [i][ν][σ][k]
    HF = to_float_array([directional(lambda w: f_at(sys, w), z, hfield_at(sys, s, H))
                         for s in range(m)])  # [σ][ν][i][k]
    Hf = to_float_array(H)  # [ν][σ][k]
    Phi = np.einsum("ivsk->visk", GH) - np.einsum("svik->visk", HF)
    # H^ρ_{σi} H^ν_{ρk}
    Phi += np.einsum("rsi,vrk->visk", Hf, Hf)
    return Phi


def r_plus_at(sys: PdeSystem, dirn: Direction, z) -> RPlusMixed:
    n, m, a = sys.n, sys.m, dirn.adapted
    lay = sys.layout
    v = to_float_array(dirn.values(z))
    H = to_float_array(h_at(sys, dirn, z))
    # dF[ν][p][σ][i][k] = ∂F^σ_ik/∂y^ν_p
    dF = np.array([[to_float_array(partial(lambda w: f_at(sys, w), z, lay.yx(nu, p))) for p in range(n)]
                   for nu in range(m)])
    c = np.zeros((m, n, n, m))
    for s in range(m):
        for i in range(n):
            for p in dirn.others:
                for nu in range(m):
                    delta = v[p] * (i == a) - (i == p)
                    c[s, i, p, nu] = sum(
                        v[k] * (v[p] * dF[nu, a, s, i, k] - dF[nu, p, s, i, k] - delta * H[s, nu, k])
                        for k in range(n))
    if dirn.is_constant:
        dv = np.zeros((n, n))
    else:
        dv = np.array([to_float_array(partial(dirn.values, z, i)) for i in range(n)])  # [i][p]
    d = np.broadcast_to(dv, (m, n, n)).copy()
    return RPlusMixed(c, d)


# public tensors ---------------------------------------------------------------

def canonical_curvature(sys: PdeSystem, p, dirn: Direction | None = None) -> CanonicalCurvature:
    z = _dense_jet(sys, p)
    B = curvature_at(sys, z)
    R_plus = None
    if dirn is not None:
        v = to_float_array(dirn.values(z))
        R_plus = np.einsum("k,skij->sij", v, B)
    return CanonicalCurvature(B, R_plus)


def jacobi(sys: PdeSystem, dirn: Direction, p) -> np.ndarray:
    """Jacobi endomorphism ``Φ[ν][i][σ][k]``."""
    return jacobi_at(sys, dirn, _dense_jet(sys, p))


def jacobi_plus(sys: PdeSystem, dirn: Direction, p) -> np.ndarray:
    """Partial Jacobi endomorphism ``Φ_+[σ][i][ν]`` = v^k Φ[σ][i][ν][k]."""
    z = _dense_jet(sys, p)
    v = to_float_array(dirn.values(z))
    return np.einsum("sivk,k->siv", jacobi_at(sys, dirn, z), v)


def r_plus(sys: PdeSystem, dirn: Direction, p) -> RPlusMixed:
    return r_plus_at(sys, dirn, _dense_jet(sys, p))


# brackets of vector-valued 1-forms ----------------------------------------------

def _eval(K, z) -> np.ndarray:
    return np.asarray(K(z), dtype=object)


def _jacobian(K, z) -> np.ndarray:
    """``J[d, ...]`` = ∂K/∂z_d for a callable returning an array."""
    return np.array([to_float_array(partial(lambda w: _eval(K, w), z, d)) for d in range(len(z))])


def fn_bracket_table(K: Callable, L: Callable, z) -> np.ndarray:
    """All coordinate-pair values ``T[a, b, c]`` of [[K, L]] at ``z``.

    ``K`` and ``L`` map a dense vector to the square matrix ``K[a, b]`` = K^a_b
    (column ``b`` is K(∂_b)); they must accept dual-valued vectors.
    """
    z = list(z)
    Kz, Lz = to_float_array(_eval(K, z)), to_float_array(_eval(L, z))
    JK, JL = _jacobian(K, z), _jacobian(L, z)
    # [K_b, L_c] and [L_b, K_c]
    t1 = np.einsum("db,dac->abc", Kz, JL) - np.einsum("dc,dab->abc", Lz, JK)
    t2 = np.einsum("db,dac->abc", Lz, JK) - np.einsum("dc,dab->abc", Kz, JL)
    # ∂_b L_c − ∂_c L_b, same for K
    curlL = np.einsum("bac->abc", JL) - np.einsum("cab->abc", JL)
    curlK = np.einsum("bac->abc", JK) - np.einsum("cab->abc", JK)
    return t1 + t2 - np.einsum("ae,ebc->abc", Kz, curlL) - np.einsum("ae,ebc->abc", Lz, curlK)


def fn_bracket_11(K: Callable, L: Callable, z, pair: tuple[int, int]) -> np.ndarray:
    """Vector [[K, L]](∂_b, ∂_c) at ``z`` for ``pair = (b, c)``."""
    b, c = pair
    return fn_bracket_table(K, L, z)[:, b, c]


def lie_derivative_11(X: Callable, K: Callable, z) -> np.ndarray:
    """(L_X K)^a_b at ``z`` for a vector field ``X`` and a (1,1) tensor ``K``."""
    z = list(z)
    Xz = to_float_array(np.asarray(X(z), dtype=object))
    Kz = to_float_array(_eval(K, z))
    JX = _jacobian(X, z)  # [d, a]
    JK = _jacobian(K, z)
    return (np.einsum("c,cab->ab", Xz, JK) - np.einsum("cb,ca->ab", Kz, JX)
            + np.einsum("ac,bc->ab", Kz, JX))


def wedge(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return np.multiply.outer(alpha, beta) - np.multiply.outer(beta, alpha)


# identity residuals ---------------------------------------------------------------

def curvature_forms(sys: PdeSystem, dirn: Direction, z) -> dict[str, np.ndarray]:
    """R, Φ, R_+, Φ_+ and r_+ as vector-valued 2-form arrays at ``z``."""
    lay = sys.layout
    n, m, N, a = sys.n, sys.m, sys.size, dirn.adapted
    fr = frame_at(sys, dirn, z)
    dx = to_float_array(fr.dx)
    om = to_float_array(fr.omega)
    psi = to_float_array(fr.psi)
    v = to_float_array(fr.v)
    B = curvature_at(sys, z)
    Phi = jacobi_at(sys, dirn, z)
    rp = r_plus_at(sys, dirn, z)
    dxdx = np.array([[wedge(dx[i], dx[j]) for j in range(n)] for i in range(n)])
    dxom = np.array([[wedge(dx[i], om[s]) for s in range(m)] for i in range(n)])
    dxpsi = np.array([[[wedge(dx[i], psi[nu, p]) for p in range(n)] for nu in range(m)] for i in range(n)])

    R = np.zeros((N, N, N))
    Ph = np.zeros((N, N, N))
    Rp = np.zeros((N, N, N))
    Pp = np.zeros((N, N, N))
    rpl = np.zeros((N, N, N))
    for s in range(m):
        for k in range(n):
            R[lay.yx(s, k)] = np.einsum("ij,ijbc->bc", B[s, k], dxdx)
            Ph[lay.yx(s, k)] = np.einsum("iv,ivbc->bc", Phi[s, :, :, k], dxom)
        Rp[lay.yx(s, a)] = np.einsum("k,kij,ijbc->bc", v, B[s], dxdx)
        Pp[lay.yx(s, a)] = np.einsum("ivk,k,ivbc->bc", Phi[s], v, dxom)
        rpl[lay.yx(s, a)] += np.einsum("ipv,ivpbc->bc", rp.c[s], dxpsi)
        rpl[lay.yx(s, a)] -= np.einsum("ip,ipbc->bc", rp.d[s], dxpsi[:, s])
    return {"R": R, "Phi": Ph, "R_plus": Rp, "Phi_plus": Pp, "r_plus": rpl}


def vertical_identity_residuals(sys: PdeSystem, dirn: Direction, p) -> dict[str, float]:
    """Max-norm residuals of the three vertical curvature identities.

    ``res_242``: Q∘[[G, Q]] + R + Φ.
    ``res_244``: Q_+∘[[G, Q_+]] + R_+ + Φ_+ + r_+.
    ``res_324``: Q_+∘L_{Γ_v}Q_+ + i_{Γ_v}(½R_+ + Φ_+ + r_+).
    """
    z = _dense_jet(sys, p)
    lay = sys.layout

    def G(w):
        F = f_at(sys, w)
        return sum(np.multiply.outer(np.array(gamma_vector_at(sys, i, w, F), dtype=object),
                                     np.eye(sys.size, dtype=object)[i]) for i in range(sys.n))

    def Q(w):
        return frame_at(sys, dirn, w).Q(lay)

    def Qp(w):
        return frame_at(sys, dirn, w).Q_plus()

    def Gv(w):
        F = f_at(sys, w)
        v = dirn.values(w)
        out = np.zeros(sys.size, dtype=object)
        for i in range(sys.n):
            out = out + v[i] * np.array(gamma_vector_at(sys, i, w, F), dtype=object)
        return out

    forms = curvature_forms(sys, dirn, z)
    Qz, Qpz = to_float_array(Q(z)), to_float_array(Qp(z))
    lhs242 = np.einsum("ae,ebc->abc", Qz, fn_bracket_table(G, Q, z))
    lhs244 = np.einsum("ae,ebc->abc", Qpz, fn_bracket_table(G, Qp, z))
    res242 = lhs242 + forms["R"] + forms["Phi"]
    res244 = lhs244 + forms["R_plus"] + forms["Phi_plus"] + forms["r_plus"]
    T = 0.5 * forms["R_plus"] + forms["Phi_plus"] + forms["r_plus"]
    gv = to_float_array(Gv(z))
    lhs324 = Qpz @ lie_derivative_11(Gv, Qp, z)
    res324 = lhs324 + np.einsum("c,acb->ab", gv, T)
    return {
        "res_242": float(np.max(np.abs(res242))),
        "res_244": float(np.max(np.abs(res244))),
        "res_324": float(np.max(np.abs(res324))),
    }
