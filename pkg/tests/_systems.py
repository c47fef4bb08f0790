"""Test systems shared by several test modules."""

import math

import numpy as np

from shapemap.expr import VariableLayout
from shapemap.geometry import make_congruence, make_system

M1 = np.array([[1.0, 2.0], [-1.0, 3.0]])
M2 = M1 @ M1 - 2 * M1 + np.eye(2)  # commutes with M1


def _lin(M, s):
    return f"({M[s, 0]:g}*y + {M[s, 1]:g}*u)"


def coupled_system():
    """m = 2 system with jet-dependent F that embeds the linear congruence Z_i = M_i y.

    The extra terms vanish on the image of Z but not their jet derivatives,
    so the semi-horizontal coefficients are nonzero along the lift.
    """
    lay = VariableLayout(["x", "w"], ["y", "u"])
    ys, xs, Ms = ["y", "u"], ["x", "w"], [M1, M2]
    F = {}
    for s in range(2):
        for i in range(2):
            for j in range(i, 2):
                MM = Ms[j] @ Ms[i]
                F[s, i, j] = (
                    _lin(MM, s)
                    + f" + (x+{i + 1}*u*y)*({ys[1 - s]}_{xs[j]} - {_lin(Ms[j], 1 - s)})"
                    + f" + sin(w+{s})*({ys[s]}_{xs[i]} - {_lin(Ms[i], s)})*({ys[s]}_{xs[j]}+1)"
                )
    sys = make_system(2, 2, lay, F)
    Z = make_congruence(lay, {(s, i): _lin(Ms[i], s) for s in range(2) for i in range(2)})
    return sys, Z


def lem_jet(rng):
    return [rng.uniform(0.3, 2.8), rng.uniform(-0.6, 0.6), rng.uniform(0.5, 2.0),
            rng.uniform(-1, 1), rng.uniform(-1, 1)]


def lem_base(rng):
    return [rng.uniform(0.3, 2.8), rng.uniform(-0.6, 0.6), rng.uniform(0.5, 2.0)]


HALF_PI = math.pi / 2
