"""Tagged dual numbers for nested forward-mode differentiation.

A :class:`Dual` is ``re + eps*ε_tag``. Components may themselves be duals with
a smaller tag, which gives mixed partials of any order by nesting. Tags grow
monotonically, so the most recently seeded perturbation is always the outer
layer; two duals with different tags combine by treating the older one as a
constant with respect to the newer one. This avoids perturbation confusion
when a derivative is taken of a function that itself differentiates.
"""

from __future__ import annotations

import itertools
import math
from typing import Any, Callable, Sequence

import numpy as np

_tag_counter = itertools.count(1)


def new_tag() -> int:
    return next(_tag_counter)


class Dual:
    __slots__ = ("re", "eps", "tag")

    def __init__(self, re, eps, tag: int):
        self.re = re
        self.eps = eps
        self.tag = tag

    def __repr__(self) -> str:
        return f"Dual({self.re!r}, {self.eps!r}, tag={self.tag})"

    # arithmetic --------------------------------------------------------
    def __neg__(self):
        return Dual(-self.re, -self.eps, self.tag)

    def __pos__(self):
        return self

    def __add__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        if isinstance(o, Dual):
            if o.tag == self.tag:
                return Dual(self.re + o.re, self.eps + o.eps, self.tag)
            if o.tag > self.tag:
                return Dual(self + o.re, o.eps, o.tag)
        return Dual(self.re + o, self.eps, self.tag)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        if isinstance(o, Dual):
            if o.tag == self.tag:
                return Dual(self.re - o.re, self.eps - o.eps, self.tag)
            if o.tag > self.tag:
                return Dual(self - o.re, -o.eps, o.tag)
        return Dual(self.re - o, self.eps, self.tag)

    def __rsub__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        # o is never a Dual here
        return Dual(o - self.re, -self.eps, self.tag)

    def __mul__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        if isinstance(o, Dual):
            if o.tag == self.tag:
                return Dual(self.re * o.re, self.re * o.eps + self.eps * o.re, self.tag)
            if o.tag > self.tag:
                return Dual(self * o.re, self * o.eps, o.tag)
        return Dual(self.re * o, self.eps * o, self.tag)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        if isinstance(o, Dual):
            if o.tag == self.tag:
                q = self.re / o.re
                return Dual(q, (self.eps - q * o.eps) / o.re, self.tag)
            if o.tag > self.tag:
                q = self / o.re
                return Dual(q, -(q * o.eps) / o.re, o.tag)
        return Dual(self.re / o, self.eps / o, self.tag)

    def __rtruediv__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        q = o / self.re
        return Dual(q, -(q * self.eps) / self.re, self.tag)

    def __pow__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        return power(self, o)

    def __rpow__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        return power(o, self)

    def __float__(self) -> float:
        return float(primal(self))


Number = Any  # float or Dual


def primal(x: Number) -> float:
    while isinstance(x, Dual):
        x = x.re
    return x


def is_integral(x: float) -> bool:
    return float(x).is_integer()


# elementary functions ----------------------------------------------------

def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.re), cos(x.re) * x.eps, x.tag)
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.re), -sin(x.re) * x.eps, x.tag)
    return math.cos(x)


def tan(x):
    if isinstance(x, Dual):
        c = cos(x.re)
        return Dual(tan(x.re), x.eps / (c * c), x.tag)
    return math.tan(x)


def cot(x):
    # cos/sin keeps derivatives smooth across tan's pole at pi/2
    if isinstance(x, Dual):
        s = sin(x.re)
        return Dual(cos(x.re) / s, -x.eps / (s * s), x.tag)
    return math.cos(x) / math.sin(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.re)
        return Dual(e, e * x.eps, x.tag)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.re), x.eps / x.re, x.tag)
    return math.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        r = sqrt(x.re)
        return Dual(r, x.eps / (2 * r), x.tag)
    return math.sqrt(x)


def fabs(x):
    if isinstance(x, Dual):
        return x if primal(x) >= 0 else -x
    return abs(x)


def power(x, y):
    """``x**y``; integral float exponents use repeated multiplication rules."""
    if not isinstance(y, Dual):
        if isinstance(x, Dual):
            if is_integral(y):
                k = int(y)
                if k == 0:
                    return 1.0
                return Dual(power(x.re, y), k * power(x.re, y - 1) * x.eps, x.tag)
            return Dual(power(x.re, y), y * power(x.re, y - 1) * x.eps, x.tag)
        if is_integral(y) and abs(y) < 2**31:
            k = int(y)
            if k < 0:
                return 1.0 / (x ** (-k))
            return x ** k
        return x ** y
    if not isinstance(x, Dual) or x.tag < y.tag:
        # d(x^y) = x^y * log(x) dy along y's tag
        v = power(x, y.re)
        return Dual(v, v * log(x) * y.eps, y.tag)
    return exp(y * log(x))


# seeding and extraction ------------------------------------------------

def tangent(value, tag: int):
    """The ε-coefficient of ``value`` for ``tag`` (0.0 when independent)."""
    if isinstance(value, Dual) and value.tag == tag:
        return value.eps
    return 0.0


def strip(value, tag: int):
    """The part of ``value`` that does not depend on ``tag``."""
    if isinstance(value, Dual) and value.tag == tag:
        return value.re
    return value


_tangent_ufunc = np.frompyfunc(tangent, 2, 1)
_strip_ufunc = np.frompyfunc(strip, 2, 1)


def tangent_of(result, tag: int):
    """Apply :func:`tangent` across scalars, tuples/lists and object arrays."""
    if isinstance(result, np.ndarray):
        return _tangent_ufunc(result, tag)
    if isinstance(result, (list, tuple)):
        return type(result)(tangent_of(r, tag) for r in result)
    return tangent(result, tag)


def directional(f: Callable, point: Sequence[Number], direction: Sequence[Number]):
    """Derivative of ``f`` at ``point`` along ``direction``.

    ``f`` receives a list of numbers; its result may be a scalar, a
    (nested) list or an object array. Components of ``direction`` equal to
    a literal zero are not seeded.
    """
    tag = new_tag()
    seeded = [
        Dual(p, d, tag) if (isinstance(d, Dual) or d != 0) else p
        for p, d in zip(point, direction)
    ]
    return tangent_of(f(seeded), tag)


def partial(f: Callable, point: Sequence[Number], index: int):
    tag = new_tag()
    seeded = list(point)
    seeded[index] = Dual(seeded[index], 1.0, tag)
    return tangent_of(f(seeded), tag)


def jacobian(f: Callable, point: Sequence[Number], indices: Sequence[int] | None = None) -> list:
    """``[∂f/∂z_c for c in indices]`` by one forward pass per coordinate."""
    if indices is None:
        indices = range(len(point))
    return [partial(f, point, c) for c in indices]


def nested_partial(f: Callable, point: Sequence[float], multi_index: Sequence[int]):
    """Mixed partial of ``f`` over ``multi_index`` by nesting one tag per entry."""
    seeded: list = list(point)
    tags = []
    for idx in multi_index:
        tag = new_tag()
        tags.append(tag)
        seeded[idx] = Dual(seeded[idx], 1.0, tag)
    out = f(seeded)
    for tag in reversed(tags):
        out = tangent_of(out, tag)
    return out


def to_float_array(obj) -> np.ndarray:
    """Object array (or nested list) of plain numbers to a float array."""
    arr = np.asarray(obj, dtype=object)
    return np.vectorize(primal, otypes=[float])(arr) if arr.size else arr.astype(float)
