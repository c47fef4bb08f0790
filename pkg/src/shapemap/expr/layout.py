from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import LayoutError

NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*\Z")
RESERVED = frozenset({"pi", "e", "sin", "cos", "tan", "cot", "exp", "log", "sqrt", "abs"})

#: scopes an expression may be resolved against, by number of visible slots
SCOPES = ("independent", "base", "jet")


@dataclass(frozen=True)
class VariableLayout:
    """Ordered coordinate names for X, Y and J^1.

    Dense vectors are laid out as ``x^1..x^n, y^1..y^m`` followed by the
    jet coordinates ``y^σ_i`` in σ-major order, named ``"<dep>_<indep>"``.
    """

    independent: tuple[str, ...]
    dependent: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __init__(self, independent: Sequence[str], dependent: Sequence[str]):
        object.__setattr__(self, "independent", tuple(independent))
        object.__setattr__(self, "dependent", tuple(dependent))
        declared = self.independent + self.dependent
        if not self.independent:
            raise LayoutError("at least one independent variable is required")
        if not self.dependent:
            raise LayoutError("at least one dependent variable is required")
        for name in declared:
            if not isinstance(name, str) or not NAME_RE.match(name):
                raise LayoutError(f"invalid variable name {name!r}")
            if name in RESERVED:
                raise LayoutError(f"variable name {name!r} is reserved")
        if len(set(declared)) != len(declared):
            raise LayoutError(f"duplicate variable names in {declared}")
        names = declared + self.jet_names
        object.__setattr__(self, "_index", {nm: k for k, nm in enumerate(names)})

    @property
    def n(self) -> int:
        return len(self.independent)

    @property
    def m(self) -> int:
        return len(self.dependent)

    @property
    def jet_names(self) -> tuple[str, ...]:
        return tuple(f"{d}_{x}" for d in self.dependent for x in self.independent)

    @property
    def names(self) -> tuple[str, ...]:
        return self.independent + self.dependent + self.jet_names

    @property
    def base_names(self) -> tuple[str, ...]:
        return self.independent + self.dependent

    def size(self, scope: str = "jet") -> int:
        if scope == "independent":
            return self.n
        if scope == "base":
            return self.n + self.m
        if scope == "jet":
            return self.n + self.m + self.n * self.m
        raise ValueError(f"unknown scope {scope!r}")

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise LayoutError(f"no variable named {name!r}") from None

    def lookup(self, name: str, scope: str = "jet") -> int | None:
        k = self._index.get(name)
        if k is None or k >= self.size(scope):
            return None
        return k

    # index helpers for the dense jet vector
    def x(self, i: int) -> int:
        return i

    def y(self, sigma: int) -> int:
        return self.n + sigma

    def yx(self, sigma: int, i: int) -> int:
        return self.n + self.m + sigma * self.n + i

    def resolve_independent(self, key) -> int:
        """Accept an index or an independent variable name."""
        if isinstance(key, str):
            if key not in self.independent:
                raise LayoutError(f"{key!r} is not an independent variable")
            return self.independent.index(key)
        if not 0 <= key < self.n:
            raise LayoutError(f"independent index {key} out of range")
        return int(key)

    def resolve_dependent(self, key) -> int:
        if isinstance(key, str):
            if key not in self.dependent:
                raise LayoutError(f"{key!r} is not a dependent variable")
            return self.dependent.index(key)
        if not 0 <= key < self.m:
            raise LayoutError(f"dependent index {key} out of range")
        return int(key)
