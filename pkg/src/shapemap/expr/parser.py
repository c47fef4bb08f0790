"""Tokenizer, recursive-descent parser and closure compiler for expressions.

Grammar (precedence low to high)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

There is no implicit multiplication. Functions: sin cos tan cot exp log sqrt
abs. Constants: pi, e.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from ..errors import ArityError, DomainError, ExprSyntaxError, UnknownIdentifier
from . import dual
from .dual import primal
from .layout import VariableLayout

CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "sin": dual.sin,
    "cos": dual.cos,
    "tan": dual.tan,
    "cot": dual.cot,
    "exp": dual.exp,
    "log": dual.log,
    "sqrt": dual.sqrt,
    "abs": dual.fabs,
}
MAX_ORDER = 3

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, end
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


# AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Node:
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Const(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    index: int
    name: str


@dataclass(frozen=True)
class Neg(Node):
    operand: Node


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call(Node):
    func: str
    args: tuple[Node, ...]


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_text(node: Node) -> str:
    """Print a node so that re-parsing yields an equal tree."""
    if isinstance(node, Const):
        for name, value in CONSTANTS.items():
            if node.value == value:
                return name
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if isinstance(node.operand, Binary) and node.operand.op != "^":
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Binary):
        left, right = to_text(node.left), to_text(node.right)
        p = _PREC[node.op]
        if node.op == "^":
            # base binds tighter than unary minus; exponent is right-assoc
            if isinstance(node.left, (Binary, Neg)):
                left = f"({left})"
            if isinstance(node.right, Binary) and node.right.op != "^":
                right = f"({right})"
        else:
            if isinstance(node.left, Binary) and _PREC[node.left.op] < p:
                left = f"({left})"
            if isinstance(node.right, Binary) and _PREC[node.right.op] <= p:
                right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(node)


class _Parser:
    def __init__(self, text: str, layout: VariableLayout | None, scope: str):
        self.text = text
        self.layout = layout
        self.scope = scope
        self.tokens = tokenize(text)
        self.k = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.k]

    def advance(self) -> Token:
        t = self.tokens[self.k]
        self.k += 1
        return t

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"{message}, found {found}", tok.pos, self.text)

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind != "op":
            self.error(f"expected {text!r}")
        return self.advance()

    def parse(self) -> Node:
        if self.tok.kind == "end":
            self.error("empty expression")
        node = self.expr()
        if self.tok.kind != "end":
            self.error("unexpected token")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            rhs = self.term()
            node = Binary(op, node, rhs, span=(node.span[0], rhs.span[1]))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            rhs = self.unary()
            node = Binary(op, node, rhs, span=(node.span[0], rhs.span[1]))
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            start = self.advance().pos
            operand = self.unary()
            return Neg(operand, span=(start, operand.span[1]))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            exponent = self.unary()
            return Binary("^", base, exponent, span=(base.span[0], exponent.span[1]))
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text), span=(tok.pos, tok.pos + len(tok.text)))
        if tok.kind == "name":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(tok)
            return self.name(tok)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            close = self.expect(")")
            # keep the tree free of grouping nodes; widen the span for messages
            return _respan(inner, (tok.pos, close.pos + 1))
        self.error("expected a number, name or '('")

    def call(self, name_tok: Token) -> Node:
        name = name_tok.text
        if name not in FUNCTIONS:
            raise UnknownIdentifier(name, name_tok.pos)
        self.expect("(")
        args = []
        if not (self.tok.kind == "op" and self.tok.text == ")"):
            args.append(self.expr())
            while self.tok.kind == "op" and self.tok.text == ",":
                self.advance()
                args.append(self.expr())
        close = self.expect(")")
        if len(args) != 1:
            raise ArityError(name, 1, len(args), name_tok.pos)
        return Call(name, tuple(args), span=(name_tok.pos, close.pos + 1))

    def name(self, tok: Token) -> Node:
        span = (tok.pos, tok.pos + len(tok.text))
        if tok.text in CONSTANTS:
            return Const(CONSTANTS[tok.text], span=span)
        if tok.text in FUNCTIONS:
            raise ExprSyntaxError(f"function {tok.text!r} must be called", tok.pos, self.text)
        if self.layout is None:
            raise UnknownIdentifier(tok.text, tok.pos)
        k = self.layout.lookup(tok.text, self.scope)
        if k is None:
            raise UnknownIdentifier(tok.text, tok.pos)
        return Var(k, tok.text, span=span)


def _respan(node: Node, span: tuple[int, int]) -> Node:
    object.__setattr__(node, "span", span)
    return node


# compilation ---------------------------------------------------------------

def _compile(node: Node, text: str) -> Callable[[Sequence], object]:
    src = text[node.span[0]:node.span[1]] if text else to_text(node)

    if isinstance(node, Const):
        value = node.value
        return lambda z: value
    if isinstance(node, Var):
        k = node.index
        return lambda z: z[k]
    if isinstance(node, Neg):
        f = _compile(node.operand, text)
        return lambda z: -f(z)
    if isinstance(node, Call):
        (arg,) = node.args
        g = _compile(arg, text)
        return _compile_call(node.func, g, src)
    if isinstance(node, Binary):
        f = _compile(node.left, text)
        g = _compile(node.right, text)
        op = node.op
        if op == "+":
            return lambda z: f(z) + g(z)
        if op == "-":
            return lambda z: f(z) - g(z)
        if op == "*":
            return lambda z: f(z) * g(z)
        if op == "/":
            def div(z):
                den = g(z)
                if primal(den) == 0.0:
                    raise DomainError("division by zero", src)
                return f(z) / den
            return div
        if op == "^":
            if isinstance(node.right, Const):
                c = node.right.value
                integral = float(c).is_integer()

                def const_pow(z):
                    b = f(z)
                    pb = primal(b)
                    if not integral and pb < 0.0:
                        raise DomainError("negative base with non-integer exponent", src)
                    if pb == 0.0 and (c < 0 or (not integral and c < 1 and isinstance(b, dual.Dual))):
                        raise DomainError("power of zero is singular", src)
                    return dual.power(b, c)
                return const_pow

            def gen_pow(z):
                b, ex = f(z), g(z)
                pb, pe = primal(b), primal(ex)
                if isinstance(ex, dual.Dual):
                    if pb <= 0.0:
                        raise DomainError("non-positive base with variable exponent", src)
                elif not float(pe).is_integer() and pb < 0.0:
                    raise DomainError("negative base with non-integer exponent", src)
                elif pb == 0.0 and pe < 0:
                    raise DomainError("power of zero is singular", src)
                return dual.power(b, ex)
            return gen_pow
    raise TypeError(node)


def _compile_call(func: str, g, src: str):
    fn = FUNCTIONS[func]
    if func == "log":
        def call(z):
            a = g(z)
            if primal(a) <= 0.0:
                raise DomainError("log of non-positive value", src)
            return fn(a)
    elif func == "sqrt":
        def call(z):
            a = g(z)
            pa = primal(a)
            if pa < 0.0 or (pa == 0.0 and isinstance(a, dual.Dual)):
                raise DomainError("sqrt of negative value" if pa < 0 else "sqrt is not differentiable at 0", src)
            return fn(a)
    elif func == "cot":
        def call(z):
            a = g(z)
            if math.sin(primal(a)) == 0.0:
                raise DomainError("cot at a multiple of pi", src)
            return fn(a)
    elif func == "tan":
        def call(z):
            a = g(z)
            if math.cos(primal(a)) == 0.0:
                raise DomainError("tan at an odd multiple of pi/2", src)
            return fn(a)
    elif func == "exp":
        def call(z):
            a = g(z)
            try:
                return fn(a)
            except OverflowError:
                raise DomainError("exp overflow", src) from None
    else:
        def call(z):
            return fn(g(z))
    return call


def _variables(node: Node) -> set[int]:
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Neg):
        return _variables(node.operand)
    if isinstance(node, Binary):
        return _variables(node.left) | _variables(node.right)
    if isinstance(node, Call):
        out: set[int] = set()
        for a in node.args:
            out |= _variables(a)
        return out
    return set()


class Expression:
    """An immutable parsed expression bound to a :class:`VariableLayout`.

    Calling the expression with a dense vector (floats or duals, in layout
    order) evaluates it.
    """

    __slots__ = ("text", "root", "layout", "scope", "_fn", "_vars")

    def __init__(self, text: str, root: Node, layout: VariableLayout | None, scope: str = "jet"):
        object.__setattr__(self, "text", text)
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "_fn", _compile(root, text))
        object.__setattr__(self, "_vars", frozenset(_variables(root)))

    def __setattr__(self, key, value):
        raise AttributeError("Expression is immutable")

    def __call__(self, z):
        return self._fn(z)

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and self.root == other.root and self.layout == other.layout

    def __hash__(self) -> int:
        return hash(self.root)

    @property
    def variables(self) -> frozenset[int]:
        """Dense indices of referenced variables."""
        return self._vars

    @property
    def is_constant(self) -> bool:
        return not self._vars

    def to_string(self) -> str:
        return to_text(self.root)

    def dense(self, point) -> list:
        return _dense(self, point)


def parse(text: str, layout: VariableLayout | None = None, scope: str = "jet") -> Expression:
    """Parse ``text`` against ``layout``; variables are resolved immediately.

    ``scope`` restricts visible variables to ``"independent"`` (x only),
    ``"base"`` (x and y) or ``"jet"`` (everything).
    """
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text if isinstance(text, str) else "")
    root = _Parser(text, layout, scope).parse()
    return Expression(text, root, layout, scope)


def constant(value: float, layout: VariableLayout | None = None, scope: str = "jet") -> Expression:
    text = repr(float(value))
    return Expression(text, Const(float(value), span=(0, len(text))), layout, scope)


def _dense(expr: Expression, point) -> list:
    if isinstance(point, Mapping):
        if expr.layout is None:
            raise UnknownIdentifier(next(iter(point), "?"))
        names = expr.layout.names
        size = max(expr.variables, default=-1) + 1
        z = [math.nan] * size
        for k in expr.variables:
            if names[k] not in point:
                raise KeyError(f"no value for variable {names[k]!r}")
            z[k] = float(point[names[k]])
        return z
    return list(point)


def evaluate(expr: Expression, point) -> float:
    """IEEE double value of ``expr`` at ``point``.

    ``point`` is either a dense vector in layout order or a mapping from
    variable names to values covering every referenced variable.
    """
    return float(expr(_dense(expr, point)))


@dataclass(frozen=True)
class DerivativeRequest:
    point: tuple
    multi_index: tuple = ()

    def __post_init__(self):
        if len(self.multi_index) > MAX_ORDER:
            raise ValueError(f"derivative order {len(self.multi_index)} exceeds {MAX_ORDER}")


def derivative(expr: Expression, req: DerivativeRequest) -> float:
    """Mixed partial of ``expr`` over ``req.multi_index`` at ``req.point``.

    Multi-index entries are dense indices or variable names. The order-0
    request is plain evaluation.
    """
    indices = []
    for key in req.multi_index:
        if isinstance(key, str):
            if expr.layout is None:
                raise UnknownIdentifier(key)
            key = expr.layout.index(key)
        indices.append(int(key))
    z = _dense(expr, req.point)
    need = max(indices, default=-1) + 1
    if len(z) < need:
        z = z + [0.0] * (need - len(z))
    if not indices:
        return float(expr(z))
    return float(primal(dual.nested_partial(expr, z, indices)))
