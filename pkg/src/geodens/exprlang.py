"""Small arithmetic expression language for coefficients and chart maps.

Grammar, loosest binding first::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          right associative
    atom    := NUMBER | IDENT | IDENT '(' sum ')' | '(' sum ')'

so '^' binds tighter than unary minus: ``-u1^2`` is ``-(u1^2)``.

Functions: exp, sin, cos, sqrt, log.  ``pi`` is a reserved constant.
Any other identifier is free and must be bound at evaluation time
(chart coordinates u1..uk, ambient coordinates x1..xn, fiber coordinates
xi1..xiq, named scene parameters).

Evaluation is polymorphic over floats, numpy arrays (elementwise), and
DualNumber seeds; ``jacobian`` pushes dual numbers through a chart map and
returns the exact derivative, no finite differences anywhere.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnboundIdentifier, UnknownFunction

__all__ = [
    "Expr", "Num", "Var", "Neg", "BinOp", "Call", "DualNumber",
    "parse", "evaluate", "jacobian", "subst", "to_source",
    "FUNCTIONS", "CONSTANTS",
]


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi}


class DualNumber:
    """Forward-mode value with a derivative vector."""

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv):
        self.value = float(value)
        self.deriv = np.asarray(deriv, dtype=float)

    def __repr__(self):
        return f"DualNumber({self.value}, {self.deriv})"

    def __add__(self, other):
        if isinstance(other, DualNumber):
            return DualNumber(self.value + other.value, self.deriv + other.deriv)
        return DualNumber(self.value + other, self.deriv)

    __radd__ = __add__

    def __neg__(self):
        return DualNumber(-self.value, -self.deriv)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, DualNumber):
            return DualNumber(self.value * other.value,
                              self.value * other.deriv + other.value * self.deriv)
        return DualNumber(self.value * other, self.deriv * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, DualNumber):
            if other.value == 0.0:
                raise DomainError("division by zero")
            inv = 1.0 / other.value
            return DualNumber(self.value * inv,
                              (self.deriv - self.value * inv * other.deriv) * inv)
        if other == 0.0:
            raise DomainError("division by zero")
        return DualNumber(self.value / other, self.deriv / other)

    def __rtruediv__(self, other):
        if self.value == 0.0:
            raise DomainError("division by zero")
        inv = 1.0 / self.value
        return DualNumber(other * inv, -other * inv * inv * self.deriv)

    def __pow__(self, other):
        if isinstance(other, DualNumber):
            if np.any(other.deriv != 0.0):
                # general a^b needs a > 0
                if self.value <= 0.0:
                    raise DomainError("a^b with varying exponent needs a > 0")
                v = self.value ** other.value
                return DualNumber(v, v * (other.value / self.value * self.deriv
                                          + math.log(self.value) * other.deriv))
            other = other.value
        p = float(other)
        if self.value < 0.0 and p != round(p):
            raise DomainError("negative base with non-integer exponent")
        if self.value == 0.0:
            if p < 0.0:
                raise DomainError("zero base with negative exponent")
            if p == 0.0:
                return DualNumber(1.0, np.zeros_like(self.deriv))
            if p < 1.0:
                raise DomainError("derivative of x^p unbounded at 0 for p < 1")
            d = self.deriv if p == 1.0 else np.zeros_like(self.deriv)
            return DualNumber(0.0, d)
        return DualNumber(self.value ** p,
                          p * self.value ** (p - 1.0) * self.deriv)

    def exp(self):
        v = math.exp(self.value)
        return DualNumber(v, v * self.deriv)

    def sin(self):
        return DualNumber(math.sin(self.value), math.cos(self.value) * self.deriv)

    def cos(self):
        return DualNumber(math.cos(self.value), -math.sin(self.value) * self.deriv)

    def sqrt(self):
        if self.value < 0.0:
            raise DomainError("sqrt of a negative value")
        if self.value == 0.0:
            raise DomainError("derivative of sqrt unbounded at 0")
        v = math.sqrt(self.value)
        return DualNumber(v, 0.5 / v * self.deriv)

    def log(self):
        if self.value <= 0.0:
            raise DomainError("log of a non-positive value")
        return DualNumber(math.log(self.value), self.deriv / self.value)


def _f_exp(v):
    return v.exp() if isinstance(v, DualNumber) else np.exp(v)


def _f_sin(v):
    return v.sin() if isinstance(v, DualNumber) else np.sin(v)


def _f_cos(v):
    return v.cos() if isinstance(v, DualNumber) else np.cos(v)


def _f_sqrt(v):
    if isinstance(v, DualNumber):
        return v.sqrt()
    if np.any(np.asarray(v) < 0.0):
        raise DomainError("sqrt of a negative value")
    return np.sqrt(v)


def _f_log(v):
    if isinstance(v, DualNumber):
        return v.log()
    if np.any(np.asarray(v) <= 0.0):
        raise DomainError("log of a non-positive value")
    return np.log(v)


FUNCTIONS = {"exp": _f_exp, "sin": _f_sin, "cos": _f_cos,
             "sqrt": _f_sqrt, "log": _f_log}


# lexing / parsing

_TOKEN_RE = re.compile(r"""
      (?P<ws>\s+)
    | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op>[-+*/^()])
""", re.VERBOSE)


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def _tokenize(source: str):
    tokens = []
    i = 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        if m is None:
            raise ExprSyntaxError(
                f"unexpected character {source[i]!r}", _byte_offset(source, i))
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), _byte_offset(source, i)))
        i = m.end()
    tokens.append(("end", "", _byte_offset(source, len(source))))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, text, off = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}", off)
        self.advance()

    def parse(self) -> Expr:
        e = self.sum()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", off)
        return e

    def sum(self) -> Expr:
        e = self.product()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            e = BinOp(op, e, self.product())
        return e

    def product(self) -> Expr:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return BinOp("^", e, self.unary())
        return e

    def atom(self) -> Expr:
        kind, text, off = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise UnknownFunction(
                        f"unknown function {text!r} at offset {off}")
                self.advance()
                arg = self.sum()
                self.expect_op(")")
                return Call(text, arg)
            return Var(text)
        if kind == "op" and text == "(":
            e = self.sum()
            self.expect_op(")")
            return e
        shown = text if text else "end of input"
        raise ExprSyntaxError(f"unexpected {shown!r}", off)


def parse(source: str) -> Expr:
    """Parse source text into an expression tree."""
    return _Parser(source).parse()


# evaluation

def evaluate(expr: Expr, bindings: Mapping[str, object] | None = None):
    """Evaluate an expression tree.

    Bindings map identifier names to floats, numpy arrays (elementwise
    evaluation), or DualNumber seeds.  ``pi`` resolves before bindings.
    """
    b = bindings or {}

    def ev(e):
        if isinstance(e, Num):
            return e.value
        if isinstance(e, Var):
            if e.name in CONSTANTS:
                return CONSTANTS[e.name]
            try:
                return b[e.name]
            except KeyError:
                raise UnboundIdentifier(f"unbound identifier {e.name!r}") from None
        if isinstance(e, Neg):
            return -ev(e.arg)
        if isinstance(e, Call):
            return FUNCTIONS[e.func](ev(e.arg))
        left = ev(e.left)
        right = ev(e.right)
        if e.op == "+":
            return left + right
        if e.op == "-":
            return left - right
        if e.op == "*":
            return left * right
        if e.op == "/":
            return _div(left, right)
        return _pow(left, right)

    return ev(expr)


def _div(a, b):
    if isinstance(a, DualNumber) or isinstance(b, DualNumber):
        if not isinstance(a, DualNumber):
            a = DualNumber(a, np.zeros_like(np.atleast_1d(b.deriv)))
        return a / b
    if np.any(np.asarray(b) == 0.0):
        raise DomainError("division by zero")
    return a / b


def _pow(a, b):
    if isinstance(a, DualNumber) or isinstance(b, DualNumber):
        if not isinstance(a, DualNumber):
            a = DualNumber(a, np.zeros_like(np.atleast_1d(b.deriv)))
        return a ** b
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    nonint = bv != np.round(bv)
    if np.any((av < 0.0) & nonint):
        raise DomainError("negative base with non-integer exponent")
    if np.any((av == 0.0) & (bv < 0.0)):
        raise DomainError("zero base with negative exponent")
    return a ** b


def jacobian(exprs, point, bindings: Mapping[str, float] | None = None,
             prefix: str = "u") -> np.ndarray:
    """Exact jacobian of component expressions in <prefix>1..<prefix>k at ``point``.

    Returns shape (len(exprs), k).  Extra ``bindings`` (named parameters) are
    held constant.
    """
    p = np.asarray(point, dtype=float)
    k = p.shape[0]
    seeds: dict[str, object] = {
        f"{prefix}{i + 1}": DualNumber(p[i], np.eye(k)[i]) for i in range(k)}
    if bindings:
        seeds.update(bindings)
    rows = np.zeros((len(exprs), k))
    for i, e in enumerate(exprs):
        v = evaluate(e, seeds)
        if isinstance(v, DualNumber):
            rows[i] = v.deriv
    return rows


def subst(expr: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace free identifiers with expression trees."""
    if isinstance(expr, Num):
        return expr
    if isinstance(expr, Var):
        return mapping.get(expr.name, expr)
    if isinstance(expr, Neg):
        return Neg(subst(expr.arg, mapping))
    if isinstance(expr, Call):
        return Call(expr.func, subst(expr.arg, mapping))
    return BinOp(expr.op, subst(expr.left, mapping), subst(expr.right, mapping))


# printing

_LEFT_MIN = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 5}
_RIGHT_MIN = {"+": 2, "-": 2, "*": 3, "/": 3, "^": 3}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return 4 if e.op == "^" else (2 if e.op in "*/" else 1)
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Num) and e.value < 0:
        return 3
    return 5


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _emit(e: Expr) -> str:
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({_emit(e.arg)})"
    if isinstance(e, Neg):
        inner = _emit(e.arg)
        if _prec(e.arg) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    left = _emit(e.left)
    if _prec(e.left) < _LEFT_MIN[e.op]:
        left = f"({left})"
    right = _emit(e.right)
    if _prec(e.right) < _RIGHT_MIN[e.op]:
        right = f"({right})"
    if e.op == "^":
        return f"{left}^{right}"
    return f"{left} {e.op} {right}" if e.op in "+-" else f"{left}{e.op}{right}"


def to_source(expr: Expr) -> str:
    """Render a tree back to source.  Printing then parsing returns the same tree."""
    return _emit(expr)
