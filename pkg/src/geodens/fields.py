"""Coefficient fields: complex scalar functions of chart or ambient coordinates.

Expression-backed fields evaluate vectorized through the expression engine's
array path; callable-backed fields fall back to a python loop.  Coordinates
are named ``<prefix>1 .. <prefix>dim`` with prefix "u" on charts and "x" in
the ambient space.
"""
from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from . import exprlang
from .exprlang import BinOp, Expr, Num


class ScalarField:
    """Interface: a complex scalar field evaluated pointwise or on batches."""

    def __call__(self, point) -> complex:
        raise NotImplementedError

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.array([self(p) for p in points], dtype=complex)


class ExprField(ScalarField):
    """Field defined by expression trees for the real and imaginary parts."""

    def __init__(self, re_expr: Expr, im_expr: Expr | None = None,
                 prefix: str = "u", params: Mapping[str, float] | None = None):
        self.re_expr = re_expr
        self.im_expr = im_expr
        self.prefix = prefix
        self.params = dict(params or {})

    def _bindings(self, coords):
        b = {f"{self.prefix}{i + 1}": c for i, c in enumerate(coords)}
        b.update(self.params)
        return b

    def __call__(self, point) -> complex:
        p = np.asarray(point, dtype=float).ravel()
        b = self._bindings(p)
        re = exprlang.evaluate(self.re_expr, b)
        im = exprlang.evaluate(self.im_expr, b) if self.im_expr is not None else 0.0
        return complex(re) + 1j * float(im)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        n = points.shape[0]
        b = self._bindings([points[:, i] for i in range(points.shape[1])])
        re = np.broadcast_to(np.asarray(exprlang.evaluate(self.re_expr, b)), (n,))
        if self.im_expr is None:
            return re.astype(complex)
        im = np.broadcast_to(np.asarray(exprlang.evaluate(self.im_expr, b)), (n,))
        return re + 1j * im

    def scaled(self, factor: complex) -> "ExprField":
        """Fold a complex constant into the expression trees."""
        a, b = float(np.real(factor)), float(np.imag(factor))
        re, im = self.re_expr, self.im_expr

        def times(c: float, e: Expr | None) -> Expr | None:
            if e is None or c == 0.0:
                return None
            return e if c == 1.0 else BinOp("*", Num(c), e)

        def add(p: Expr | None, q: Expr | None) -> Expr | None:
            if p is None:
                return q
            if q is None:
                return p
            return BinOp("+", p, q)

        def sub(p: Expr | None, q: Expr | None) -> Expr | None:
            if q is None:
                return p
            if p is None:
                return exprlang.Neg(q)
            return BinOp("-", p, q)

        new_re = sub(times(a, re), times(b, im))
        new_im = add(times(b, re), times(a, im))
        if new_re is None:
            new_re = Num(0.0)
        return ExprField(new_re, new_im, self.prefix, self.params)


class FuncField(ScalarField):
    """Field defined by an arbitrary python callable on coordinate vectors."""

    def __init__(self, fn: Callable[[np.ndarray], complex]):
        self.fn = fn

    def __call__(self, point) -> complex:
        return complex(self.fn(np.asarray(point, dtype=float).ravel()))


def as_field(obj, prefix: str = "u",
             params: Mapping[str, float] | None = None) -> ScalarField:
    """Coerce a string, expression tree, number, or callable into a field."""
    if isinstance(obj, ScalarField):
        return obj
    if isinstance(obj, str):
        return ExprField(exprlang.parse(obj), prefix=prefix, params=params)
    if isinstance(obj, (Num, exprlang.Var, exprlang.Neg, BinOp, exprlang.Call)):
        return ExprField(obj, prefix=prefix, params=params)
    if isinstance(obj, complex) and obj.imag != 0.0:
        return ExprField(Num(obj.real), Num(obj.imag), prefix=prefix, params=params)
    if isinstance(obj, (int, float, complex)):
        return ExprField(Num(float(np.real(obj))), prefix=prefix, params=params)
    if callable(obj):
        return FuncField(obj)
    raise TypeError(f"cannot interpret {type(obj).__name__} as a scalar field")
