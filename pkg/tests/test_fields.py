"""Coefficient field coercion and evaluation."""
import numpy as np
import pytest

from geodens.exprlang import parse, to_source
from geodens.fields import ExprField, FuncField, as_field


def test_string_coercion_uses_the_prefix():
    f = as_field("exp(-x1^2)", prefix="x")
    assert f((0.5,)) == pytest.approx(np.exp(-0.25))


def test_number_coercions():
    assert as_field(3)((0.0,)) == 3.0
    assert as_field(2.5)((0.0,)) == 2.5
    got = as_field(1.0 - 2.0j)((0.0,))
    assert got == 1.0 - 2.0j


def test_callable_coercion():
    f = as_field(lambda u: (2.0 - 1.0j) * float(np.exp(-u[0] ** 2)))
    assert isinstance(f, FuncField)
    assert f((1.0,)) == pytest.approx((2.0 - 1.0j) * np.exp(-1.0))


def test_rejects_nonsense():
    with pytest.raises(TypeError):
        as_field(object())


def test_params_resolve():
    f = as_field("a*u1", params={"a": 3.0})
    assert f((2.0,)) == 6.0


def test_eval_many_matches_pointwise():
    f = as_field("u1^2 * exp(-u2)")
    pts = np.array([[0.5, 0.1], [1.5, 0.0], [2.0, 2.0]])
    many = f.eval_many(pts)
    assert np.allclose(many, [f(p) for p in pts], atol=1e-15)


def test_eval_many_on_funcfield_loops():
    f = FuncField(lambda u: u[0] + 1j * u[1])
    pts = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(f.eval_many(pts), [1 + 2j, 3 + 4j])


def test_eval_many_constant_expression_broadcasts():
    f = as_field("2")
    assert np.allclose(f.eval_many(np.zeros((5, 1))), 2.0)


def test_scaled_folds_into_the_tree():
    f = as_field("exp(-u1^2)")
    g = f.scaled(2.0)
    assert isinstance(g, ExprField)
    assert g((0.3,)) == pytest.approx(2.0 * np.exp(-0.09))
    assert g.im_expr is None


def test_scaled_complex_factor():
    f = as_field("u1")
    g = f.scaled(1.0 + 2.0j)
    assert g((3.0,)) == pytest.approx(3.0 + 6.0j)
    # scaling a complex field mixes parts: (a+bi)(c+di)
    h = as_field(1.0 + 1.0j).scaled(1.0 + 1.0j)
    assert h((0.0,)) == pytest.approx(2.0j)


def test_scaled_trees_stay_printable():
    g = as_field("u1 + 1").scaled(-2.0)
    to_source(g.re_expr)  # must not raise
    assert g((1.0,)) == -4.0


def test_expr_tree_coercion():
    f = as_field(parse("u1 - u2"))
    assert f((5.0, 3.0)) == 2.0
