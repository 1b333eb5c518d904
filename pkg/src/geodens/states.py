"""Geometric states: distributional alpha-densities concentrated on a core.

A state of degree alpha on a k-core C of R^n is a coefficient over C's chart
together with a declared conormal frame family: the data of an alpha-density
along C tensored with a (1-alpha)-density on the conormal bundle.  Pairing a
state of degree alpha with an ambient test density of degree 1-alpha
integrates the restricted test density against the state over the core:

    <theta, phi> = integral over C of  g(u) f(psi(u)) |det [t(u) | n(u)]|^(1-alpha) du

with n(u) the dual frame of the state's conormal family, so the result does
not depend on any of the frame choices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import exprlang, linalg, quadrature
from .errors import DegreeMismatch, UnboundedDomain
from .fields import ExprField, FuncField, ScalarField, as_field
from .density import AmbientDensity
from .geometry import Submanifold, frames_at
from .quadrature import QuadratureOptions, as_box, intersect_boxes

NormalSolver = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ConormalFamily:
    """A frame family of q conormal covectors along a core.

    ``rows_at(u)`` returns the (q, n) covector rows at chart coordinates u.
    Families built from an affine core without an implicit form are constant
    and advertise that through ``constant`` so integrators can hoist them.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray],
                 constant: np.ndarray | None = None, provenance: str = "custom"):
        self._fn = fn
        self.constant = None if constant is None else np.asarray(constant, dtype=float)
        self.provenance = provenance

    @classmethod
    def from_core(cls, core: Submanifold) -> "ConormalFamily":
        provenance = "implicit" if core.implicit is not None else "complement"
        if core.is_affine:
            rows = frames_at(core, np.zeros(core.dim)).conormal.matrix
            if core.implicit is None or _constant_rows(core, rows):
                return cls(lambda u, r=rows: r, rows, provenance)
        return cls(lambda u: frames_at(core, u).conormal.matrix, None, provenance)

    @classmethod
    def from_rows(cls, rows) -> "ConormalFamily":
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        return cls(lambda u: rows, rows, "custom")

    def rows_at(self, u) -> np.ndarray:
        if self.constant is not None:
            return self.constant
        return np.atleast_2d(np.asarray(self._fn(np.asarray(u, dtype=float)),
                                        dtype=float))

    def recombined(self, b) -> "ConormalFamily":
        b = np.asarray(b, dtype=float)
        const = None if self.constant is None else b @ self.constant
        return ConormalFamily(lambda u: b @ self.rows_at(u), const,
                              self.provenance + "+recombined")


def _constant_rows(core: Submanifold, rows: np.ndarray) -> bool:
    # an implicit form on an affine core may still vary off the base point
    for u in np.linspace(-1.0, 1.0, 3):
        probe = frames_at(core, np.full(core.dim, u)).conormal.matrix
        if not np.allclose(probe, rows, atol=1e-12):
            return False
    return True


@dataclass(frozen=True, eq=False)
class GeometricState:
    """A distributional alpha-density with core C."""

    core: Submanifold
    degree: complex
    coeff: ScalarField                 # chart coordinates u1..uk
    conormal: ConormalFamily
    support: np.ndarray | None = None  # (k, 2) chart box

    @property
    def codim(self) -> int:
        return self.core.ambient.dim - self.core.dim


def make_state(core: Submanifold, degree, coeff, conormal=None,
               support=None) -> GeometricState:
    """Build a geometric state; strings parse as chart-coordinate expressions."""
    family = conormal if isinstance(conormal, ConormalFamily) else (
        ConormalFamily.from_core(core) if conormal is None
        else ConormalFamily.from_rows(conormal))
    u0 = np.zeros(core.dim) if core.domain is None else core.domain.mean(axis=1)
    rows = family.rows_at(u0)
    if rows.shape != (core.ambient.dim - core.dim, core.ambient.dim):
        raise ValueError(
            f"conormal family shape {rows.shape} does not match codimension")
    return GeometricState(core, complex(degree), as_field(coeff, "u", core.params),
                          family, None if support is None else as_box(support))


def zero_section_state(core: Submanifold, h, support=None) -> GeometricState:
    """The canonical half-density state of a function on the conormal bundle.

    ``h`` may reference chart coordinates u1..uk and fiber coordinates
    xi1..xiq; the state's coefficient is the fiberwise value at the zero
    section, h(u, 0).
    """
    expr = exprlang.parse(h) if isinstance(h, str) else h
    q = core.ambient.dim - core.dim
    at_zero = exprlang.subst(expr, {f"xi{j + 1}": exprlang.Num(0.0) for j in range(q)})
    return make_state(core, 0.5, ExprField(at_zero, prefix="u", params=core.params),
                      support=support)


def recombine_conormal(state: GeometricState, b) -> GeometricState:
    """Re-express the same abstract state against conormal frame b @ nu.

    The coefficient picks up |det b|^(1 - alpha) so every pairing is unchanged.
    """
    b = np.asarray(b, dtype=float)
    factor = linalg.det_abs_pow(b, 1.0 - state.degree)
    if isinstance(state.coeff, ExprField):
        coeff = state.coeff.scaled(factor)
    else:
        old = state.coeff
        coeff = FuncField(lambda u: old(u) * factor)
    return GeometricState(state.core, state.degree, coeff,
                          state.conormal.recombined(b), state.support)


@dataclass(frozen=True)
class PairingResult:
    value: complex
    error_estimate: float


def pair_with_test(state: GeometricState, phi: AmbientDensity,
                   options: QuadratureOptions | None = None,
                   normal_solver: NormalSolver | None = None) -> PairingResult:
    """Distributional pairing of a state with a complementary test density.

    Degrees must satisfy state.degree + phi.degree = 1.  The integration box
    is the chart domain intersected with the state's support; both unbounded
    raises UnboundedDomain.  ``normal_solver`` overrides the dual-frame
    choice (nu_rows, tangent_columns) -> normal_columns; the invariance of
    the pairing under that choice is a theorem, the hook exists to test it.
    """
    if abs(state.degree + phi.degree - 1.0) > 1e-12:
        raise DegreeMismatch(
            f"pairing needs degrees summing to 1, got {state.degree} + {phi.degree}")
    opts = options or QuadratureOptions()
    solver = normal_solver or linalg.dual_normal_frame
    core = state.core

    if core.dim == 0:
        u = np.zeros(0)
        x = core.point_at(u)
        nmat = solver(state.conormal.rows_at(u), np.zeros((core.ambient.dim, 0)))
        value = state.coeff(u) * phi.coeff(x) * linalg.det_abs_pow(nmat, phi.degree)
        return PairingResult(value, 0.0)

    if core.domain is None and state.support is None:
        raise UnboundedDomain(
            f"state on {core.name!r} has no bounded integration box")
    box = intersect_boxes(core.domain, state.support)
    if box is None:
        return PairingResult(0.0 + 0.0j, 0.0)

    integrand = _pairing_integrand(state, phi, solver)
    value, estimate = quadrature.integrate(integrand, box, opts)
    quadrature.ensure_converged(value, estimate, opts)
    return PairingResult(value, estimate)


def _pairing_integrand(state: GeometricState, phi: AmbientDensity,
                       solver: NormalSolver):
    core = state.core
    if core.is_affine and state.conormal.constant is not None:
        t = core.form.tangent
        nmat = solver(state.conormal.constant, t)
        factor = linalg.det_abs_pow(np.hstack([t, nmat]), phi.degree)

        def fast(coords: np.ndarray) -> np.ndarray:
            x = core.points_at(coords)
            return state.coeff.eval_many(coords) * phi.coeff.eval_many(x) * factor

        return fast

    def general(coords: np.ndarray) -> np.ndarray:
        out = np.empty(coords.shape[0], dtype=complex)
        for i, u in enumerate(coords):
            sample = frames_at(core, u)
            t = sample.tangent.matrix
            nmat = solver(state.conormal.rows_at(u), t)
            out[i] = state.coeff(u) * phi.coeff(sample.point) * \
                linalg.det_abs_pow(np.hstack([t, nmat]), phi.degree)
        return out

    return general
