"""Acceptance suite: one test and one printed pass/fail line per criterion.

Run ``pytest tests/test_acceptance.py -s`` to see the lines as they print;
without ``-s`` pytest shows them for failing criteria only.  Every expected
number here is either a closed form or a frozen value from an independent
oracle (composite Simpson, high-precision symbolic evaluation); none were
produced by the code under test.
"""
import functools
import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

import _exprgen
from geodens.density import AmbientDensity
from geodens.exprlang import evaluate, parse, to_source
from geodens.geometry import Submanifold
from geodens.linalg import dual_normal_frame
from geodens.oracle import compare_inner
from geodens.product import inner_product, product, product_at_point
from geodens.states import make_state, pair_with_test, recombine_conormal

SCENES = Path(__file__).resolve().parent.parent / "scenes"
GOLDEN = Path(__file__).resolve().parent / "golden_exprs.json"

# composite Simpson, 4000 panels, for the integral of exp(-2 w^2) on [-8, 8]
SIMPSON_HALF_GAUSS = 1.2533141373153622

ORIGIN_2D = [0.0, 0.0]


def criterion(num):
    def deco(fn):
        @functools.wraps(fn)
        def run():
            try:
                detail = fn()
            except BaseException as exc:
                print(f"criterion {num:2d}: FAIL ({exc})")
                raise
            print(f"criterion {num:2d}: PASS ({detail})")
        return run
    return deco


def _line(name: str, phi: float) -> Submanifold:
    return Submanifold.affine(name, ORIGIN_2D, [math.cos(phi), math.sin(phi)])


def _unit_half_density(core: Submanifold):
    return make_state(core, 0.5, "1", support=[[-8.0, 8.0]])


@criterion(1)
def test_01_tilted_lines_inner_product_and_oracle():
    t0 = time.perf_counter()
    origin = Submanifold.point("E", ORIGIN_2D)
    cases = ((math.pi / 2, 1.0), (math.pi / 3, 2.0 / math.sqrt(3.0)),
             (math.pi / 6, 2.0))
    worst = 0.0
    for phi, want in cases:
        s1 = _unit_half_density(_line("C", 0.0))
        s2 = _unit_half_density(_line("D", phi))
        got = inner_product(s1, s2, origin).value
        rel = abs(got - want) / want
        assert rel <= 1e-10, f"phi={phi:.4f}: rel err {rel:.3e} > 1e-10"
        worst = max(worst, rel)
        # raises NonConvergent unless errors decrease (or sit at the noise
        # floor, which is where the exact tube pairings of flat unit states
        # land) and the final relative error is within 1e-2
        report = compare_inner(s1, s2, origin, (0.2, 0.1, 0.05))
        decreasing = all(b < a for a, b in zip(report.errors, report.errors[1:]))
        at_floor = all(e <= report.floor for e in report.errors)
        assert decreasing or at_floor, f"oracle errors {report.errors}"
        assert report.final_rel_error <= 1e-2
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"runtime {elapsed:.2f}s exceeds 5s"
    return (f"1/|sin phi| worst rel err {worst:.2e}, oracle converged at "
            f"eps 0.2/0.1/0.05, runtime {elapsed:.2f}s")


@criterion(2)
def test_02_full_space_product_is_pointwise():
    full = Submanifold.affine("X", ORIGIN_2D, np.eye(2))
    s1 = make_state(full, 0.3, "exp(-u1^2 - u2^2)")
    s2 = make_state(full, 0.7, "cos(u1)*exp(-u2^2) + 2")
    prod = product(s1, s2, full)
    axes = np.linspace(-2.0, 2.0, 10)
    grid = np.stack(np.meshgrid(axes, axes, indexing="ij"), axis=-1).reshape(-1, 2)
    worst = max(abs(prod.coeff(w) - s1.coeff(w) * s2.coeff(w)) for w in grid)
    assert worst <= 1e-14, f"max abs diff {worst:.3e} > 1e-14"
    return f"degenerate product == coefficient product, max abs diff {worst:.2e}"


@criterion(3)
def test_03_point_states_act_as_deltas():
    rng = np.random.default_rng(20260816)
    worst = 0.0
    for _ in range(20):
        x0 = rng.uniform(-2.0, 2.0, size=2)
        a, b, c = (float(v) for v in rng.uniform(0.5, 3.0, size=3))
        a += 4.0  # keep f positive so relative error is meaningful
        state = make_state(Submanifold.point("x0", x0), 0.0, "1")
        test = AmbientDensity.make(
            1.0, f"{a!r} + {b!r}*sin(x1) + {c!r}*exp(-x2^2)")
        got = pair_with_test(state, test)
        want = a + b * math.sin(x0[0]) + c * math.exp(-x0[1] ** 2)
        assert got.error_estimate == 0.0
        worst = max(worst, abs(got.value - want) / abs(want))
    assert worst <= 1e-14, f"worst rel err {worst:.3e} > 1e-14"
    return f"20 random (x0, f): pairing == f(x0), worst rel err {worst:.2e}"


@criterion(4)
def test_04_planes_in_r3_pipeline():
    p1 = Submanifold.affine("P1", [0, 0, 0], [[1, 0], [0, 1], [0, 0]])
    p2 = Submanifold.affine("P2", [0, 0, 0], [[1, 0], [0, 0], [0, 1]])
    line = Submanifold.affine("L", [0, 0, 0], [1.0, 0.0, 0.0])
    box = [[-8.0, 8.0], [-8.0, 8.0]]
    s1 = make_state(p1, 0.5, "exp(-u1^2)", support=box)
    s2 = make_state(p2, 0.5, "exp(-u1^2)", support=box)
    got = inner_product(s1, s2, line, support=[[-8.0, 8.0]]).value
    rel = abs(got - SIMPSON_HALF_GAUSS) / SIMPSON_HALF_GAUSS
    assert rel <= 1e-8, f"rel err {rel:.3e} > 1e-8 vs independent Simpson"
    return f"planes inner product vs Simpson oracle, rel err {rel:.2e}"


def _shifting_solver(shifts):
    """Valid dual-normal solver returning non-minimum-norm representatives."""
    def solver(nu_rows, tangent_cols):
        n = dual_normal_frame(nu_rows, tangent_cols)
        k, q = tangent_cols.shape[1], n.shape[1]
        if k and q:
            n = n + tangent_cols @ shifts((k, q))
        return n
    return solver


@criterion(5)
def test_05_choice_independence():
    rng = np.random.default_rng(20260817)
    origin = Submanifold.point("E", ORIGIN_2D)
    test = AmbientDensity.make(0.5, "exp(-x1^2 - x2^2)",
                               support=[[-8, 8], [-8, 8]])
    worst_pair = worst_prod = 0.0
    for trial in range(100):
        phi = rng.uniform(0.3, math.pi - 0.3)
        s1 = make_state(_line("C", 0.0), 0.5, "exp(-u1^2)",
                        support=[[-8.0, 8.0]])
        s2 = _unit_half_density(_line("D", phi))
        base_pair = pair_with_test(s1, test).value
        base_prod = product_at_point(s1, s2, origin, np.zeros(0))
        kind = trial % 3
        if kind == 0:
            r1 = recombine_conormal(s1, [[rng.uniform(0.2, 3.0) * rng.choice([-1.0, 1.0])]])
            r2 = recombine_conormal(s2, [[rng.uniform(0.2, 3.0) * rng.choice([-1.0, 1.0])]])
            pert_pair = pair_with_test(r1, test).value
            pert_prod = product_at_point(r1, r2, origin, np.zeros(0))
        elif kind == 1:
            tau = float(rng.uniform(-2.0, 2.0))
            solver = _shifting_solver(lambda shape, t=tau: np.full(shape, t))
            pert_pair = pair_with_test(s1, test, normal_solver=solver).value
            pert_prod = product_at_point(s1, s2, origin, np.zeros(0),
                                         dual_solver=solver)
        else:
            solver = _shifting_solver(lambda shape: rng.normal(0.0, 1.5, shape))
            pert_pair = pair_with_test(s1, test, normal_solver=solver).value
            pert_prod = product_at_point(s1, s2, origin, np.zeros(0),
                                         dual_solver=solver)
        worst_pair = max(worst_pair, abs(pert_pair - base_pair) / abs(base_pair))
        worst_prod = max(worst_prod, abs(pert_prod - base_prod) / abs(base_prod))
    assert worst_pair <= 1e-10, f"pairing drift {worst_pair:.3e} > 1e-10"
    assert worst_prod <= 1e-10, f"product drift {worst_prod:.3e} > 1e-10"
    return (f"100 trials: pairing drift {worst_pair:.2e}, "
            f"product drift {worst_prod:.2e}")


@criterion(6)
def test_06_chart_reparametrization_invariance():
    # u = v^3 + v maps [-1.5, 1.5] onto [-4.875, 4.875]
    flat = Submanifold.affine("C", ORIGIN_2D, [1.0, 0.0])
    s_flat = make_state(flat, 0.5, "exp(-u1^2)", support=[[-4.875, 4.875]])
    curved = Submanifold.chart("Cv", ["u1^3 + u1", "0"], [[-1.5, 1.5]],
                               implicit=["x2"])
    s_curved = make_state(curved, 0.5,
                          "exp(-(u1^3 + u1)^2) * sqrt(3*u1^2 + 1)",
                          support=[[-1.5, 1.5]])
    test = AmbientDensity.make(0.5, "exp(-x1^2 - x2^2)",
                               support=[[-8, 8], [-8, 8]])
    v_flat = pair_with_test(s_flat, test).value
    v_curved = pair_with_test(s_curved, test).value
    rel = abs(v_curved - v_flat) / abs(v_flat)
    assert rel <= 1e-7, f"reparametrized pairing rel err {rel:.3e} > 1e-7"
    return f"u = v^3 + v reparametrization, pairings agree to {rel:.2e}"


@criterion(7)
def test_07_degree_bookkeeping():
    rng = np.random.default_rng(20260818)
    c, d = _line("C", 0.0), _line("D", math.pi / 2)
    e = Submanifold.point("E", ORIGIN_2D)
    for trial in range(20):
        total = (0.3, 1.0, 2.0)[trial % 3]
        alpha = float(rng.uniform(0.05, total - 0.05))
        s1 = make_state(c, alpha, "1", support=[[-1, 1]])
        s2 = make_state(d, total - alpha, "1", support=[[-1, 1]])
        prod = product(s1, s2, e)
        assert prod.degree == s1.degree + s2.degree
        assert prod.core is e
    return "20 random (alpha, beta): product degree is alpha+beta, core is E"


@criterion(8)
def test_08_inner_product_extends_test_pairing():
    rng = np.random.default_rng(20260819)
    full = Submanifold.affine("X", ORIGIN_2D, np.eye(2))
    worst = 0.0
    for _ in range(10):
        tau = float(rng.uniform(0.0, math.pi))
        a, b, c = (float(v) for v in rng.uniform(0.5, 2.0, size=3))
        line = _line("C", tau)
        theta = make_state(line, 0.5, f"exp(-{c!r}*u1^2)",
                           support=[[-8.0, 8.0]])
        smooth = make_state(full, 0.5, f"exp(-{a!r}*u1^2 - {b!r}*u2^2)",
                            support=[[-8, 8], [-8, 8]])
        as_test = AmbientDensity.make(0.5, f"exp(-{a!r}*x1^2 - {b!r}*x2^2)",
                                      support=[[-8, 8], [-8, 8]])
        via_inner = inner_product(theta, smooth, line,
                                  support=[[-8.0, 8.0]]).value
        via_pair = pair_with_test(theta, as_test).value
        worst = max(worst, abs(via_inner - via_pair) / abs(via_pair))
    assert worst <= 1e-7, f"worst rel gap {worst:.3e} > 1e-7"
    return f"10 random configs: inner vs test pairing agree to {worst:.2e}"


@criterion(9)
def test_09_parser_and_dual_number_jacobians():
    rng = np.random.default_rng(20260820)
    for i in range(50):
        nvars = 1 + i % 3
        expr = _exprgen.random_expr(rng, nvars, depth=4)
        point = rng.uniform(-2.0, 2.0, size=nvars)
        assert _exprgen.ad_matches_fd(expr, point), to_source(expr)
    corpus = json.loads(GOLDEN.read_text())
    point = corpus["point"]
    for entry in corpus["entries"]:
        tree = parse(entry["source"])
        assert to_source(tree) == entry["printed"], entry["source"]
        assert parse(entry["printed"]) == tree, entry["source"]
        got = evaluate(tree, point)
        tol = 1e-12 + 1e-12 * abs(entry["value"])
        assert abs(got - entry["value"]) <= tol, entry["source"]
    n = len(corpus["entries"])
    return (f"50 random jacobians match FD to 1e-6; {n} golden expressions "
            "reprint bit-exact and evaluate to the symbolic oracle")


@criterion(10)
def test_10_cli_negative_controls():
    def run(cmd, scene):
        return subprocess.run(
            [sys.executable, "-m", "geodens", cmd, str(SCENES / scene)],
            capture_output=True, text=True, timeout=600).returncode

    code_t = run("inner", "parabola_nontransverse.json")
    assert code_t == 6, f"non-transverse inner exited {code_t}, want 6"
    code_d = run("pair", "degree_mismatch.json")
    assert code_d == 4, f"degree-mismatched pair exited {code_d}, want 4"
    return "non-transverse inner exit 6, degree-mismatched pair exit 4"
