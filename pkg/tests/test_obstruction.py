from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

import oracle
from conftest import job_points, load_job, system
from mlobstruct.frontend import ToleranceSet
from mlobstruct.obstruction import (
    MovingSliceFamily,
    RemovalProfile,
    batch_obstruction,
    check_path_budget,
    draw_base_point,
    ml_obstruction_value,
    obstruction_report,
    off_variety,
    removal_profile,
    start_path_counts,
)
from mlobstruct.mldeg import SolveOptions
from mlobstruct.tracker import PathBudgetError

CFG = ToleranceSet()
LINE = system(["x+y-1"], ["x", "y"])
DIRS = [(2, -3), (5, 7)]
U = (3, -4, 7)


def profile(F, d, P, seed=0):
    return removal_profile(F, d, np.asarray(P, dtype=complex), CFG, np.random.default_rng(seed)).r


def exact(g, P):
    return list(oracle.removal_counts(g, P, DIRS, U))


# ml_obstruction_value


@pytest.mark.parametrize(
    "d,r,want",
    [(1, (7, 10, 1), 2), (2, (3, 10, 9, 1), 1), (0, (1, 0), 1), (3, (12, 42, 48, 21, 3), 0)],
)
def test_ml_value_examples(d, r, want):
    v = ml_obstruction_value(r, d)
    assert v == want and isinstance(v, int)
    assert ml_obstruction_value(RemovalProfile("P", list(r)), d) == want


def test_ml_value_errors():
    with pytest.raises(ValueError):
        ml_obstruction_value([1, 2], 1)
    with pytest.raises(ValueError):
        ml_obstruction_value([1], -1)


# removal_profile


def test_line_profiles_match_oracle():
    X, Y = oracle.x, oracle.y
    on, off = (Fraction(3, 10), Fraction(7, 10)), (Fraction(3, 10), Fraction(1, 5))
    assert exact(X + Y - 1, on) == [1, 2, 0]
    assert exact(X + Y - 1, off) == [1, 2, 1]
    assert profile(LINE, 1, [float(v) for v in on]) == [1, 2, 0]
    assert profile(LINE, 1, [float(v) for v in off]) == [1, 2, 1]


def test_umbrella_pinch_line_point():
    job = load_job("umbrella")
    assert profile(job.system, 2, job_points(job)["P2"]) == [3, 10, 10, 1]


def test_hyperelliptic_singular_point():
    job = load_job("hyperelliptic")
    assert profile(job.system, 1, job_points(job)["P2"]) == [12, 23, 9]


def test_nodal_cubic_matches_oracle():
    job = load_job("nodal_cubic")
    g = sp.sympify(job.equations_text[0].replace("^", "**"), locals={"x": oracle.x, "y": oracle.y})
    want = {"off_curve": [7, 10, 3], "smooth": [7, 10, 2], "node": [7, 10, 1]}
    for p in job.points:
        rational = [Fraction(v).limit_denominator(1000) for v in (c.real for c in p.coordinates)]
        assert exact(g, rational) == want[p.label]
        assert profile(job.system, 1, [complex(c) for c in p.coordinates]) == want[p.label]


@pytest.mark.parametrize("D", [2, 3])
def test_general_curve_law(D):
    rng = np.random.default_rng(100 + D)
    P = (Fraction(2, 3), Fraction(-5, 4))
    g, text = oracle.random_curve(D, P, rng)
    F = system([text], ["x", "y"])
    off = (Fraction(-3, 7), Fraction(4, 5))
    assert exact(g, P) == [D * D, D * D + D, D - 1]
    assert exact(g, off) == [D * D, D * D + D, D]
    on_r = profile(F, 1, [float(v) for v in P])
    off_r = profile(F, 1, [float(v) for v in off])
    assert on_r == [D * D, D * D + D, D - 1]
    assert off_r == [D * D, D * D + D, D]
    assert ml_obstruction_value(on_r, 1) == 1
    assert ml_obstruction_value(off_r, 1) == 0


def test_reports_and_diagnostics():
    prof = removal_profile(LINE, 1, np.array([0.3, 0.7]), CFG, np.random.default_rng(0), label="on")
    rep = obstruction_report(prof, 1)
    d = rep.as_dict()
    assert d["label"] == "on" and d["r"] == [1, 2, 0] and d["ml"] == 1
    diag = d["diagnostics"]
    assert diag["paths_tracked"] == diag["converged"] + diag["diverged"] + diag["singular"]
    assert set(diag["filtered"]) >= {"off_torus", "on_removed_hyperplane", "duplicates"}


def test_profile_rejects_wrong_point_length():
    with pytest.raises(ValueError):
        removal_profile(LINE, 1, np.array([1.0, 2.0, 3.0]), CFG, np.random.default_rng(0))


# path budgets


def test_start_path_counts_and_budget():
    job = load_job("hankel_sum")
    two = start_path_counts(job.system, 3, SolveOptions("two_homogeneous"))
    assert two == [810, 1920, 480, 60, 3]
    tot = start_path_counts(job.system, 3, SolveOptions("total_degree"))
    assert tot == [3072, 9375, 9375, 9375, 9375]
    assert check_path_budget(job.system, 3, SolveOptions("two_homogeneous", max_paths=10000)) == two
    with pytest.raises(PathBudgetError):
        check_path_budget(job.system, 3, SolveOptions("total_degree", max_paths=10000))


# base points and slice families


def test_off_variety_and_base_point():
    assert off_variety(LINE, [0.3, 0.2], CFG)
    assert not off_variety(LINE, [0.3, 0.7], CFG)
    P0 = draw_base_point(LINE, CFG, np.random.default_rng(0), radius=2.0)
    np.testing.assert_allclose(np.abs(P0), 2.0)
    assert off_variety(LINE, P0, CFG)


def test_moving_slice_family():
    A = np.array([[1.0, 2.0], [0.5, -1.0]])
    fam = MovingSliceFamily(A, [1.0, 1.0], [3.0, -1.0])
    np.testing.assert_allclose(fam.gamma(0.5), [2.0, 0.0])
    for t in (0.0, 0.3, 1.0):
        for h in fam.hyperplanes(t):
            assert abs(h(fam.gamma(t))) < 1e-14
    with pytest.raises(ValueError):
        MovingSliceFamily(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 1.0], [2.0, 2.0])
    with pytest.raises(ValueError):
        MovingSliceFamily(A, [1.0, 1.0, 1.0], [2.0, 2.0])


# batch mode


def test_batch_hyperelliptic_singular_points():
    job = load_job("hyperelliptic")
    pts = job_points(job)
    labels = [f"P{i}" for i in range(1, 6)]
    rng = np.random.default_rng(0)
    reports = batch_obstruction(job.system, 1, None, [pts[l] for l in labels], CFG, rng, labels=labels)
    base = reports[0].diagnostics["base_profile"]
    assert base == [12, 23, 11]
    for rep in reports:
        assert rep.profile.r == [12, 23, 9]
        assert rep.ml_value == 2
        assert all(a <= b for a, b in zip(rep.profile.r, base))


def test_batch_target_equal_to_base():
    job = load_job("umbrella")
    rng = np.random.default_rng(1)
    P0 = draw_base_point(job.system, CFG, rng)
    rep = batch_obstruction(job.system, 2, P0, [P0], CFG, rng)[0]
    assert rep.profile.r == rep.diagnostics["base_profile"]
    assert rep.profile.r == profile(job.system, 2, P0, seed=2)


def test_batch_agrees_with_direct_on_umbrella():
    job = load_job("umbrella")
    pts = job_points(job)
    rng = np.random.default_rng(2)
    reports = batch_obstruction(job.system, 2, None, list(pts.values()), CFG, rng, labels=list(pts))
    for rep in reports:
        assert rep.profile.r == profile(job.system, 2, pts[rep.label], seed=3)
        assert all(a <= b for a, b in zip(rep.profile.r, rep.diagnostics["base_profile"]))
    assert [r.ml_value for r in reports] == [1, 2, 1]


@pytest.mark.slow
def test_batch_hankel():
    job = load_job("hankel_sum")
    pts = job_points(job)
    rng = np.random.default_rng(0)
    reports = batch_obstruction(job.system, 3, None, [pts["P1"], pts["P2"]], CFG, rng)
    assert [r.ml_value for r in reports] == [1, 0]
    assert reports[0].profile.r == [12, 42, 48, 21, 2]
    assert reports[1].profile.r == [12, 42, 48, 19, 1]


def test_batch_rejects_base_on_variety():
    with pytest.raises(ValueError):
        batch_obstruction(LINE, 1, np.array([0.3, 0.7]), [np.array([0.5, 0.5])], CFG, np.random.default_rng(0))
