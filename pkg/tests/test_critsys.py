import numpy as np
import pytest
import sympy as sp

from conftest import load_job, system
from mlobstruct.critsys import (
    Hyperplane,
    MLForm,
    build_removal_system,
    codimension,
    hyperplanes_through_point,
    lagrange_multipliers,
    randomize_constraints,
)
from mlobstruct.polyring import PolySystem

LINE = system(["x+y-1"], ["x", "y"])


def residual(C, x):
    return np.abs(C.system.evaluate(x)).max()


# hyperplanes_through_point


def test_hyperplane_through_point_example():
    h = Hyperplane(np.ones(3), 0).through([2, 3, 5])
    assert h.b == 10
    assert h([2, 3, 5]) == 0


def test_hyperplanes_seeded_and_through_point():
    P = np.array([2, 3, 5], dtype=complex)
    a = hyperplanes_through_point(P, 3, np.random.default_rng(4))
    b = hyperplanes_through_point(P, 3, np.random.default_rng(4))
    assert len(a) == 3
    for h, g in zip(a, b):
        np.testing.assert_array_equal(h.a, g.a)
        assert h.b == g.b
        assert abs(h(P)) < 1e-12
        np.testing.assert_allclose(np.abs(h.a), 1.0)


def test_hyperplanes_reject_bad_input():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        hyperplanes_through_point([1, 0], 2, rng)
    with pytest.raises(ValueError):
        hyperplanes_through_point([1, 2], 0, rng)


# randomize_constraints


def test_randomize_single_generator():
    g, R = randomize_constraints(LINE, 1, np.random.default_rng(1), force=True)
    assert R.shape == (1, 1)
    assert R[0, 0] != 0
    z = np.array([0.3 + 1j, 0.25])
    assert np.isclose(g[0].evaluate(z), R[0, 0] * LINE[0].evaluate(z))


def test_randomize_hankel_shape_and_determinism():
    job = load_job("hankel_sum")
    F = job.system
    N, d, k = F.nvars, job.dimension_d, 2
    c = codimension(N, d, k)
    assert c == 3
    H = hyperplanes_through_point(np.ones(N) * (0.2 + 0.1j), k - 1, np.random.default_rng(0))
    G = PolySystem(N, list(F.equations) + [h.polynomial() for h in H[: k - 1]])
    assert len(G) == 3
    _, R1 = randomize_constraints(G, c, np.random.default_rng(9), force=True)
    _, R2 = randomize_constraints(G, c, np.random.default_rng(9), force=True)
    assert R1.shape == (3, 3)
    np.testing.assert_array_equal(R1, R2)


def test_randomize_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        randomize_constraints(LINE, 2, rng)
    with pytest.raises(ValueError):
        randomize_constraints(LINE, 3, rng)


# build_removal_system


def test_line_k0_unique_solution():
    u = np.array([0.7 + 0.2j, -1.1 + 0.5j, 0.9])
    C = build_removal_system(LINE, 1, [], 0, MLForm(u))
    assert len(C.system) == 3 and C.nunknowns == 3
    x = u[0] / (u[0] + u[1])
    y = u[1] / (u[0] + u[1])
    z = np.array([x, y])
    lam = lagrange_multipliers(C, z)
    assert residual(C, np.concatenate([z, lam])) < 1e-14


def test_line_removal_matches_exact_elimination():
    # rational data so the degeneration points can be solved exactly
    X, Y = sp.symbols("X Y")
    a, P = (2, -3), (sp.Rational(3, 10), sp.Rational(7, 10))
    u = (3, 5, -7)
    H = [Hyperplane(np.array(a, dtype=complex), complex(a[0] * P[0] + a[1] * P[1]))]
    C = build_removal_system(LINE, 1, H, 1, MLForm(np.array(u, dtype=complex)))
    f = a[0] * (X - P[0]) + a[1] * (Y - P[1])
    crit = u[0] * Y * f - u[1] * X * f + u[2] * X * Y * (a[0] - a[1])
    sols = sp.solve([X + Y - 1, crit], [X, Y], dict=True)
    sols = [s for s in sols if s[X] != 0 and s[Y] != 0 and f.subs(s) != 0]
    assert len(sols) == 2
    for s in sols:
        z = np.array([complex(s[X]), complex(s[Y])])
        lam = lagrange_multipliers(C, z)
        assert residual(C, np.concatenate([z, lam])) < 1e-8


def test_shapes_and_lambda_linearity():
    hyp = system(["(y-2)^2 - (x-1)*(x^5+2*x+5)^2"], ["x", "y"])
    rng = np.random.default_rng(2)
    C = build_removal_system(hyp, 1, [], 0, MLForm.random(2, rng))
    assert C.c == 1 and C.nunknowns == 3 and len(C.system) == 3

    job = load_job("hankel_sum")
    F, N = job.system, job.system.nvars
    H = hyperplanes_through_point(np.full(N, 0.2 + 0.1j), 4, rng)
    C = build_removal_system(F, 3, H, 4, MLForm.random(N, rng), rng)
    assert C.c == 5 and C.nunknowns == 10 and len(C.system) == 10
    assert [q for _, q in C.bidegrees[:5]] == [0] * 5
    assert all(q == 1 for _, q in C.bidegrees[5:])
    for k in range(5):
        Ck = build_removal_system(F, 3, H, k, MLForm.random(N, rng), rng)
        assert len(Ck.system) == Ck.nunknowns == N + codimension(N, 3, k)
        assert all(q <= 1 for _, q in Ck.bidegrees)


def test_square_constraints_keep_identity_unless_forced():
    job = load_job("hankel_sum")
    F, N = job.system, job.system.nvars
    rng = np.random.default_rng(3)
    H = hyperplanes_through_point(np.full(N, 0.2 + 0.1j), 4, rng)
    C = build_removal_system(F, 3, H, 4, MLForm.random(N, rng), rng)
    np.testing.assert_array_equal(C.randomizer, np.eye(5))
    C = build_removal_system(F, 3, H, 4, MLForm.random(N, rng), rng, randomize_square=True)
    assert not np.allclose(C.randomizer, np.eye(5))


def test_build_errors():
    rng = np.random.default_rng(0)
    form = MLForm.random(2, rng)
    with pytest.raises(ValueError):
        build_removal_system(LINE, 1, [], 3, form, rng)
    with pytest.raises(ValueError):
        build_removal_system(LINE, 1, [], 1, form, rng)
    with pytest.raises(ValueError):
        build_removal_system(LINE, 2, [], 0, form, rng)
    with pytest.raises(ValueError):
        MLForm(np.array([1.0, 0.0, 2.0]))
