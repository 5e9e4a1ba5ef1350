"""Lagrange critical systems for removal ML degrees.

For a slice ``X ∩ H1 ∩ ... ∩ H(k-1)`` with ``Hk`` removed, the degeneration
points of ``sum u_i dz_i/z_i + u_{N+1} df/f`` (``f`` the equation of ``Hk``)
are the torus solutions, off ``Hk``, of::

    g_j(z) = 0                                       j = 1..c
    u_i f + u_{N+1} a_i z_i - z_i f sum_j lam_j dg_j/dz_i = 0   i = 1..N

where ``g`` is ``F`` together with the sliced hyperplanes, randomized down to
the codimension ``c`` when there are more generators than that.  For ``k = 0``
the second block is ``u_i - z_i sum_j lam_j dg_j/dz_i``.

Unknowns are ordered ``(z_1..z_N, lam_1..lam_c)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .polyring import Polynomial, PolySystem


def unit_circle(rng: np.random.Generator, shape) -> np.ndarray:
    """Complex numbers drawn uniformly from the unit circle."""
    return np.exp(2j * np.pi * rng.random(shape))


@dataclass(frozen=True)
class Hyperplane:
    """The affine hyperplane ``a . z - b = 0``."""

    a: np.ndarray
    b: complex

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        if a.ndim != 1 or not np.any(a != 0):
            raise ValueError("hyperplane needs a nonzero direction vector")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", complex(self.b))

    @property
    def nvars(self) -> int:
        return len(self.a)

    def __call__(self, z) -> complex:
        return complex(np.dot(self.a, np.asarray(z, dtype=complex)) - self.b)

    def polynomial(self) -> Polynomial:
        return Polynomial.linear(list(self.a), -self.b)

    def through(self, point) -> Hyperplane:
        """Parallel hyperplane through ``point``."""
        return Hyperplane(self.a, complex(np.dot(self.a, np.asarray(point, dtype=complex))))


@dataclass(frozen=True)
class MLForm:
    """Coefficients ``u_1..u_N`` of ``dz_i/z_i`` and ``u_{N+1}`` of ``df/f``."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.ndim != 1 or np.any(u == 0):
            raise ValueError("ML form coefficients must all be nonzero")
        object.__setattr__(self, "u", u)

    @classmethod
    def random(cls, nvars: int, rng: np.random.Generator) -> MLForm:
        return cls(unit_circle(rng, nvars + 1))


@dataclass(frozen=True)
class CriticalSystem:
    system: PolySystem
    nvars: int
    k: int
    c: int
    removed: Hyperplane | None
    sliced: tuple[Hyperplane, ...]
    randomizer: np.ndarray
    form: MLForm
    constraints: PolySystem
    bidegrees: tuple[tuple[int, int], ...] = field(default=())

    @property
    def nunknowns(self) -> int:
        return self.nvars + self.c

    def z_part(self, x) -> np.ndarray:
        return np.asarray(x, dtype=complex)[..., : self.nvars]


def hyperplanes_through_point(point, count: int, rng: np.random.Generator) -> list[Hyperplane]:
    """``count`` random hyperplanes through ``point`` with unit-modulus directions."""
    if count < 1:
        raise ValueError("count must be at least 1")
    P = np.asarray(point, dtype=complex)
    if np.any(P == 0):
        raise ValueError("point must lie in the torus")
    A = unit_circle(rng, (count, len(P)))
    return [Hyperplane(a, complex(a @ P)) for a in A]


def codimension(nvars: int, d: int, k: int) -> int:
    return nvars - d + max(k - 1, 0)


def randomize_constraints(
    G: PolySystem, c: int, rng: np.random.Generator, force: bool = False
) -> tuple[PolySystem, np.ndarray]:
    """Random unit-modulus combinations ``R @ G`` down to ``c`` equations.

    When ``G`` already has ``c`` equations the identity is used unless
    ``force`` is set.
    """
    m = len(G)
    if c > G.nvars:
        raise ValueError(f"codimension {c} exceeds the number of variables {G.nvars}")
    if c < 1:
        raise ValueError("codimension must be positive")
    if m < c:
        raise ValueError(f"{m} generators cannot cut out codimension {c}")
    if m == c and not force:
        return G, np.eye(c, dtype=complex)
    R = unit_circle(rng, (c, m))
    return _combine(G, R), R


def _combine(G: PolySystem, R: np.ndarray) -> PolySystem:
    if R.shape == (len(G), len(G)) and np.array_equal(R, np.eye(len(G))):
        return G
    zero = Polynomial.constant(G.nvars, 0.0)
    eqs = []
    for row in R:
        acc = zero
        for r, g in zip(row, G.equations):
            if r != 0:
                acc = acc + r * g
        eqs.append(acc)
    return PolySystem(G.nvars, eqs)


def build_removal_system(
    F: PolySystem,
    d: int,
    H: Sequence[Hyperplane],
    k: int,
    form: MLForm,
    rng: np.random.Generator | None = None,
    *,
    randomizer: np.ndarray | None = None,
    randomize_square: bool = False,
) -> CriticalSystem:
    """Square critical system whose regular torus solutions count ``r_k``.

    ``H`` lists the hyperplanes ``H1, H2, ...``; ``H[k-1]`` is removed and
    ``H[:k-1]`` slice.  Pass ``randomizer`` to reuse a previous draw.
    """
    N = F.nvars
    if not 0 <= k <= d + 1:
        raise ValueError(f"slice index k={k} outside 0..{d + 1}")
    if d >= N or d < 0:
        raise ValueError(f"dimension {d} invalid for {N} variables")
    if k >= 1 and len(H) < k:
        raise ValueError(f"need {k} hyperplanes, got {len(H)}")
    for h in H:
        if h.nvars != N:
            raise ValueError("hyperplane and system variable counts differ")
    if len(form.u) != N + 1:
        raise ValueError(f"ML form needs {N + 1} coefficients")

    c = codimension(N, d, k)
    sliced = tuple(H[: max(k - 1, 0)])
    G = PolySystem(N, list(F.equations) + [h.polynomial() for h in sliced])
    if randomizer is not None:
        R = np.asarray(randomizer, dtype=complex)
        if R.shape != (c, len(G)):
            raise ValueError(f"randomizer must have shape {(c, len(G))}")
        g = _combine(G, R)
    else:
        if rng is None and (len(G) != c or randomize_square):
            raise ValueError("a random generator is required to randomize")
        g, R = randomize_constraints(G, c, rng, force=randomize_square)

    n = N + c
    zmap = list(range(N))
    g_full = [p.substitute_variables(n, zmap) for p in g.equations]
    z = [Polynomial.variable(n, i) for i in range(N)]
    lam = [Polynomial.variable(n, N + j) for j in range(c)]
    u = form.u
    removed = H[k - 1] if k >= 1 else None
    f = removed.polynomial().substitute_variables(n, zmap) if removed is not None else None

    lagrange = []
    for i in range(N):
        s = Polynomial.constant(n, 0.0)
        for j in range(c):
            dg = g.equations[j].partial_derivative(i)
            if not dg.is_zero():
                s = s + lam[j] * dg.substitute_variables(n, zmap)
        if f is None:
            eq = u[i] - z[i] * s
        else:
            eq = u[i] * f + (u[N] * removed.a[i]) * z[i] - z[i] * f * s
        lagrange.append(eq)

    system = PolySystem(n, g_full + lagrange)
    zi, li = range(N), range(N, n)
    bideg = tuple(
        (int(max(p.degree_in(zi), 0)), int(max(p.degree_in(li), 0))) for p in system.equations
    )
    return CriticalSystem(
        system=system,
        nvars=N,
        k=k,
        c=c,
        removed=removed,
        sliced=sliced,
        randomizer=R,
        form=form,
        constraints=G,
        bidegrees=bideg,
    )


def lagrange_multipliers(C: CriticalSystem, z) -> np.ndarray:
    """Least-squares multipliers making the Lagrange block vanish at ``z``.

    Useful to lift a degeneration point known only by its ``z`` coordinates.
    """
    z = np.asarray(z, dtype=complex)
    N = C.nvars
    g = _combine(C.constraints, C.randomizer)
    J = np.array([[p.partial_derivative(i).evaluate(z) for i in range(N)] for p in g.equations])
    u = C.form.u
    if C.removed is None:
        rhs = u[:N] / z
    else:
        fz = C.removed(z)
        rhs = u[:N] / z + u[N] * C.removed.a / fz
    lam, *_ = np.linalg.lstsq(J.T, rhs, rcond=None)
    return lam
