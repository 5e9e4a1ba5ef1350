"""Homotopy continuation: start systems, path tracking, endpoint handling.

Paths are tracked together: every array below carries a leading batch axis
and each path keeps its own ``t`` and step size.  The homotopy is::

    H(x, t) = (1 - t) * gamma * S(x) + t * T(x)

with a 4th order Runge-Kutta predictor and a Newton corrector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .critsys import CriticalSystem, unit_circle
from .frontend import ToleranceSet
from .polyring import BatchEvaluator, Polynomial, PolySystem

DIVERGENCE_RADIUS = 1e8
MIN_STEP = 1e-14
INITIAL_STEP = 0.01
MAX_STEP = 0.1
GROWTH = 1.5
GROWTH_AFTER = 4
ENDPOINT_NEWTON_ITERS = 30
#: parameter homotopies stop this far short of t = 1 and finish with Newton
END_GAP = 1e-6
#: paths still short of the end when ``1 - t`` falls below this are stalled
END_FLOOR = 1e-40
#: ill-conditioned endpoints count as roots only when ``cond * eps`` is below this
PROMOTE_ACCURACY = 1e-3
#: Newton steps used to test that an ill-conditioned endpoint is a fixed point
STABILITY_ITERS = 10

CONVERGED, DIVERGED, SINGULAR, TRUNCATED = "converged", "diverged", "singular", "truncated"
STATUSES = (CONVERGED, DIVERGED, SINGULAR, TRUNCATED)


class PathBudgetError(RuntimeError):
    """A start system has more paths than the caller allowed."""


# -- start systems ---------------------------------------------------------


class TotalDegreeStart:
    """``x_j^{D_j} - 1 = 0`` with roots of unity as start points."""

    strategy = "total_degree"

    def __init__(self, degrees: Sequence[int]):
        self.degrees = [int(d) for d in degrees]
        self.nvars = len(self.degrees)
        self.path_count = math.prod(self.degrees) if all(d > 0 for d in self.degrees) else 0

    def points(self) -> Iterator[np.ndarray]:
        if not self.path_count:
            return
        roots = [np.exp(2j * np.pi * np.arange(d) / d) for d in self.degrees]
        for combo in itertools.product(*roots):
            yield np.array(combo, dtype=complex)

    def values_and_jacobian(self, X):
        D = np.array(self.degrees)
        pw = X ** (D - 1)
        vals = pw * X - 1.0
        jac = np.zeros(X.shape + (X.shape[1],), dtype=complex)
        idx = np.arange(X.shape[1])
        jac[:, idx, idx] = D * pw
        return vals, jac

    def as_polysystem(self) -> PolySystem:
        n = self.nvars
        return PolySystem(
            n, [Polynomial.variable(n, j) ** d - 1.0 for j, d in enumerate(self.degrees)]
        )


def two_homogeneous_count(bidegrees: Sequence[tuple[int, int]], nz: int, nl: int) -> int:
    """2-homogeneous Bezout number for variable groups of sizes ``nz`` and ``nl``.

    Coefficient of ``a^nz b^nl`` in ``prod_j (p_j a + q_j b)``.
    """
    coeffs = {0: 1}
    for p, q in bidegrees:
        nxt: dict[int, int] = {}
        for used_l, val in coeffs.items():
            if p:
                nxt[used_l] = nxt.get(used_l, 0) + val * p
            if q and used_l < nl:
                nxt[used_l + 1] = nxt.get(used_l + 1, 0) + val * q
        coeffs = nxt
    if len(bidegrees) != nz + nl:
        return 0
    return coeffs.get(nl, 0)


class TwoHomogeneousStart:
    """Products of generic affine forms matching each equation's bidegree.

    Equation ``j`` of bidegree ``(p, q)`` becomes ``p`` forms in ``z`` times
    ``q`` forms in ``lambda``.  A start point picks one factor per equation,
    ``nz`` of them in ``z`` and ``nl`` in ``lambda``, and solves the two
    linear systems.
    """

    strategy = "two_homogeneous"

    def __init__(self, bidegrees: Sequence[tuple[int, int]], nz: int, nl: int, rng):
        if len(bidegrees) != nz + nl:
            raise ValueError("bidegree table must have one row per equation")
        self.bidegrees = [(int(p), int(q)) for p, q in bidegrees]
        self.nz, self.nl = nz, nl
        self.nvars = nz + nl
        # rows: [coefficients..., constant]
        self.zforms = [unit_circle(rng, (p, nz + 1)) for p, _ in self.bidegrees]
        self.lforms = [unit_circle(rng, (q, nl + 1)) for _, q in self.bidegrees]
        self.path_count = two_homogeneous_count(self.bidegrees, nz, nl)
        n = self.nvars
        self._grads = []
        for zf, lf in zip(self.zforms, self.lforms):
            g = np.zeros((len(zf) + len(lf), n), dtype=complex)
            g[: len(zf), :nz] = zf[:, :nz]
            g[len(zf) :, nz:] = lf[:, :nl]
            self._grads.append(g)

    def assignments(self) -> Iterator[tuple[int, ...]]:
        """Equation subsets placed in lambda slots that admit start points."""
        n = self.nvars
        for S in itertools.combinations(range(n), self.nl):
            chosen = set(S)
            if all(self.bidegrees[j][1] > 0 for j in S) and all(
                self.bidegrees[j][0] > 0 for j in range(n) if j not in chosen
            ):
                yield S

    def points(self) -> Iterator[np.ndarray]:
        n, nz = self.nvars, self.nz
        for S in self.assignments():
            lam_eqs = list(S)
            z_eqs = [j for j in range(n) if j not in set(S)]
            for zc in itertools.product(*(range(self.bidegrees[j][0]) for j in z_eqs)):
                Az = np.array([self.zforms[j][f] for j, f in zip(z_eqs, zc)])
                z = np.linalg.solve(Az[:, :nz], -Az[:, nz])
                for lc in itertools.product(*(range(self.bidegrees[j][1]) for j in lam_eqs)):
                    Al = np.array([self.lforms[j][f] for j, f in zip(lam_eqs, lc)])
                    lam = np.linalg.solve(Al[:, :-1], -Al[:, -1])
                    yield np.concatenate([z, lam])

    def _factors(self, X, j):
        zf, lf = self.zforms[j], self.lforms[j]
        parts = []
        if len(zf):
            parts.append(X[:, : self.nz] @ zf[:, :-1].T + zf[:, -1])
        if len(lf):
            parts.append(X[:, self.nz :] @ lf[:, :-1].T + lf[:, -1])
        if not parts:
            return np.zeros((X.shape[0], 0), dtype=complex)
        return np.concatenate(parts, axis=1)

    def values_and_jacobian(self, X):
        B, n = X.shape
        vals = np.empty((B, n), dtype=complex)
        jac = np.zeros((B, n, n), dtype=complex)
        for j in range(n):
            fac = self._factors(X, j)
            r = fac.shape[1]
            if r == 0:
                vals[:, j] = 1.0
                continue
            prefix = np.ones((B, r + 1), dtype=complex)
            suffix = np.ones((B, r + 1), dtype=complex)
            prefix[:, 1:] = np.cumprod(fac, axis=1)
            suffix[:, :-1] = np.cumprod(fac[:, ::-1], axis=1)[:, ::-1]
            vals[:, j] = prefix[:, -1]
            others = prefix[:, :-1] * suffix[:, 1:]
            jac[:, j, :] = others @ self._grads[j]
        return vals, jac

    def as_polysystem(self) -> PolySystem:
        n, nz = self.nvars, self.nz
        eqs = []
        for zf, lf in zip(self.zforms, self.lforms):
            p = Polynomial.constant(n, 1.0)
            for row in zf:
                p = p * Polynomial.linear(list(row[:-1]) + [0.0] * self.nl, row[-1])
            for row in lf:
                p = p * Polynomial.linear([0.0] * nz + list(row[:-1]), row[-1])
            eqs.append(p)
        return PolySystem(n, eqs)


def make_start_system(C: CriticalSystem | PolySystem, strategy: str, rng):
    """Start system for a square target, by total degree or by ``(z | lambda)`` bidegree."""
    strategy = strategy.replace("-", "_")
    system = C.system if isinstance(C, CriticalSystem) else C
    if not system.is_square():
        raise ValueError("start systems need a square target")
    if strategy == "total_degree":
        return TotalDegreeStart([max(int(d), 0) for d in system.degrees()])
    if strategy == "two_homogeneous":
        if not isinstance(C, CriticalSystem) or not C.bidegrees:
            raise ValueError("two_homogeneous start needs the bidegree table of a critical system")
        return TwoHomogeneousStart(C.bidegrees, C.nvars, C.c, rng)
    raise ValueError(f"unknown start strategy {strategy!r}")


# -- homotopies and tracking -----------------------------------------------


@dataclass(frozen=True)
class PathOutcome:
    status: str
    endpoint: np.ndarray
    residual: float
    condition_estimate: float
    steps: int
    t_reached: float


def _evaluator(obj):
    if isinstance(obj, PolySystem):
        return BatchEvaluator(obj)
    return obj


@dataclass
class HomotopyProblem:
    """``H(x, t) = (1 - t) * gamma * start + t * target`` for ``t`` in ``[0, 1]``."""

    start: object
    target: PolySystem
    gamma: complex
    start_points: Sequence[np.ndarray] = ()
    _start_eval: object = field(init=False, repr=False)
    _target_eval: BatchEvaluator = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.target, PolySystem):
            raise TypeError("target must be a PolySystem")
        if self.start.nvars != self.target.nvars:
            raise ValueError("start and target have different variable counts")
        self._start_eval = _evaluator(self.start)
        self._target_eval = BatchEvaluator(self.target)

    @property
    def nvars(self) -> int:
        return self.target.nvars

    @property
    def target_evaluator(self) -> BatchEvaluator:
        return self._target_eval

    def evaluate(self, X, t):
        """``H``, ``dH/dx`` and ``dH/dt`` at a batch with per-path ``t``."""
        H, Hx, Hs = self.evaluate_remaining(X, 1.0 - np.asarray(t, dtype=float))
        return H, Hx, -Hs

    def evaluate_remaining(self, X, s):
        """Same homotopy in the remaining parameter ``s = 1 - t``.

        Tracking in ``s`` keeps full relative precision as ``t`` approaches 1,
        which matters when the start system dwarfs the target near a root.
        """
        S, JS = self._start_eval.values_and_jacobian(X)
        T, JT = self._target_eval.values_and_jacobian(X)
        a = (s * self.gamma)[:, None]
        b = (1.0 - s)[:, None]
        H = a * S + b * T
        Hx = a[:, :, None] * JS + b[:, :, None] * JT
        Hs = self.gamma * S - T
        return H, Hx, Hs


def _solve(A, b):
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(b.shape, np.nan, dtype=complex)
        for i in range(A.shape[0]):
            try:
                out[i] = np.linalg.solve(A[i], b[i])
            except np.linalg.LinAlgError:
                pass
        return out


def _norm(X):
    return np.abs(X).max(axis=-1) if X.shape[-1] else np.zeros(X.shape[:-1])


def residuals(evaluator: BatchEvaluator, X: np.ndarray) -> np.ndarray:
    """Largest scaled residual ``|p_j(x)| / max(1, sum |c| |x^e|)`` per point."""
    V = evaluator.values(X)
    scale = np.maximum(evaluator.scales(X), 1.0)
    return (np.abs(V) / scale).max(axis=1)


#: coordinates smaller than this are measured on an absolute scale
SCALE_FLOOR = 1e-8


def condition_estimates(evaluator: BatchEvaluator, X: np.ndarray) -> np.ndarray:
    """Inverse smallest singular value of the naturally scaled Jacobian.

    Column ``j`` is multiplied by ``w_j = max(|x_j|, SCALE_FLOOR)`` and row
    ``i`` divided by ``max(max_j S_ij w_j, 1)``, where ``S_ij`` is the term
    magnitude of ``dp_i/dx_j``.  Scaled entries are then at most 1 in size, so
    the estimate ignores the units of equations and unknowns and grows only
    when derivatives cancel.  A numerically singular Jacobian gives ``inf``.
    """
    _, J = evaluator.values_and_jacobian(X)
    w = np.maximum(np.abs(X), SCALE_FLOOR)
    S = evaluator.jacobian_scales(X) * w[:, None, :]
    rows = np.maximum(S.max(axis=2), 1.0)
    Js = J * w[:, None, :] / rows[:, :, None]
    with np.errstate(all="ignore"):
        out = np.full(X.shape[0], np.inf)
        finite = np.isfinite(Js).all(axis=(1, 2))
        if finite.any():
            s = np.linalg.svd(Js[finite], compute_uv=False)
            smin = s[:, -1]
            cond = np.maximum(s[:, 0], 1.0) / np.where(smin > 0, smin, np.nan)
            out[finite] = np.where(np.isfinite(cond), cond, np.inf)
    return out


def newton_refine_batch(evaluator, X, cfg: ToleranceSet, max_iters: int | None = None):
    """Damped Newton on a square system for a batch of points.

    Iterates until the update drops below ``tol_newton * (1 + |x|)``.
    Returns refined points, scaled residuals and condition estimates.
    """
    iters = cfg.max_newton_iters if max_iters is None else max_iters
    X = np.array(X, dtype=complex, copy=True)
    active = np.isfinite(X).all(axis=1)
    with np.errstate(all="ignore"):
        res = np.full(X.shape[0], np.inf)
        if active.any():
            res[active] = residuals(evaluator, X[active])
        for _ in range(iters):
            idx = np.nonzero(active)[0]
            if not len(idx):
                break
            x = X[idx]
            V, J = evaluator.values_and_jacobian(x)
            delta = _solve(J, -V)
            ok = np.isfinite(delta).all(axis=1)
            step = np.ones(len(idx))
            accepted = np.zeros(len(idx), dtype=bool)
            cur = res[idx]
            new_x = x.copy()
            new_res = cur.copy()
            for _ in range(4):
                todo = ok & ~accepted
                if not todo.any():
                    break
                trial = x[todo] + step[todo, None] * delta[todo]
                r = residuals(evaluator, trial)
                better = (r <= cur[todo]) | (r < cfg.tol_newton)
                sel = np.nonzero(todo)[0][better]
                new_x[sel] = trial[better]
                new_res[sel] = r[better]
                accepted[sel] = True
                step[todo] *= 0.5
            X[idx] = new_x
            res[idx] = new_res
            small = _norm(step[:, None] * delta) <= cfg.tol_newton * (1.0 + _norm(new_x))
            done = ~accepted | small | ~ok
            active[idx[done]] = False
        cond = np.full(X.shape[0], np.inf)
        fin = np.isfinite(X).all(axis=1) & (_norm(X) < DIVERGENCE_RADIUS)
        if fin.any():
            cond[fin] = condition_estimates(evaluator, X[fin])
    return X, res, cond


def newton_refine(system: PolySystem, x, cfg: ToleranceSet, max_iters: int | None = None):
    """Single-point :func:`newton_refine_batch`: ``(x*, residual, condition_estimate)``."""
    if not system.is_square():
        raise ValueError("Newton refinement needs a square system")
    if max_iters is None:
        max_iters = ENDPOINT_NEWTON_ITERS
    X, res, cond = newton_refine_batch(
        BatchEvaluator(system), np.atleast_2d(np.asarray(x, dtype=complex)), cfg, max_iters
    )
    return X[0], float(res[0]), float(cond[0])


def _classify(x, res, cond, cfg: ToleranceSet) -> str:
    if not np.isfinite(x).all() or np.abs(x).max() > DIVERGENCE_RADIUS:
        return DIVERGED
    if cond > 1.0 / cfg.tol_rank and res < cfg.tol_residual:
        return SINGULAR
    if res < cfg.tol_newton and cond <= 1.0 / cfg.tol_rank:
        return CONVERGED
    return DIVERGED


class _Tracker:
    """Predictor-corrector in the remaining parameter ``s``, from 1 down to ``s_end``."""

    def __init__(self, problem: HomotopyProblem, cfg: ToleranceSet, t_end: float, max_step: float):
        self.p = problem
        self.cfg = cfg
        self.s_end = 1.0 - t_end
        self.max_step = max_step

    def velocity(self, X, s):
        _, Hx, Hs = self.p.evaluate_remaining(X, s)
        return _solve(Hx, -Hs)

    def predict(self, X, s, h):
        """RK4 step from ``s`` to ``s - h``."""
        hh = -h[:, None]
        k1 = self.velocity(X, s)
        k2 = self.velocity(X + 0.5 * hh * k1, s - 0.5 * h)
        k3 = self.velocity(X + 0.5 * hh * k2, s - 0.5 * h)
        k4 = self.velocity(X + hh * k3, s - h)
        return X + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def correct(self, X, s):
        """Newton at fixed ``s``; success means convergence to ``tol_track`` with contraction."""
        cfg = self.cfg
        X = X.copy()
        B = X.shape[0]
        done = np.zeros(B, dtype=bool)
        failed = ~np.isfinite(X).all(axis=1)
        prev = np.full(B, np.inf)
        for _ in range(cfg.max_newton_iters):
            idx = np.nonzero(~done & ~failed)[0]
            if not len(idx):
                break
            H, Hx, _ = self.p.evaluate_remaining(X[idx], s[idx])
            delta = _solve(Hx, -H)
            nd = _norm(delta)
            bad = ~np.isfinite(nd) | (nd > 0.5 * prev[idx])
            X[idx] = X[idx] + np.where(bad[:, None], 0, delta)
            conv = ~bad & (nd <= cfg.tol_track * (1.0 + _norm(X[idx])))
            prev[idx] = nd
            failed[idx[bad]] = True
            done[idx[conv]] = True
        return X, done & ~failed

    def run(self, starts: np.ndarray) -> list[PathOutcome]:
        cfg = self.cfg
        P, n = starts.shape
        X = starts.astype(complex).copy()
        s = np.ones(P)
        dt = np.full(P, min(INITIAL_STEP, self.max_step))
        succ = np.zeros(P, dtype=int)
        steps = np.zeros(P, dtype=int)
        # 0 active, 1 reached end, 2 diverged, 3 stalled, 4 truncated
        state = np.zeros(P, dtype=int)
        with np.errstate(all="ignore"):
            while True:
                idx = np.nonzero(state == 0)[0]
                if not len(idx):
                    break
                x, ss = X[idx], s[idx]
                remaining = ss - self.s_end
                h = np.minimum(dt[idx], remaining)
                hit_end = h >= remaining
                s1 = np.where(hit_end, self.s_end, ss - h)
                xp = self.predict(x, ss, ss - s1)
                xc, ok = self.correct(xp, s1)
                steps[idx] += 1
                good = idx[ok]
                X[good] = xc[ok]
                s[good] = s1[ok]
                succ[good] += 1
                grow = good[succ[good] >= GROWTH_AFTER]
                dt[grow] = np.minimum(dt[grow] * GROWTH, self.max_step)
                succ[grow] = 0
                bad = idx[~ok]
                dt[bad] *= 0.5
                succ[bad] = 0

                state[good[s[good] <= self.s_end]] = 1
                big = idx[_norm(X[idx]) > DIVERGENCE_RADIUS]
                state[big] = 2
                live = idx[state[idx] == 0]
                stuck = (dt[live] < MIN_STEP * s[live]) | (s[live] < END_FLOOR)
                state[live[stuck]] = 3
                live = idx[state[idx] == 0]
                state[live[steps[live] >= cfg.max_steps]] = 4

        t = 1.0 - s
        outcomes: list[PathOutcome | None] = [None] * P
        # endpoints and stalled paths are finished by Newton on the target
        fin = np.nonzero((state == 1) | (state == 3))[0]
        if len(fin):
            Xr, res, cond = newton_refine_batch(
                self.p.target_evaluator, X[fin], cfg, ENDPOINT_NEWTON_ITERS
            )
            for j, i in enumerate(fin):
                status_j = _classify(Xr[j], res[j], cond[j], cfg)
                if state[i] == 3 and status_j == CONVERGED:
                    # stalled short of the end: not a tracked root
                    status_j = DIVERGED
                reached = 1.0 if status_j in (CONVERGED, SINGULAR) else float(t[i])
                outcomes[i] = PathOutcome(
                    status_j, Xr[j], float(res[j]), float(cond[j]), int(steps[i]), reached
                )
        for i in np.nonzero(state == 2)[0]:
            outcomes[i] = PathOutcome(DIVERGED, X[i], math.inf, math.inf, int(steps[i]), float(t[i]))
        for i in np.nonzero(state == 4)[0]:
            outcomes[i] = PathOutcome(TRUNCATED, X[i], math.inf, math.inf, int(steps[i]), float(t[i]))
        return outcomes


def _collisions(outcomes: Sequence[PathOutcome], tol: float) -> list[int]:
    idx = [i for i, o in enumerate(outcomes) if o.status == CONVERGED]
    if len(idx) < 2:
        return []
    labels = _cluster(np.array([outcomes[i].endpoint for i in idx]), tol)
    counts = np.bincount(labels)
    return [i for i, lab in zip(idx, labels) if counts[lab] > 1]


#: a regular root with condition ``k`` is accurate to about ``k * eps``
_EPS = float(np.finfo(float).eps)


def _newton_stable(evaluator, x: np.ndarray, cond: float, iters: int = STABILITY_ITERS) -> bool:
    """Whether plain Newton stays at ``x`` up to the noise its condition allows.

    Near a simple root every update is of relative size about ``cond * eps``.
    Points that only look converged because a path is creeping towards a
    root at infinity move by a sizeable fraction of ``|x|`` per step.
    """
    noise = max(10.0 * cond * _EPS, 1e-12)
    y = x[None, :].copy()
    with np.errstate(all="ignore"):
        for _ in range(iters):
            V, J = evaluator.values_and_jacobian(y)
            delta = _solve(J, -V)
            y = y + delta
            if not np.isfinite(y).all() or _norm(delta)[0] > noise * (1.0 + _norm(y)[0]):
                return False
    return bool(_norm(y - x)[0] <= noise * (1.0 + _norm(x)))


def _promote_isolated(outcomes: list[PathOutcome], cfg: ToleranceSet, evaluator=None) -> int:
    """Reclassify ill-conditioned endpoints that are simple roots; returns how many.

    A root of multiplicity ``m`` attracts ``m`` paths of a gamma-trick
    homotopy, so an endpoint flagged singular by its condition estimate that
    no other path reaches is a simple root.  It is counted when Newton
    converged there, its attainable accuracy ``cond * eps`` is at most
    ``PROMOTE_ACCURACY`` and, given ``evaluator``, further Newton steps stay
    put.  Without ``evaluator`` the accuracy bound is ``tol_dedup``.
    """
    limit = cfg.tol_dedup if evaluator is None else PROMOTE_ACCURACY
    finite = [i for i, o in enumerate(outcomes) if o.status in (CONVERGED, SINGULAR)]
    cand = [
        i
        for i in finite
        if outcomes[i].status == SINGULAR
        and outcomes[i].residual < cfg.tol_newton
        and outcomes[i].condition_estimate * _EPS < limit
    ]
    if not cand:
        return 0
    labels = _cluster(np.array([outcomes[i].endpoint for i in finite]), cfg.tol_dedup)
    counts = np.bincount(labels)
    size = dict(zip(finite, counts[labels]))
    promoted = 0
    for i in cand:
        o = outcomes[i]
        if size[i] != 1:
            continue
        if evaluator is not None and not _newton_stable(evaluator, o.endpoint, o.condition_estimate):
            continue
        outcomes[i] = replace(o, status=CONVERGED)
        promoted += 1
    return promoted


def track_paths(
    problem: HomotopyProblem,
    cfg: ToleranceSet,
    *,
    t_end: float = 1.0,
    max_step: float = MAX_STEP,
    chunk: int = 4096,
    retrack_rounds: int = 2,
) -> tuple[list[PathOutcome], dict]:
    """Track every start point of ``problem``.

    Converged endpoints that coincide indicate path jumping; those paths are
    re-tracked with a smaller maximal step.  Returns the outcomes in start
    point order and a statistics dict.
    """
    starts = [np.asarray(s, dtype=complex) for s in problem.start_points]
    if not starts:
        return [], {**_stats([], 0), "ill_conditioned": 0}
    S = np.array(starts)
    outcomes: list[PathOutcome] = []
    for lo in range(0, len(S), chunk):
        outcomes.extend(_Tracker(problem, cfg, t_end, max_step).run(S[lo : lo + chunk]))
    retracked = 0
    step = max_step
    for _ in range(retrack_rounds):
        clash = _collisions(outcomes, cfg.tol_dedup)
        if not clash:
            break
        step /= 4.0
        tighter = ToleranceSet(**{**cfg.as_dict(), "tol_track": cfg.tol_track / 10})
        redo = _Tracker(problem, tighter, t_end, step).run(S[clash])
        for i, o in zip(clash, redo):
            outcomes[i] = o
        retracked += len(clash)
    promoted = _promote_isolated(outcomes, cfg, problem.target_evaluator)
    stats = _stats(outcomes, retracked)
    stats["ill_conditioned"] = promoted
    return outcomes, stats


def _stats(outcomes, retracked) -> dict:
    stats = {"path_count": len(outcomes)}
    for s in STATUSES:
        stats[s] = sum(o.status == s for o in outcomes)
    stats["retracked"] = retracked
    return stats


def track_path(problem: HomotopyProblem, x0, cfg: ToleranceSet, t_end: float = 1.0) -> PathOutcome:
    x0 = np.asarray(x0, dtype=complex)
    return _Tracker(problem, cfg, t_end, MAX_STEP).run(x0[None, :])[0]


# -- deduplication ---------------------------------------------------------


def _cluster(P: np.ndarray, tol: float) -> np.ndarray:
    n = len(P)
    if n == 0:
        return np.zeros(0, dtype=int)
    rows, cols = [], []
    mags = np.abs(P).max(axis=1)
    for lo in range(0, n, 512):
        blk = P[lo : lo + 512]
        dist = np.abs(blk[:, None, :] - P[None, :, :]).max(axis=2)
        lim = tol * (1.0 + np.maximum(mags[lo : lo + 512, None], mags[None, :]))
        r, c = np.nonzero(dist < lim)
        rows.append(r + lo)
        cols.append(c)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(len(r)), (r, c)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels


def deduplicate(points, tol_dedup: float, residuals: Sequence[float] | None = None) -> list[np.ndarray]:
    """One representative per cluster of nearby points (max-norm, relative to ``1 + |p|``).

    The representative is the member with the smallest residual; output is
    sorted lexicographically on rounded coordinates.
    """
    pts = [np.atleast_1d(np.asarray(p, dtype=complex)) for p in points]
    if not pts:
        return []
    P = np.array(pts)
    res = np.zeros(len(P)) if residuals is None else np.asarray(residuals, dtype=float)
    labels = _cluster(P, tol_dedup)
    reps = {}
    for i, lab in enumerate(labels):
        if lab not in reps or res[i] < res[reps[lab]]:
            reps[lab] = i
    chosen = [P[i] for i in sorted(reps.values())]
    return sort_points(chosen)


def sort_points(points: Sequence[np.ndarray], decimals: int = 8) -> list[np.ndarray]:
    if not points:
        return []
    P = np.array(points)
    keys = np.empty((P.shape[1] * 2, len(P)))
    keys[0::2] = np.round(P.real, decimals).T
    keys[1::2] = np.round(P.imag, decimals).T
    order = np.lexsort(keys[::-1])
    return [P[i] for i in order]
