"""Removal ML degrees by path tracking and endpoint filtering."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .critsys import (
    CriticalSystem,
    Hyperplane,
    MLForm,
    build_removal_system,
    randomize_constraints,
    unit_circle,
)
from .frontend import ToleranceSet
from .polyring import BatchEvaluator, PolySystem
from .tracker import (
    CONVERGED,
    HomotopyProblem,
    PathBudgetError,
    PathOutcome,
    deduplicate,
    make_start_system,
    residuals,
    sort_points,
    track_paths,
)

log = logging.getLogger(__name__)

FILTER_TALLIES = (
    "not_converged",
    "off_torus",
    "on_removed_hyperplane",
    "residual_fail",
    "rank_fail",
    "duplicates",
)


class GenericityError(RuntimeError):
    """Independent random draws disagree on a removal ML degree."""


class TruncatedPathsError(RuntimeError):
    """Some path hit the step limit; the count would be unreliable."""


class DimensionError(ValueError):
    """The stated dimension is inconsistent with numerical slicing."""


@dataclass
class SolveOptions:
    """Knobs shared by every removal ML degree computation in a run."""

    strategy: str = "two_homogeneous"
    repeat_checks: int = 0
    max_paths: int | None = None
    randomize_square: bool = False


@dataclass
class DegenerationSet:
    k: int
    points: list[np.ndarray]
    count: int
    diagnostics: dict = field(default_factory=dict)
    #: full solution vectors (z and multipliers), aligned with ``points``
    solutions: list[np.ndarray] = field(default_factory=list, repr=False)
    system: CriticalSystem | None = field(default=None, repr=False)


def _relative_scale(z: np.ndarray) -> float:
    return 1.0 + float(np.abs(z).max())


def filter_endpoints(
    outcomes: Sequence[PathOutcome], F: PolySystem, C: CriticalSystem, cfg: ToleranceSet
) -> DegenerationSet:
    """Keep the converged endpoints that are regular torus points of the slice off ``Hk``."""
    tallies = dict.fromkeys(FILTER_TALLIES, 0)
    N = C.nvars
    original = PolySystem(N, list(F.equations) + [h.polynomial() for h in C.sliced])
    ev = BatchEvaluator(original)
    kept, kept_full, kept_res = [], [], []
    for o in outcomes:
        if o.status != CONVERGED:
            tallies["not_converged"] += 1
            continue
        z = np.asarray(o.endpoint[:N])
        scale = _relative_scale(z)
        if np.abs(z).min() <= cfg.tol_torus * scale:
            tallies["off_torus"] += 1
            continue
        if C.removed is not None and abs(C.removed(z)) <= cfg.tol_torus * scale:
            tallies["on_removed_hyperplane"] += 1
            continue
        res = float(residuals(ev, z[None, :])[0])
        if res >= cfg.tol_residual:
            tallies["residual_fail"] += 1
            continue
        _, J = ev.values_and_jacobian(z[None, :])
        J = J[0]
        norms = np.linalg.norm(J, axis=1)
        J = J / np.where(norms > 0, norms, 1.0)[:, None]
        s = np.linalg.svd(J, compute_uv=False)
        rank = int(np.sum(s > cfg.tol_rank * max(s[0], 1e-300))) if len(s) else 0
        if rank != C.c:
            tallies["rank_fail"] += 1
            log.warning("k=%d: endpoint %s fails the smoothness test (rank %d != %d)", C.k, z, rank, C.c)
            continue
        kept.append(z)
        kept_full.append(np.asarray(o.endpoint))
        kept_res.append(res)
    unique = deduplicate(kept, cfg.tol_dedup, kept_res)
    tallies["duplicates"] = len(kept) - len(unique)
    # full solutions matching the surviving representatives
    full = []
    for z in unique:
        j = min(range(len(kept)), key=lambda i: np.abs(kept[i] - z).max())
        full.append(kept_full[j])
    return DegenerationSet(C.k, unique, len(unique), {"filtered": tallies}, full, C)


def solve_critical_system(
    F: PolySystem, C: CriticalSystem, cfg: ToleranceSet, rng, options: SolveOptions
) -> DegenerationSet:
    start = make_start_system(C, options.strategy, rng)
    if options.max_paths is not None and start.path_count > options.max_paths:
        raise PathBudgetError(
            f"k={C.k}: start system has {start.path_count} paths, budget is {options.max_paths}"
        )
    gamma = complex(unit_circle(rng, ()))
    problem = HomotopyProblem(start, C.system, gamma, list(start.points()))
    outcomes, stats = track_paths(problem, cfg)
    if stats["path_count"] != start.path_count:
        raise RuntimeError("start point enumeration disagrees with the path count")
    if stats["truncated"]:
        raise TruncatedPathsError(f"k={C.k}: {stats['truncated']} truncated paths")
    result = filter_endpoints(outcomes, F, C, cfg)
    result.diagnostics.update(stats)
    result.diagnostics["strategy"] = start.strategy
    return result


def _single_draw(F, d, H, k, cfg, rng, options) -> DegenerationSet:
    form = MLForm.random(F.nvars, rng)
    C = build_removal_system(F, d, H, k, form, rng, randomize_square=options.randomize_square)
    return solve_critical_system(F, C, cfg, rng, options)


def removal_ml_degree(
    F: PolySystem,
    d: int,
    H: Sequence[Hyperplane],
    k: int,
    cfg: ToleranceSet,
    rng: np.random.Generator,
    options: SolveOptions | None = None,
) -> DegenerationSet:
    """``r_k``: regular degeneration points of a generic form on the k-th removal slice.

    With ``options.repeat_checks`` the count is recomputed from fresh draws
    of the form and randomization; a third draw settles a disagreement and
    no majority raises :class:`GenericityError`.
    """
    options = options or SolveOptions()
    if k >= 1 and len(H) < k:
        raise ValueError(f"r_{k} needs at least {k} hyperplanes")
    first = _single_draw(F, d, H, k, cfg, rng, options)
    counts = [first.count]
    for _ in range(options.repeat_checks):
        again = _single_draw(F, d, H, k, cfg, rng, options)
        if again.count != first.count:
            third = _single_draw(F, d, H, k, cfg, rng, options)
            counts += [again.count, third.count]
            if third.count == first.count:
                continue
            if third.count == again.count:
                log.warning("k=%d: count %d overruled by two draws giving %d", k, first.count, again.count)
                first = again
                continue
            raise GenericityError(f"k={k}: counts {counts} disagree across independent draws")
        counts.append(again.count)
    first.diagnostics["repeat_counts"] = counts
    return first


def verify_dimension(F: PolySystem, d: int, cfg: ToleranceSet, rng, options: SolveOptions | None = None) -> int:
    """Check that ``d`` general hyperplanes cut ``V(F)`` in isolated torus points and ``d+1`` in none.

    Returns the number of points found on the ``d``-slice.
    """
    options = options or SolveOptions(strategy="total_degree")
    N = F.nvars
    found = []
    for count in (d, d + 1):
        A = unit_circle(rng, (count, N))
        b = unit_circle(rng, count)
        hyper = [Hyperplane(a, bb) for a, bb in zip(A, b)]
        G = PolySystem(N, list(F.equations) + [h.polynomial() for h in hyper])
        if len(G) < N:
            raise DimensionError(f"{len(F)} equations and {count} slices cannot cut out points in {N} variables")
        g, _ = randomize_constraints(G, N, rng)
        start = make_start_system(g, "total_degree", rng)
        if options.max_paths is not None and start.path_count > options.max_paths:
            raise PathBudgetError(f"dimension check needs {start.path_count} paths")
        problem = HomotopyProblem(start, g, complex(unit_circle(rng, ())), list(start.points()))
        outcomes, _ = track_paths(problem, cfg)
        ev = BatchEvaluator(G)
        pts = []
        for o in outcomes:
            if o.status != CONVERGED:
                continue
            z = o.endpoint
            if np.abs(z).min() <= cfg.tol_torus * _relative_scale(z):
                continue
            if residuals(ev, z[None, :])[0] < cfg.tol_residual:
                pts.append(z)
        found.append(len(deduplicate(pts, cfg.tol_dedup)))
    if found[0] == 0:
        raise DimensionError(f"slicing with {d} hyperplanes found no isolated torus points")
    if found[1] != 0:
        raise DimensionError(f"slicing with {d + 1} hyperplanes still found {found[1]} points")
    return found[0]


__all__ = [
    "DegenerationSet",
    "DimensionError",
    "GenericityError",
    "SolveOptions",
    "TruncatedPathsError",
    "filter_endpoints",
    "removal_ml_degree",
    "solve_critical_system",
    "sort_points",
    "verify_dimension",
]
