"""Euler obstruction values from removal ML degree profiles.

A profile at ``P`` is the sequence ``r_0..r_{d+1}``; the obstruction value is

    ML_X(P) = sum_k (-1)^(d-k) r_k

Profiles are computed either point by point (:func:`removal_profile`) or for
many targets at once by moving the slices from a general base point
(:func:`batch_obstruction`).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .critsys import (
    Hyperplane,
    MLForm,
    build_removal_system,
    hyperplanes_through_point,
    unit_circle,
)
from .frontend import ToleranceSet
from .mldeg import (
    FILTER_TALLIES,
    DegenerationSet,
    SolveOptions,
    TruncatedPathsError,
    filter_endpoints,
    removal_ml_degree,
)
from .polyring import BatchEvaluator, PolySystem
from .tracker import (
    END_GAP,
    HomotopyProblem,
    PathBudgetError,
    make_start_system,
    residuals,
    track_paths,
)

log = logging.getLogger(__name__)

#: attempts at drawing a base point off the variety
BASE_POINT_ATTEMPTS = 5


@dataclass
class RemovalProfile:
    label: str
    r: list[int]
    sets: list[DegenerationSet] = field(default_factory=list, repr=False)
    point: np.ndarray | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.r) - 2


@dataclass
class ObstructionReport:
    label: str
    ml_value: int
    profile: RemovalProfile
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "r": list(self.profile.r),
            "ml": self.ml_value,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class MovingSliceFamily:
    """Hyperplanes ``A_i . z = A_i . gamma(t)`` along ``gamma(t) = (1-t) P0 + t Q``.

    ``A`` holds one direction per row.
    """

    A: np.ndarray
    P0: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        P0 = np.asarray(self.P0, dtype=complex)
        Q = np.asarray(self.Q, dtype=complex)
        if A.shape[1] != len(P0) or P0.shape != Q.shape:
            raise ValueError("direction matrix and points disagree on the number of variables")
        if np.linalg.matrix_rank(A) < min(A.shape):
            raise ValueError("direction matrix must have full row rank")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "P0", P0)
        object.__setattr__(self, "Q", Q)

    def gamma(self, t: float) -> np.ndarray:
        return (1 - t) * self.P0 + t * self.Q

    def offsets(self, t: float) -> np.ndarray:
        return self.A @ self.gamma(t)

    def hyperplanes(self, t: float) -> list[Hyperplane]:
        return [Hyperplane(a, b) for a, b in zip(self.A, self.offsets(t))]


def ml_obstruction_value(profile: RemovalProfile | Sequence[int], d: int) -> int:
    """``sum_k (-1)^(d-k) r_k`` over ``k = 0..d+1``."""
    r = profile.r if isinstance(profile, RemovalProfile) else profile
    r = [int(v) for v in r]
    if d < 0:
        raise ValueError("dimension must be nonnegative")
    if len(r) != d + 2:
        raise ValueError(f"profile of length {len(r)} does not match dimension {d}")
    return sum(v if (d - k) % 2 == 0 else -v for k, v in enumerate(r))


def _summarize(sets: Sequence[DegenerationSet]) -> dict:
    filtered = dict.fromkeys(FILTER_TALLIES, 0)
    out = {"paths_tracked": 0, "converged": 0, "diverged": 0, "singular": 0, "retracked": 0}
    for s in sets:
        diag = s.diagnostics
        out["paths_tracked"] += diag.get("path_count", 0)
        for key in ("converged", "diverged", "singular", "retracked"):
            out[key] += diag.get(key, 0)
        for key, v in diag.get("filtered", {}).items():
            filtered[key] += v
    out["filtered"] = filtered
    return out


def start_path_counts(F: PolySystem, d: int, options: SolveOptions | None = None) -> list[int]:
    """Paths in the start systems for ``r_0..r_{d+1}`` of one profile.

    Counts depend only on the shape of the critical systems, so throwaway
    random data is used and the caller's generator is left untouched.
    """
    options = options or SolveOptions()
    rng = np.random.default_rng(0)
    H = hyperplanes_through_point(unit_circle(rng, F.nvars), d + 1, rng)
    counts = []
    for k in range(d + 2):
        C = build_removal_system(
            F, d, H, k, MLForm.random(F.nvars, rng), rng, randomize_square=options.randomize_square
        )
        counts.append(make_start_system(C, options.strategy, rng).path_count)
    return counts


def check_path_budget(F: PolySystem, d: int, options: SolveOptions | None) -> list[int]:
    """Raise :class:`PathBudgetError` when one profile needs more than ``options.max_paths`` paths."""
    counts = start_path_counts(F, d, options)
    if options is not None and options.max_paths is not None and sum(counts) > options.max_paths:
        raise PathBudgetError(
            f"a profile needs {sum(counts)} paths {counts}, budget is {options.max_paths}"
        )
    return counts


def removal_profile(
    F: PolySystem,
    d: int,
    P,
    cfg: ToleranceSet,
    rng: np.random.Generator,
    options: SolveOptions | None = None,
    label: str = "",
    timings: dict | None = None,
) -> RemovalProfile:
    """``r_0..r_{d+1}`` at ``P`` from ``d+1`` general hyperplanes through it."""
    P = np.asarray(P, dtype=complex)
    if len(P) != F.nvars:
        raise ValueError(f"point has {len(P)} coordinates, system has {F.nvars} variables")
    if options is not None and options.max_paths is not None:
        check_path_budget(F, d, options)
    H = hyperplanes_through_point(P, d + 1, rng)
    sets = []
    for k in range(d + 2):
        t0 = time.perf_counter()
        sets.append(removal_ml_degree(F, d, H, k, cfg, rng, options))
        if timings is not None:
            timings[f"k{k}"] = timings.get(f"k{k}", 0.0) + 1000 * (time.perf_counter() - t0)
        log.info("%s: r_%d = %d", label or "point", k, sets[-1].count)
    return RemovalProfile(label, [s.count for s in sets], sets, P)


def obstruction_report(profile: RemovalProfile, d: int) -> ObstructionReport:
    return ObstructionReport(
        profile.label, ml_obstruction_value(profile, d), profile, _summarize(profile.sets)
    )


def off_variety(F: PolySystem, P, cfg: ToleranceSet) -> bool:
    """True when some equation of ``F`` is numerically nonzero at ``P``."""
    P = np.asarray(P, dtype=complex)
    return bool(residuals(BatchEvaluator(F), P[None, :])[0] >= cfg.tol_residual)


def draw_base_point(F: PolySystem, cfg: ToleranceSet, rng, radius: float = 1.0) -> np.ndarray:
    """Random unit-circle point scaled by ``radius``, redrawn while it lies on ``V(F)``."""
    for _ in range(BASE_POINT_ATTEMPTS):
        P0 = radius * unit_circle(rng, F.nvars)
        if off_variety(F, P0, cfg):
            return P0
    raise RuntimeError(f"no base point off the variety in {BASE_POINT_ATTEMPTS} draws")


def _track_to_target(F, d, C0, start: DegenerationSet, family: MovingSliceFamily, cfg):
    """Carry the degeneration points of ``C0`` at ``P0`` to the slices through ``Q``."""
    k = C0.k
    CQ = build_removal_system(
        F, d, family.hyperplanes(1.0), k, C0.form, randomizer=C0.randomizer
    )
    if not start.solutions:
        empty = filter_endpoints([], F, CQ, cfg)
        empty.diagnostics.update(dict.fromkeys(
            ("path_count", "converged", "diverged", "singular", "truncated", "retracked"), 0))
        return empty
    # the system is affine in the slice offsets, which move linearly in t
    problem = HomotopyProblem(C0.system, CQ.system, 1.0 + 0j, start.solutions)
    outcomes, stats = track_paths(problem, cfg, t_end=1.0 - END_GAP)
    if stats["truncated"]:
        raise TruncatedPathsError(f"k={k}: {stats['truncated']} truncated parameter paths")
    result = filter_endpoints(outcomes, F, CQ, cfg)
    result.diagnostics.update(stats)
    return result


def batch_obstruction(
    F: PolySystem,
    d: int,
    P0,
    targets: Sequence,
    cfg: ToleranceSet,
    rng: np.random.Generator,
    options: SolveOptions | None = None,
    labels: Sequence[str] | None = None,
    timings: dict | None = None,
) -> list[ObstructionReport]:
    """Obstruction values at every target by parameter homotopy from ``P0``.

    Directions ``A`` and, for each ``k``, the form and randomization are
    drawn once.  Degeneration points at ``P0`` are computed ab initio and
    then carried along the slices through ``(1-t) P0 + t Q`` for each
    target ``Q``.  ``P0=None`` draws a base point off the variety.
    """
    N = F.nvars
    if options is not None and options.max_paths is not None:
        check_path_budget(F, d, options)
    if P0 is None:
        P0 = draw_base_point(F, cfg, rng)
    P0 = np.asarray(P0, dtype=complex)
    if not off_variety(F, P0, cfg):
        raise ValueError("base point lies on the variety")
    targets = [np.asarray(Q, dtype=complex) for Q in targets]
    for Q in targets:
        if Q.shape != (N,):
            raise ValueError(f"target has shape {Q.shape}, expected ({N},)")
    labels = list(labels) if labels is not None else [f"Q{j}" for j in range(len(targets))]
    A = unit_circle(rng, (d + 1, N))
    H0 = [Hyperplane(a, complex(a @ P0)) for a in A]

    per_target: list[list[DegenerationSet]] = [[] for _ in targets]
    base_counts = []
    for k in range(d + 2):
        t0 = time.perf_counter()
        base = removal_ml_degree(F, d, H0, k, cfg, rng, options)
        base_counts.append(base.count)
        for j, Q in enumerate(targets):
            if k == 0:
                # r_0 does not see the slices
                per_target[j].append(base)
                continue
            family = MovingSliceFamily(A, P0, Q)
            per_target[j].append(_track_to_target(F, d, base.system, base, family, cfg))
        if timings is not None:
            timings[f"k{k}"] = timings.get(f"k{k}", 0.0) + 1000 * (time.perf_counter() - t0)
        log.info("base point: r_%d = %d", k, base.count)

    reports = []
    for label, Q, sets in zip(labels, targets, per_target):
        profile = RemovalProfile(label, [s.count for s in sets], sets, Q)
        report = obstruction_report(profile, d)
        report.diagnostics["base_profile"] = list(base_counts)
        reports.append(report)
    return reports


__all__ = [
    "MovingSliceFamily",
    "ObstructionReport",
    "RemovalProfile",
    "batch_obstruction",
    "check_path_budget",
    "draw_base_point",
    "ml_obstruction_value",
    "obstruction_report",
    "off_variety",
    "removal_profile",
    "start_path_counts",
]
