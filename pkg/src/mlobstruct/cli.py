"""Command-line entry point: ``mlobstruct JOB.json [options]``.

Exit codes: 0 success, 1 parse or validation error, 2 numerical failure
(truncated paths), 3 genericity disagreement, 4 path budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .frontend import STRATEGIES, JobError, JobSpec, ParseError, ToleranceSet, parse_job, point_array
from .mldeg import DimensionError, GenericityError, SolveOptions, TruncatedPathsError, verify_dimension
from .obstruction import (
    ObstructionReport,
    batch_obstruction,
    draw_base_point,
    obstruction_report,
    removal_profile,
)
from .tracker import PathBudgetError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_GENERICITY, EXIT_BUDGET = 0, 1, 2, 3, 4

log = logging.getLogger("mlobstruct")

_TOL_FLAGS = [
    ("tol_newton", float),
    ("tol_track", float),
    ("tol_residual", float),
    ("tol_dedup", float),
    ("tol_torus", float),
    ("tol_rank", float),
    ("max_steps", int),
    ("max_newton_iters", int),
]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mlobstruct",
        description="Local Euler obstruction values from removal ML degrees.",
    )
    p.add_argument("job", help="job file (JSON)")
    p.add_argument("--seed", type=int, help="override the job seed")
    p.add_argument("--out", help="write the JSON report here instead of standard output")
    p.add_argument("--strategy", choices=[s.replace("_", "-") for s in STRATEGIES])
    p.add_argument("--mode", choices=["direct", "batch"])
    p.add_argument("--repeat-checks", type=int, metavar="N")
    p.add_argument("--verify-dimension", action="store_true", default=None)
    p.add_argument("--max-paths", type=int, metavar="N", help="abort if one profile needs more paths")
    p.add_argument(
        "--randomize-square",
        action="store_true",
        help="randomize constraint sets even when they are already square",
    )
    p.add_argument("--pretty", action="store_true", help="print the r_k table instead of JSON")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings per k")
    p.add_argument("-v", "--verbose", action="count", default=0)
    tol = p.add_argument_group("tolerances")
    for name, kind in _TOL_FLAGS:
        tol.add_argument("--" + name.replace("_", "-"), type=kind, metavar="X")
    return p


def apply_overrides(job: JobSpec, args: argparse.Namespace) -> JobSpec:
    """Flags win over the job file."""
    tol = {name: getattr(args, name) for name, _ in _TOL_FLAGS if getattr(args, name) is not None}
    mode = {"batch": "parameter_homotopy"}.get(args.mode, args.mode)
    return job.with_overrides(
        seed=args.seed,
        mode=mode,
        start_strategy=args.strategy.replace("-", "_") if args.strategy else None,
        repeat_checks=args.repeat_checks,
        verify_dimension=args.verify_dimension,
        tolerances=ToleranceSet(**{**job.tolerances.as_dict(), **tol}) if tol else None,
    )


def _complex_pair(c: complex) -> list[float]:
    return [float(c.real), float(c.imag)]


def job_echo(job: JobSpec) -> dict:
    return {
        "variables": list(job.variables),
        "equations": list(job.equations_text),
        "dimension": job.dimension_d,
        "points": [
            {"label": p.label, "coordinates": [_complex_pair(c) for c in p.coordinates]}
            for p in job.points
        ],
        "seed": job.seed,
        "mode": job.mode,
        "start_strategy": job.start_strategy,
        "repeat_checks": job.repeat_checks,
        "tolerances": job.tolerances.as_dict(),
    }


def _result_entry(report: ObstructionReport) -> dict:
    entry = report.as_dict()
    entry["diagnostics"] = dict(entry["diagnostics"])
    entry["diagnostics"]["per_k"] = [
        {
            "k": s.k,
            "count": s.count,
            "path_count": s.diagnostics.get("path_count", 0),
            "diverged": s.diagnostics.get("diverged", 0),
            "singular": s.diagnostics.get("singular", 0),
        }
        for s in report.profile.sets
    ]
    return entry


def compute(job: JobSpec, options: SolveOptions, timings: dict) -> list[ObstructionReport]:
    """Obstruction reports for every point of the job, in job order."""
    rng = np.random.default_rng(job.seed)
    F, d, cfg = job.system, job.dimension_d, job.tolerances
    if job.verify_dimension:
        t0 = time.perf_counter()
        n = verify_dimension(F, d, cfg, rng, SolveOptions(strategy="total_degree", max_paths=options.max_paths))
        log.info("dimension check: %d points on a general %d-slice", n, d)
        timings["verify_dimension"] = 1000 * (time.perf_counter() - t0)
    if job.mode == "parameter_homotopy":
        P0 = draw_base_point(F, cfg, rng, job.base_radius)
        return batch_obstruction(
            F,
            d,
            P0,
            [point_array(p) for p in job.points],
            cfg,
            rng,
            options,
            labels=[p.label for p in job.points],
            timings=timings,
        )
    reports = []
    for p in job.points:
        prof = removal_profile(F, d, point_array(p), cfg, rng, options, label=p.label, timings=timings)
        reports.append(obstruction_report(prof, d))
    return reports


def build_report(job: JobSpec, reports: list[ObstructionReport], timings: dict | None) -> dict:
    results = [_result_entry(r) for r in reports]
    totals = {"paths_tracked": 0, "converged": 0, "diverged": 0, "singular": 0}
    for r in results:
        for key in totals:
            totals[key] += r["diagnostics"].get(key, 0)
    return {
        "job": job_echo(job),
        "results": results,
        "path_statistics": totals,
        "timings_ms": {k: round(v, 3) for k, v in sorted((timings or {}).items())},
        "seed": job.seed,
        "version": __version__,
    }


def render_table(job: JobSpec, reports: list[ObstructionReport]) -> str:
    d = job.dimension_d
    heads = [f"r_{k}" for k in range(d + 2)] + ["ML"]
    width = max([len(r.label) for r in reports] + [1]) + 9
    lines = [" " * width + "".join(f"{h:>7}" for h in heads)]
    for r in reports:
        row = f"r_k({r.label},X):".ljust(width)
        row += "".join(f"{v:>7}" for v in list(r.profile.r) + [r.ml_value])
        lines.append(row)
    return "\n".join(lines) + "\n"


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def run_job(path, args: argparse.Namespace | None = None) -> tuple[int, dict | None]:
    """Load, run and report; returns ``(exit code, report)``."""
    if args is None:
        args = build_parser().parse_args([str(path)])
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INPUT, None
    try:
        job = parse_job(Path(path).read_text())
        job = apply_overrides(job, args)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read job: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    except (JobError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    if args.repeat_checks is not None and args.repeat_checks < 0:
        print("error: --repeat-checks must be nonnegative", file=sys.stderr)
        return EXIT_INPUT, None

    options = SolveOptions(
        strategy=job.start_strategy,
        repeat_checks=job.repeat_checks,
        max_paths=args.max_paths,
        randomize_square=args.randomize_square,
    )
    timings: dict = {}
    try:
        reports = compute(job, options, timings)
    except PathBudgetError as exc:
        print(f"error: path budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET, None
    except GenericityError as exc:
        print(f"error: genericity check failed: {exc}", file=sys.stderr)
        return EXIT_GENERICITY, None
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    except (TruncatedPathsError, RuntimeError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC, None

    report = build_report(job, reports, timings if args.timings else None)
    text = json.dumps(report, indent=2, default=_json_default) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    if args.pretty:
        sys.stdout.write(render_table(job, reports))
    elif not args.out:
        sys.stdout.write(text)
    return EXIT_OK, report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    code, _ = run_job(args.job, args)
    return code


if __name__ == "__main__":
    sys.exit(main())
