import sys
from pathlib import Path

import numpy as np
import pytest

from mlobstruct.frontend import ToleranceSet, parse_job, parse_polynomial, point_array
from mlobstruct.polyring import PolySystem

ROOT = Path(__file__).resolve().parent.parent
JOBS = ROOT / "jobs"

sys.path.insert(0, str(Path(__file__).resolve().parent))


def load_job(name):
    return parse_job((JOBS / f"{name}.json").read_text())


def job_points(job):
    return {p.label: point_array(p) for p in job.points}


def system(equations, variables):
    polys = [parse_polynomial(e, variables) for e in equations]
    return PolySystem(len(variables), polys)


@pytest.fixture
def cfg():
    return ToleranceSet()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
