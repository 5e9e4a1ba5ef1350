"""Local Euler obstruction of very affine varieties via removal ML degrees.

The main entry points are :func:`removal_profile`, :func:`ml_obstruction_value`
and :func:`batch_obstruction`; the ``mlobstruct`` command runs JSON jobs.
"""

__version__ = "0.1.0"

from .frontend import JobSpec, ParseError, ToleranceSet, parse_job, parse_polynomial  # noqa: E402
from .mldeg import SolveOptions, removal_ml_degree  # noqa: E402
from .obstruction import (  # noqa: E402
    ObstructionReport,
    RemovalProfile,
    batch_obstruction,
    ml_obstruction_value,
    removal_profile,
)
from .polyring import Polynomial, PolySystem  # noqa: E402

__all__ = [
    "JobSpec",
    "ObstructionReport",
    "ParseError",
    "Polynomial",
    "PolySystem",
    "RemovalProfile",
    "SolveOptions",
    "ToleranceSet",
    "batch_obstruction",
    "ml_obstruction_value",
    "parse_job",
    "parse_polynomial",
    "removal_ml_degree",
    "removal_profile",
]
