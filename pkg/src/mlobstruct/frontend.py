"""Polynomial expression parser and JSON job loader.

Grammar (whitespace ignored, offsets are byte offsets into the text)::

    expr   := [sign] term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := base ('^' uint)?
    base   := number | 'i' | variable | '(' expr ')'

Numbers are integers, decimals (optionally with an exponent) or rationals
``p/q``.  Implicit multiplication is rejected.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .polyring import Polynomial, PolySystem

MAX_EXPONENT = 2**16
MODES = ("direct", "parameter_homotopy")
STRATEGIES = ("total_degree", "two_homogeneous")


class ParseError(ValueError):
    """Malformed polynomial text; ``offset`` locates the offending byte."""

    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class JobError(ValueError):
    """Schema or validation failure in a job document."""


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+/\d+|(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*^()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    data = text.encode()
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", len(text[:pos].encode()), text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), len(text[:pos].encode())))
        pos = m.end()
    tokens.append(("eof", "", len(data)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.n = len(variables)
        self.index = {name: i for i, name in enumerate(variables)}

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, tok[2], self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] == "eof":
            raise self.error(f"expected {value!r}")
        return self.advance()

    def parse(self) -> Polynomial:
        p = self.expr()
        if self.peek()[0] != "eof":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return p

    def expr(self) -> Polynomial:
        sign = 1
        if self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            sign = -1 if self.advance()[1] == "-" else 1
        p = self.term()
        if sign < 0:
            p = -p
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.advance()
            p = p * self.factor()
        nxt = self.peek()
        if nxt[0] in ("number", "name") or nxt[1] == "(":
            raise self.error("implicit multiplication is not allowed")
        return p

    def factor(self) -> Polynomial:
        p = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            tok = self.peek()
            if tok[0] != "number" or not tok[1].isdigit():
                raise self.error("exponent must be a nonnegative integer")
            self.advance()
            k = int(tok[1])
            if k > MAX_EXPONENT:
                raise self.error(f"exponent {k} exceeds {MAX_EXPONENT}", tok)
            p = p**k
        return p

    def base(self) -> Polynomial:
        tok = self.peek()
        kind, value, offset = tok
        if kind == "number":
            self.advance()
            if "/" in value:
                num, den = value.split("/")
                if int(den) == 0:
                    raise self.error("zero denominator", tok)
                c = float(Fraction(int(num), int(den)))
            else:
                c = float(value)
            return Polynomial.constant(self.n, c)
        if kind == "name":
            self.advance()
            if value in self.index:
                return Polynomial.variable(self.n, self.index[value])
            if value == "i":
                return Polynomial.constant(self.n, 1j)
            raise self.error(f"unknown variable {value!r}", tok)
        if value == "(":
            self.advance()
            p = self.expr()
            self.expect(")")
            return p
        if kind == "eof":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {value!r}")


def parse_polynomial(text: str, variables: Sequence[str]) -> Polynomial:
    """Parse ``text`` into a polynomial over the ordered ``variables``."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, text)
    if not variables:
        raise ValueError("at least one variable is required")
    if "i" in variables:
        raise ValueError("'i' is reserved for the imaginary unit")
    return _Parser(text, variables).parse()


# jobs


@dataclass(frozen=True)
class ToleranceSet:
    tol_newton: float = 1e-10
    tol_track: float = 1e-7
    tol_residual: float = 1e-8
    tol_dedup: float = 1e-6
    tol_torus: float = 1e-8
    tol_rank: float = 1e-8
    max_steps: int = 5000
    max_newton_iters: int = 2

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise JobError(f"tolerance {name} must be positive, got {value!r}")
        for name in ("max_steps", "max_newton_iters"):
            if int(getattr(self, name)) != getattr(self, name):
                raise JobError(f"{name} must be an integer")
        if not self.tol_newton < self.tol_dedup:
            raise JobError("tol_newton must be smaller than tol_dedup")

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class LabeledPoint:
    label: str
    coordinates: tuple[complex, ...]


@dataclass(frozen=True)
class JobSpec:
    variables: tuple[str, ...]
    system: PolySystem
    dimension_d: int
    points: tuple[LabeledPoint, ...]
    equations_text: tuple[str, ...] = ()
    seed: int = 0
    tolerances: ToleranceSet = field(default_factory=ToleranceSet)
    mode: str = "direct"
    start_strategy: str = "two_homogeneous"
    repeat_checks: int = 0
    base_radius: float = 1.0
    verify_dimension: bool = False

    @property
    def nvars(self) -> int:
        return len(self.variables)

    def with_overrides(self, **kw) -> JobSpec:
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _parse_scalar(value: Any, where: str) -> complex:
    if isinstance(value, bool):
        raise JobError(f"{where}: booleans are not coordinates")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(float(Fraction(value.strip())))
        except (ValueError, ZeroDivisionError):
            raise JobError(f"{where}: cannot read {value!r} as a rational") from None
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise JobError(f"{where}: expected [re, im], a number, or a 'p/q' string")


def _require(doc: dict, key: str, kind, where="job"):
    if key not in doc:
        raise JobError(f"{where}: missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise JobError(f"{where}: field {key!r} has wrong type")
    return value


def job_from_dict(doc: dict) -> JobSpec:
    """Validate a decoded job document and build a :class:`JobSpec`."""
    if not isinstance(doc, dict):
        raise JobError("job must be a JSON object")
    variables = _require(doc, "variables", list)
    if not variables or not all(isinstance(v, str) and v for v in variables):
        raise JobError("variables must be a nonempty list of names")
    if len(set(variables)) != len(variables):
        raise JobError("duplicate variable names")
    for v in variables:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", v) or v == "i":
            raise JobError(f"invalid variable name {v!r}")
    equations = _require(doc, "equations", list)
    if not equations or not all(isinstance(e, str) for e in equations):
        raise JobError("equations must be a nonempty list of strings")
    polys = []
    for k, text in enumerate(equations):
        try:
            polys.append(parse_polynomial(text, variables))
        except ParseError as exc:
            raise JobError(f"equation {k}: {exc}") from exc
    n = len(variables)
    d = _require(doc, "dimension", int)
    if d < 0:
        raise JobError("dimension must be nonnegative")
    if d >= n:
        raise JobError(f"dimension {d} must be smaller than the number of variables {n}")

    tol_doc = doc.get("tolerances", {})
    if not isinstance(tol_doc, dict):
        raise JobError("tolerances must be an object")
    known = set(ToleranceSet.__dataclass_fields__)
    unknown = set(tol_doc) - known
    if unknown:
        raise JobError(f"unknown tolerances {sorted(unknown)}")
    for key, value in tol_doc.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise JobError(f"tolerance {key!r} must be a number")
    tolerances = ToleranceSet(**tol_doc)

    points_doc = _require(doc, "points", list)
    points = []
    for j, pd in enumerate(points_doc):
        where = f"points[{j}]"
        if not isinstance(pd, dict):
            raise JobError(f"{where}: expected an object")
        label = pd.get("label", f"P{j}")
        if not isinstance(label, str):
            raise JobError(f"{where}: label must be a string")
        coords = _require(pd, "coordinates", list, where)
        if len(coords) != n:
            raise JobError(f"{where}: expected {n} coordinates, got {len(coords)}")
        z = tuple(_parse_scalar(c, f"{where}.coordinates[{i}]") for i, c in enumerate(coords))
        scale = 1.0 + max(abs(c) for c in z)
        if min(abs(c) for c in z) <= tolerances.tol_torus * scale:
            raise JobError(f"{where} ({label}): point not in torus")
        points.append(LabeledPoint(label, z))

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise JobError("seed must be an unsigned 64-bit integer")
    mode = doc.get("mode", "direct")
    if mode == "batch":
        mode = "parameter_homotopy"
    if mode not in MODES:
        raise JobError(f"mode must be one of {MODES}")
    strategy = str(doc.get("start_strategy", "two_homogeneous")).replace("-", "_")
    if strategy not in STRATEGIES:
        raise JobError(f"start_strategy must be one of {STRATEGIES}")
    repeat = doc.get("repeat_checks", 0)
    if isinstance(repeat, bool) or not isinstance(repeat, int) or repeat < 0:
        raise JobError("repeat_checks must be a nonnegative integer")
    radius = doc.get("base_radius", 1.0)
    if isinstance(radius, bool) or not isinstance(radius, (int, float)) or radius <= 0:
        raise JobError("base_radius must be a positive number")
    verify = doc.get("verify_dimension", False)
    if not isinstance(verify, bool):
        raise JobError("verify_dimension must be a boolean")

    return JobSpec(
        variables=tuple(variables),
        system=PolySystem(n, polys),
        dimension_d=d,
        points=tuple(points),
        equations_text=tuple(equations),
        seed=seed,
        tolerances=tolerances,
        mode=mode,
        start_strategy=strategy,
        repeat_checks=repeat,
        base_radius=float(radius),
        verify_dimension=verify,
    )


def parse_job(text: str) -> JobSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JobError(f"invalid JSON: {exc}") from exc
    return job_from_dict(doc)


def point_array(point: LabeledPoint) -> np.ndarray:
    return np.array(point.coordinates, dtype=complex)
