"""Sparse multivariate polynomials with complex coefficients.

Polynomials are immutable maps from exponent tuples to ``complex``.  Terms are
kept in graded lexicographic order so that printing and evaluation are
deterministic.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np

Exponents = tuple[int, ...]

#: degree reported for the zero polynomial
ZERO_DEGREE = -math.inf


def _grlex_key(exps: Exponents) -> tuple:
    return (sum(exps), exps)


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponents, complex] | Iterable = ()):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Exponents, complex] = {}
        for exps, coeff in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError(f"monomial {exps} does not have {nvars} exponents")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            acc[exps] = acc.get(exps, 0j) + complex(coeff)
        for exps, coeff in acc.items():
            if not (math.isfinite(coeff.real) and math.isfinite(coeff.imag)):
                raise ValueError(f"non-finite coefficient {coeff!r}")
        ordered = sorted((e for e, c in acc.items() if c != 0), key=_grlex_key)
        self.nvars = nvars
        self._terms = tuple((e, acc[e]) for e in ordered)
        self._hash = None

    # construction helpers

    @classmethod
    def constant(cls, nvars: int, value: complex) -> Polynomial:
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> Polynomial:
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for {nvars} variables")
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): 1.0})

    @classmethod
    def linear(cls, coeffs: Sequence[complex], const: complex = 0.0) -> Polynomial:
        """``sum(coeffs[i] * z_i) + const``."""
        n = len(coeffs)
        terms = {(0,) * n: const}
        for i, a in enumerate(coeffs):
            exps = [0] * n
            exps[i] = 1
            terms[tuple(exps)] = a
        return cls(n, terms)

    # accessors

    @property
    def terms(self) -> tuple[tuple[Exponents, complex], ...]:
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e, _ in self._terms)

    def total_degree(self) -> int | float:
        if not self._terms:
            return ZERO_DEGREE
        return max(sum(e) for e, _ in self._terms)

    def degree_in(self, indices: Iterable[int]) -> int | float:
        """Largest total degree in the given subset of variables."""
        if not self._terms:
            return ZERO_DEGREE
        idx = list(indices)
        return max(sum(e[i] for i in idx) for e, _ in self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    # arithmetic

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return Polynomial.constant(self.nvars, complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial(self.nvars, list(self._terms) + list(other._terms))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, [(e, -c) for e, c in self._terms])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc: dict[Exponents, complex] = {}
        for e1, c1 in self._terms:
            for e2, c2 in other._terms:
                e = tuple(a + b for a, b in zip(e1, e2))
                acc[e] = acc.get(e, 0j) + c1 * c2
        return Polynomial(self.nvars, acc)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Polynomial.constant(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, self._terms))
        return self._hash

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {dict(self._terms)!r})"

    # calculus and evaluation

    def evaluate(self, z: Sequence[complex]) -> complex:
        """Sum of ``coeff * prod(z_i ** e_i)`` in term order."""
        if len(z) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates, got {len(z)}")
        z = [complex(v) for v in z]
        total = 0j
        for exps, coeff in self._terms:
            mono = 1 + 0j
            for zi, ei in zip(z, exps):
                if ei:
                    mono *= zi**ei
            total += coeff * mono
        return total

    __call__ = evaluate

    def partial_derivative(self, i: int) -> Polynomial:
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range for {self.nvars} variables")
        out = []
        for exps, coeff in self._terms:
            if exps[i]:
                e = list(exps)
                e[i] -= 1
                out.append((tuple(e), coeff * exps[i]))
        return Polynomial(self.nvars, out)

    def term_scale(self, z: Sequence[complex]) -> float:
        """``sum |coeff| * |z^e|``, the natural magnitude of ``p`` near ``z``."""
        az = [abs(complex(v)) for v in z]
        return sum(abs(c) * math.prod(a**e for a, e in zip(az, exps)) for exps, c in self._terms)

    def substitute_variables(self, nvars: int, mapping: Sequence[int]) -> Polynomial:
        """Re-embed into ``nvars`` variables, old variable ``j`` becoming ``mapping[j]``."""
        out = []
        for exps, coeff in self._terms:
            e = [0] * nvars
            for j, ej in enumerate(exps):
                e[mapping[j]] += ej
            out.append((tuple(e), coeff))
        return Polynomial(nvars, out)

    def to_string(self, names: Sequence[str]) -> str:
        """Canonical text form accepted by :func:`mlobstruct.frontend.parse_polynomial`."""
        if len(names) != self.nvars:
            raise ValueError("one name per variable required")
        if not self._terms:
            return "0"
        parts = []
        for exps, coeff in reversed(self._terms):
            factors = [format_complex(coeff)]
            for name, e in zip(names, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            parts.append("*".join(factors))
        return " + ".join(parts)


def format_complex(c: complex) -> str:
    """Exact (repr-based) parenthesised literal, e.g. ``(1.5-2.0*i)``."""
    c = complex(c)
    if c.imag == 0:
        return f"({c.real!r})"
    if c.real == 0:
        return f"({c.imag!r}*i)"
    sign = "+" if c.imag >= 0 else "-"
    return f"({c.real!r}{sign}{abs(c.imag)!r}*i)"


class PolySystem:
    """Ordered list of polynomials sharing a variable count."""

    __slots__ = ("nvars", "equations")

    def __init__(self, nvars: int, equations: Iterable[Polynomial]):
        eqs = tuple(equations)
        for p in eqs:
            if p.nvars != nvars:
                raise ValueError(f"equation has {p.nvars} variables, system has {nvars}")
        self.nvars = nvars
        self.equations = eqs

    def __len__(self) -> int:
        return len(self.equations)

    def __iter__(self):
        return iter(self.equations)

    def __getitem__(self, i):
        return self.equations[i]

    def is_square(self) -> bool:
        return len(self.equations) == self.nvars

    def evaluate(self, z: Sequence[complex]) -> np.ndarray:
        return np.array([p.evaluate(z) for p in self.equations], dtype=complex)

    def degrees(self) -> list:
        return [p.total_degree() for p in self.equations]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolySystem):
            return NotImplemented
        return self.nvars == other.nvars and self.equations == other.equations

    def __hash__(self) -> int:
        return hash((self.nvars, self.equations))

    def __repr__(self) -> str:
        return f"PolySystem({self.nvars}, {len(self.equations)} equations)"


def jacobian(system: PolySystem) -> list[list[Polynomial]]:
    return [[p.partial_derivative(i) for i in range(system.nvars)] for p in system.equations]


class BatchEvaluator:
    """Vectorised values and Jacobians of a polynomial system at many points.

    All monomials of the system and of its first partials are collected once;
    evaluation at a batch ``X`` of shape ``(B, n)`` is a power-table gather
    followed by one dense matrix product.
    """

    def __init__(self, system: PolySystem):
        n, m = system.nvars, len(system)
        self.nvars = n
        self.neqs = m
        rows: list[Polynomial] = list(system.equations)
        for p in system.equations:
            rows.extend(p.partial_derivative(i) for i in range(n))
        index: dict[Exponents, int] = {}
        entries = []
        for r, p in enumerate(rows):
            for exps, coeff in p.terms:
                col = index.setdefault(exps, len(index))
                entries.append((r, col, coeff))
        if not index:
            index[(0,) * n] = 0
        self.exponents = np.array(list(index), dtype=np.int64).reshape(len(index), n)
        coeffs = np.zeros((len(rows), len(index)), dtype=complex)
        for r, c, v in entries:
            coeffs[r, c] += v
        self.coeffs = coeffs
        self.abs_coeffs = np.abs(coeffs[:m])
        self.abs_partials = np.abs(coeffs[m:])
        self.maxdeg = self.exponents.max(axis=0) if len(index) else np.zeros(n, dtype=np.int64)
        self._active = [v for v in range(n) if self.maxdeg[v] > 0]

    def _monomials(self, X: np.ndarray) -> np.ndarray:
        B = X.shape[0]
        mono = np.ones((len(self.exponents), B), dtype=complex)
        for v in self._active:
            d = int(self.maxdeg[v])
            table = np.empty((d + 1, B), dtype=complex)
            table[0] = 1.0
            table[1] = X[:, v]
            for e in range(2, d + 1):
                table[e] = table[e - 1] * X[:, v]
            mono *= table[self.exponents[:, v]]
        return mono

    def values(self, X: np.ndarray) -> np.ndarray:
        """Values with shape ``(B, m)``."""
        mono = self._monomials(np.atleast_2d(X))
        return (self.coeffs[: self.neqs] @ mono).T

    def values_and_jacobian(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values ``(B, m)`` and Jacobians ``(B, m, n)``."""
        X = np.atleast_2d(X)
        out = (self.coeffs @ self._monomials(X)).T
        m, n = self.neqs, self.nvars
        return out[:, :m], out[:, m:].reshape(-1, m, n)

    def scales(self, X: np.ndarray) -> np.ndarray:
        """Per-equation term magnitudes ``sum |c| |x^e|``, shape ``(B, m)``."""
        mono = np.abs(self._monomials(np.atleast_2d(np.abs(X).astype(complex))))
        return (self.abs_coeffs @ mono.real).T

    def jacobian_scales(self, X: np.ndarray) -> np.ndarray:
        """Entrywise term magnitudes ``sum |c| |d x^e / dx_j|`` of the Jacobian, shape ``(B, m, n)``.

        ``|J_ij(x)|`` never exceeds entry ``ij``; a much smaller Jacobian
        entry means its terms cancel.
        """
        mono = np.abs(self._monomials(np.atleast_2d(np.abs(X).astype(complex))))
        return (self.abs_partials @ mono.real).T.reshape(-1, self.neqs, self.nvars)
