"""
Sparse multilinear polynomials over binary variables.

A Polynomial maps monomials (sets of variable indices) to real coefficients
in one of two domains: SPIN (values ±1, s² = 1) or BOOLEAN (values 0/1,
b² = b). Every product is reduced back to multilinear form. Monomials are
held internally as integer bitmasks; the public view is sorted index tuples
in canonical order (degree, then lexicographic).
"""

from __future__ import annotations

import json
import math
import re
from collections import defaultdict
from collections.abc import Iterable, Iterator, Mapping, Sequence
from enum import Enum
from functools import cached_property
from typing import Any, Union

import numpy as np

ZERO_TOL = 1e-15

Monomial = tuple[int, ...]
Number = Union[int, float]


class Domain(str, Enum):
    SPIN = "spin"
    BOOLEAN = "boolean"

    @property
    def values(self) -> tuple[int, int]:
        return (-1, 1) if self is Domain.SPIN else (0, 1)


class DomainMismatchError(ValueError):
    """Operands live in different variable domains."""


def mask_of(variables: Iterable[int]) -> int:
    mask = 0
    for v in variables:
        if v < 0:
            raise ValueError(f"variable indices must be non-negative, got {v}")
        mask |= 1 << v
    return mask


def indices_of(mask: int) -> Monomial:
    out: list[int] = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def _degree(mask: int) -> int:
    return bin(mask).count("1")


def _canonical_key(mask: int) -> tuple[int, Monomial]:
    return (_degree(mask), indices_of(mask))


class Polynomial:
    """Immutable multilinear polynomial. Arithmetic returns new instances."""

    def __init__(
        self,
        domain: Domain = Domain.SPIN,
        terms: Mapping[int, float] | None = None,
        num_vars: int = 0,
    ) -> None:
        self.domain = Domain(domain)
        cleaned = {
            int(m): float(c) for m, c in (terms or {}).items() if abs(c) >= ZERO_TOL
        }
        self._terms: dict[int, float] = cleaned
        highest = max((m.bit_length() for m in cleaned), default=0)
        self._num_vars = max(int(num_vars), highest)

    # --- construction ---

    @classmethod
    def from_terms(
        cls,
        terms: Iterable[tuple[Iterable[int], float]],
        domain: Domain = Domain.SPIN,
        num_vars: int = 0,
    ) -> Polynomial:
        """Build from (variables, coefficient) pairs; repeated variables are reduced."""
        acc: dict[int, float] = defaultdict(float)
        for variables, coeff in terms:
            mask = 0
            for v in variables:
                if v < 0:
                    raise ValueError(f"variable indices must be non-negative, got {v}")
                bit = 1 << v
                mask = mask ^ bit if domain is Domain.SPIN else mask | bit
            acc[mask] += float(coeff)
        return cls(domain, acc, num_vars)

    @classmethod
    def constant(cls, value: float, domain: Domain = Domain.SPIN, num_vars: int = 0) -> Polynomial:
        return cls(domain, {0: float(value)}, num_vars)

    @classmethod
    def variable(cls, index: int, domain: Domain = Domain.SPIN, coeff: float = 1.0) -> Polynomial:
        return cls(domain, {1 << index: float(coeff)})

    # --- inspection ---

    @property
    def num_vars(self) -> int:
        return self._num_vars

    @property
    def terms(self) -> Mapping[int, float]:
        """Bitmask → coefficient view. Read only."""
        return self._terms

    @property
    def constant_term(self) -> float:
        return self._terms.get(0, 0.0)

    @property
    def degree(self) -> int:
        return max((_degree(m) for m in self._terms), default=0)

    @property
    def variables(self) -> Monomial:
        mask = 0
        for m in self._terms:
            mask |= m
        return indices_of(mask)

    def __len__(self) -> int:
        return len(self._terms)

    def items(self) -> list[tuple[Monomial, float]]:
        """Terms in canonical order: degree, then lexicographic indices."""
        return [(indices_of(m), self._terms[m]) for m in sorted(self._terms, key=_canonical_key)]

    def __iter__(self) -> Iterator[tuple[Monomial, float]]:
        return iter(self.items())

    def __repr__(self) -> str:
        return f"Polynomial(domain={self.domain.value}, terms={len(self)}, num_vars={self.num_vars})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, float)):
            other = Polynomial.constant(other, self.domain)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.domain is other.domain and self._terms == other._terms

    __hash__ = None  # type: ignore[assignment]

    def is_close(self, other: Polynomial, tol: float = 1e-12) -> bool:
        self._check_domain(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) <= tol for k in keys)

    # --- algebra ---

    def _check_domain(self, other: Polynomial) -> None:
        if self.domain is not other.domain:
            raise DomainMismatchError(
                f"cannot combine {self.domain.value} and {other.domain.value} polynomials"
            )

    def _coerce(self, other: Polynomial | Number) -> Polynomial:
        if isinstance(other, Polynomial):
            self._check_domain(other)
            return other
        if isinstance(other, (int, float)):
            return Polynomial.constant(float(other), self.domain)
        raise TypeError(f"cannot combine Polynomial with {type(other).__name__}")

    def __add__(self, other: Polynomial | Number) -> Polynomial:
        q = self._coerce(other)
        acc = dict(self._terms)
        for m, c in q._terms.items():
            acc[m] = acc.get(m, 0.0) + c
        return Polynomial(self.domain, acc, max(self._num_vars, q._num_vars))

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return self.scale(-1.0)

    def __sub__(self, other: Polynomial | Number) -> Polynomial:
        return self + (-self._coerce(other))

    def __rsub__(self, other: Number) -> Polynomial:
        return (-self) + other

    def __mul__(self, other: Polynomial | Number) -> Polynomial:
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        q = self._coerce(other)
        acc: dict[int, float] = defaultdict(float)
        spin = self.domain is Domain.SPIN
        for m1, c1 in self._terms.items():
            for m2, c2 in q._terms.items():
                acc[(m1 ^ m2) if spin else (m1 | m2)] += c1 * c2
        return Polynomial(self.domain, acc, max(self._num_vars, q._num_vars))

    __rmul__ = __mul__

    def scale(self, factor: float) -> Polynomial:
        return Polynomial(
            self.domain, {m: c * factor for m, c in self._terms.items()}, self._num_vars
        )

    def with_num_vars(self, num_vars: int) -> Polynomial:
        return Polynomial(self.domain, self._terms, max(num_vars, self._num_vars))

    # --- evaluation ---

    def _assignment_array(self, assignment: Sequence[float] | Mapping[int, float] | np.ndarray) -> np.ndarray:
        allowed = self.domain.values
        if isinstance(assignment, Mapping):
            arr = np.zeros(self._num_vars)
            for v in range(self._num_vars):
                if v not in assignment:
                    raise ValueError(f"assignment is missing variable {v}")
                arr[v] = assignment[v]
        else:
            arr = np.asarray(assignment, dtype=float).reshape(-1)
            if arr.size < self._num_vars:
                raise ValueError(
                    f"assignment covers {arr.size} variables, polynomial needs {self._num_vars}"
                )
        bad = ~np.isin(arr[: self._num_vars], allowed)
        if np.any(bad):
            v = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"variable {v} = {arr[v]!r} is outside the {self.domain.value} domain {allowed}"
            )
        return arr

    def evaluate(self, assignment: Sequence[float] | Mapping[int, float] | np.ndarray) -> float:
        """Value at a domain-valid assignment covering every variable."""
        arr = self._assignment_array(assignment)
        return self.compiled.value(arr[: self._num_vars])

    def partial_derivative(self, i: int) -> Polynomial:
        """∂p/∂s_i of the multilinear form (SPIN only)."""
        if self.domain is not Domain.SPIN:
            raise DomainMismatchError("partial derivatives are defined for spin polynomials only")
        bit = 1 << i
        return Polynomial(
            self.domain,
            {m ^ bit: c for m, c in self._terms.items() if m & bit},
            self._num_vars,
        )

    @cached_property
    def compiled(self) -> CompiledPolynomial:
        return CompiledPolynomial(self)

    # --- serialization ---

    def to_dict(self, registry: Mapping[str, Any] | None = None) -> dict[str, Any]:
        return {
            "domain": self.domain.value,
            "num_vars": self._num_vars,
            "registry": dict(registry) if registry is not None else None,
            "terms": [{"vars": list(mono), "coeff": coeff} for mono, coeff in self.items()],
        }

    def to_json(self, registry: Mapping[str, Any] | None = None, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(registry), indent=indent)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Polynomial:
        try:
            domain = Domain(data["domain"])
            terms = [(t["vars"], t["coeff"]) for t in data["terms"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed HUBO JSON: {exc}") from exc
        return cls.from_terms(terms, domain, int(data.get("num_vars", 0) or 0))

    @classmethod
    def from_json(cls, text: str) -> Polynomial:
        return cls.from_dict(json.loads(text))


class CompiledPolynomial:
    """Dense numpy form for fast repeated evaluation and gradients.

    Each non-constant term is a row of variable indices padded with a slot
    that always holds 1.0.
    """

    def __init__(self, poly: Polynomial) -> None:
        self.num_vars = poly.num_vars
        self.constant = poly.constant_term
        rows = [(indices_of(m), c) for m, c in poly.terms.items() if m]
        width = max((len(ix) for ix, _ in rows), default=1)
        self.idx = np.full((len(rows), width), self.num_vars, dtype=np.intp)
        self.coeffs = np.zeros(len(rows))
        for r, (ix, c) in enumerate(rows):
            self.idx[r, : len(ix)] = ix
            self.coeffs[r] = c

    def _extend(self, x: np.ndarray) -> np.ndarray:
        xe = np.empty(self.num_vars + 1)
        xe[: self.num_vars] = x[: self.num_vars]
        xe[self.num_vars] = 1.0
        return xe

    def value(self, x: np.ndarray) -> float:
        if self.coeffs.size == 0:
            return float(self.constant)
        xe = self._extend(np.asarray(x, dtype=float))
        return float(self.constant + self.coeffs @ np.prod(xe[self.idx], axis=1))

    def values(self, batch: np.ndarray) -> np.ndarray:
        """Values for each row of a (B, num_vars) batch."""
        batch = np.asarray(batch, dtype=float)
        if self.coeffs.size == 0:
            return np.full(batch.shape[0], float(self.constant))
        ones = np.ones((batch.shape[0], 1))
        xe = np.concatenate([batch[:, : self.num_vars], ones], axis=1)
        return self.constant + np.prod(xe[:, self.idx], axis=2) @ self.coeffs

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """∂/∂x_i of the multilinear extension at a real point x."""
        grad = np.zeros(self.num_vars + 1)
        if self.coeffs.size == 0:
            return grad[: self.num_vars]
        xe = self._extend(np.asarray(x, dtype=float))
        vals = xe[self.idx]
        for p in range(self.idx.shape[1]):
            others = vals.copy()
            others[:, p] = 1.0
            weights = self.coeffs * np.prod(others, axis=1)
            grad += np.bincount(self.idx[:, p], weights=weights, minlength=self.num_vars + 1)
        return grad[: self.num_vars]


# --- module-level operations ---


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def poly_scale(p: Polynomial, factor: float) -> Polynomial:
    return p.scale(factor)


def evaluate(p: Polynomial, assignment: Sequence[float] | Mapping[int, float] | np.ndarray) -> float:
    return p.evaluate(assignment)


def partial_derivative(p: Polynomial, i: int) -> Polynomial:
    return p.partial_derivative(i)


def prune_threshold(p: Polynomial, tau: float) -> Polynomial:
    """Drop non-constant terms with |coefficient| < tau; the constant is kept."""
    if tau < 0:
        raise ValueError(f"threshold must be non-negative, got {tau}")
    kept = {m: c for m, c in p.terms.items() if m == 0 or abs(c) >= tau}
    return Polynomial(p.domain, kept, p.num_vars)


def term_stats(p: Polynomial) -> dict[str, Any]:
    """Non-constant term count, max degree, degree histogram and a decade histogram of |coefficients|."""
    degrees: dict[int, int] = defaultdict(int)
    decades: dict[int, int] = defaultdict(int)
    for m, c in p.terms.items():
        if m == 0:
            continue
        degrees[_degree(m)] += 1
        decades[math.floor(math.log10(abs(c)))] += 1
    return {
        "num_terms": sum(degrees.values()),
        "max_degree": max(degrees, default=0),
        "constant": p.constant_term,
        "degree_histogram": dict(sorted(degrees.items())),
        "coefficient_histogram": dict(sorted(decades.items())),
    }


# --- text parser ---

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_VARIABLE = re.compile(r"b_?\{?(\d)(\d)\}?|[xs]_?\{?(\d+)\}?")


def parse_polynomial(
    text: str,
    bits_per_torsion: int | None = None,
    domain: Domain = Domain.SPIN,
) -> Polynomial:
    """
    Parse a printed polynomial such as ``-240.72 - 0.0112 b_{00} b_{12} + x_3``.

    ``b_{ij}`` (or ``bij``) is bit j of torsion i and maps to variable
    ``i * bits_per_torsion + j``; ``x_k``/``s_k`` name variable k directly.
    """
    s = re.sub(r"[\s*·\\,]|cdot", "", text.replace("−", "-")).rstrip(".")
    terms: list[tuple[list[int], float]] = []
    pos = 0
    while pos < len(s):
        sign = 1.0
        if s[pos] in "+-":
            sign = -1.0 if s[pos] == "-" else 1.0
            pos += 1
        num = _NUMBER.match(s, pos)
        coeff = 1.0
        if num:
            coeff = float(num.group())
            pos = num.end()
        variables: list[int] = []
        while pos < len(s):
            var = _VARIABLE.match(s, pos)
            if var is None:
                break
            if var.group(3) is not None:
                variables.append(int(var.group(3)))
            else:
                if bits_per_torsion is None:
                    raise ValueError("b_{ij} variables need bits_per_torsion")
                torsion, bit = int(var.group(1)), int(var.group(2))
                if bit >= bits_per_torsion:
                    raise ValueError(f"bit index {bit} exceeds bits_per_torsion={bits_per_torsion}")
                variables.append(torsion * bits_per_torsion + bit)
            pos = var.end()
        if num is None and not variables:
            raise ValueError(f"cannot parse polynomial near {s[pos:pos + 12]!r}")
        terms.append((variables, sign * coeff))
    return Polynomial.from_terms(terms, domain)
