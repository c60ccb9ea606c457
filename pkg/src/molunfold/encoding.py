"""
Torsion-angle grids and their binary encodings.

Phase encoding represents the d = 2ⁿ grid phases e^{iφ_k} by an odd
multilinear polynomial p_n(s) over n spins with 2ⁿ⁻¹ terms; its real and
imaginary parts are the cos and sin polynomials. One-hot encoding uses d
boolean bits per torsion with a quadratic penalty enforcing exactly one hot
bit.

Bit conventions: spin s_j = 1 - 2 b_j, and the integer ``a`` of an assignment
has bit j set when s_j = -1.
"""

from __future__ import annotations

import cmath
import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Union

import numpy as np

from molunfold.geometry import TWO_PI, TorsionAssignment
from molunfold.polynomial import Domain, Polynomial, indices_of

MAX_PHASE_BITS = 16
TRIG_TOL = 1e-15


class EncodingKind(str, Enum):
    PHASE = "phase"
    ONEHOT = "onehot"

    @property
    def domain(self) -> Domain:
        return Domain.SPIN if self is EncodingKind.PHASE else Domain.BOOLEAN


class ConstraintViolationError(ValueError):
    """A one-hot assignment with zero or several hot bits for a torsion."""

    def __init__(self, torsion: int, hot: int) -> None:
        super().__init__(f"torsion {torsion} has {hot} hot bits, expected exactly 1")
        self.torsion = torsion
        self.hot = hot


def is_power_of_two(d: int) -> bool:
    return d >= 1 and d & (d - 1) == 0


@dataclass(frozen=True)
class AngleGrid:
    """Uniform grid φ_k = 2πk/d, k = 0..d-1."""

    d: int

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"angle grid needs d >= 2, got {self.d}")

    @property
    def values(self) -> np.ndarray:
        return TWO_PI * np.arange(self.d) / self.d

    @property
    def is_power_of_two(self) -> bool:
        return is_power_of_two(self.d)

    @property
    def bits(self) -> int:
        """log₂ d; only defined for power-of-two grids."""
        if not self.is_power_of_two:
            raise ValueError(f"phase encoding needs d to be a power of 2, got {self.d}")
        return self.d.bit_length() - 1

    def angle(self, k: int) -> float:
        return TWO_PI * (k % self.d) / self.d


@dataclass(frozen=True)
class PhaseCode:
    """
    Polynomial p_n(s) = Σ c_m Π_{j∈m} s_j whose values are the 2ⁿ-th roots of unity.

    ``terms`` pairs each local monomial (sorted bit indices) with its complex
    coefficient. ``correspondence[a]`` is the grid index of assignment ``a``.
    """

    n: int
    terms: tuple[tuple[tuple[int, ...], complex], ...]
    correspondence: tuple[int, ...]
    source: str = "product"

    @property
    def d(self) -> int:
        return 1 << self.n

    @cached_property
    def _inverse(self) -> tuple[int, ...]:
        inv = [0] * self.d
        for a, k in enumerate(self.correspondence):
            inv[k] = a
        return tuple(inv)

    @staticmethod
    def assignment_index(spins: Sequence[float]) -> int:
        a = 0
        for j, s in enumerate(spins):
            if s == -1:
                a |= 1 << j
            elif s != 1:
                raise ValueError(f"spin {j} = {s!r} is not ±1")
        return a

    def evaluate(self, spins: Sequence[float]) -> complex:
        if len(spins) != self.n:
            raise ValueError(f"phase code takes {self.n} spins, got {len(spins)}")
        total = 0j
        for mono, c in self.terms:
            total += c * math.prod(spins[j] for j in mono)
        return total

    def grid_index(self, spins: Sequence[float]) -> int:
        if len(spins) != self.n:
            raise ValueError(f"phase code takes {self.n} spins, got {len(spins)}")
        return self.correspondence[self.assignment_index(spins)]

    def spins_for(self, k: int) -> tuple[int, ...]:
        if not 0 <= k < self.d:
            raise ValueError(f"grid index {k} outside 0..{self.d - 1}")
        a = self._inverse[k]
        return tuple(-1 if a >> j & 1 else 1 for j in range(self.n))

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "source": self.source,
            "terms": [
                {"bits": list(mono), "re": c.real, "im": c.imag} for mono, c in self.terms
            ],
            "correspondence": [
                {"spins": list(self.spins_for(k)), "k": k} for k in range(self.d)
            ],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


@dataclass(frozen=True)
class OneHotCode:
    d: int
    penalty_weight: float | None = None

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"one-hot encoding needs d >= 2, got {self.d}")
        if self.penalty_weight is not None and self.penalty_weight <= 0:
            raise ValueError(f"penalty weight must be positive, got {self.penalty_weight}")


Code = Union[PhaseCode, OneHotCode]


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    sin_poly: Polynomial
    cos_poly: Polynomial
    variables: tuple[int, ...] = field(default=())


def _correspondence_of(n: int, value: Any) -> tuple[int, ...]:
    """Map every assignment to the grid index of its phase."""
    d = 1 << n
    table: list[int] = []
    for a in range(d):
        z = value(tuple(-1 if a >> j & 1 else 1 for j in range(n)))
        if abs(abs(z) - 1.0) > 1e-9:
            raise ValueError(f"phase table value {z} for assignment {a} is not on the unit circle")
        k = round(cmath.phase(z) / TWO_PI * d) % d
        table.append(k)
    if sorted(table) != list(range(d)):
        raise ValueError("phase table does not cover every grid point exactly once")
    return tuple(table)


def build_phase_code(n: int) -> PhaseCode:
    """
    Phase code for d = 2ⁿ by the per-bit product construction.

    With t_j = s_j s_{n-1} the phase is s_{n-1} Π_{j<n-1} e^{iπ 2^j (1 - t_j) / 2ⁿ},
    which expands to exactly 2ⁿ⁻¹ odd monomials. Grid index k has low bits
    b_j ⊕ b_{n-1} and top bit b_{n-1}.
    """
    if not 1 <= n <= MAX_PHASE_BITS:
        raise ValueError(f"phase code needs 1 <= n <= {MAX_PHASE_BITS}, got {n}")
    top = 1 << (n - 1)
    terms: dict[int, complex] = {top: 1 + 0j}
    for j in range(n - 1):
        omega = cmath.exp(1j * math.pi * (1 << j) / (1 << (n - 1)))
        keep, flip = (1 + omega) / 2, (1 - omega) / 2
        nxt: dict[int, complex] = {}
        for mask, c in terms.items():
            nxt[mask] = nxt.get(mask, 0j) + c * keep
            other = mask ^ (1 << j) ^ top
            nxt[other] = nxt.get(other, 0j) + c * flip
        terms = nxt
    low = top - 1
    correspondence = tuple((a ^ low) if a & top else a for a in range(1 << n))
    ordered = sorted(terms, key=lambda m: (bin(m).count("1"), indices_of(m)))
    return PhaseCode(
        n=n,
        terms=tuple((indices_of(m), terms[m]) for m in ordered),
        correspondence=correspondence,
    )


_PRINTED_TABLES: dict[int, tuple[tuple[tuple[int, ...], complex], ...]] = {
    2: (
        ((0,), complex(0.5, -0.5)),
        ((1,), complex(0.5, 0.5)),
    ),
    3: (
        ((0,), complex(1, math.sqrt(2) - 1) / 4),
        ((1,), complex(1, -(math.sqrt(2) + 1)) / 4),
        ((2,), complex(1 + math.sqrt(2), 1) / 4),
        ((0, 1, 2), complex(1 - math.sqrt(2), 1) / 4),
    ),
}


def printed_phase_code(n: int) -> PhaseCode:
    """The published literal tables for n = 2 and n = 3; correspondence by enumeration."""
    if n not in _PRINTED_TABLES:
        raise ValueError(f"printed phase tables exist for n in {sorted(_PRINTED_TABLES)}, got {n}")
    terms = _PRINTED_TABLES[n]

    def value(spins: tuple[int, ...]) -> complex:
        return sum((c * math.prod(spins[j] for j in mono) for mono, c in terms), 0j)

    return PhaseCode(n=n, terms=terms, correspondence=_correspondence_of(n, value), source="printed")


def trig_polys_phase(code: PhaseCode, variables: Sequence[int] | None = None) -> TrigPolynomial:
    """sin/cos polynomials as the imaginary/real parts of p_n over ``variables``."""
    var = tuple(range(code.n)) if variables is None else tuple(variables)
    if len(var) != code.n:
        raise ValueError(f"phase code needs {code.n} variables, got {len(var)}")
    sin_terms = [([var[j] for j in mono], c.imag) for mono, c in code.terms]
    cos_terms = [([var[j] for j in mono], c.real) for mono, c in code.terms]
    return TrigPolynomial(
        sin_poly=Polynomial.from_terms(sin_terms, Domain.SPIN),
        cos_poly=Polynomial.from_terms(cos_terms, Domain.SPIN),
        variables=var,
    )


def trig_polys_onehot(d: int, variables: Sequence[int] | None = None) -> TrigPolynomial:
    """Linear forms Σ sin(φ_k) b_k and Σ cos(φ_k) b_k; vanishing grid values drop out."""
    if d < 2:
        raise ValueError(f"one-hot encoding needs d >= 2, got {d}")
    var = tuple(range(d)) if variables is None else tuple(variables)
    if len(var) != d:
        raise ValueError(f"one-hot code needs {d} variables, got {len(var)}")
    phis = TWO_PI * np.arange(d) / d
    sin_terms = [([v], float(s)) for v, s in zip(var, np.sin(phis)) if abs(s) >= TRIG_TOL]
    cos_terms = [([v], float(c)) for v, c in zip(var, np.cos(phis)) if abs(c) >= TRIG_TOL]
    return TrigPolynomial(
        sin_poly=Polynomial.from_terms(sin_terms, Domain.BOOLEAN, num_vars=max(var) + 1),
        cos_poly=Polynomial.from_terms(cos_terms, Domain.BOOLEAN, num_vars=max(var) + 1),
        variables=var,
    )


def penalty_polynomial(d: int, M: int, A_const: float) -> Polynomial:
    """A·Σ_i (Σ_k b_ik - 1)² expanded over booleans, variable index i·d + k."""
    if A_const <= 0:
        raise ValueError(f"penalty weight must be positive, got {A_const}")
    if d < 2:
        raise ValueError(f"one-hot encoding needs d >= 2, got {d}")
    terms: list[tuple[list[int], float]] = []
    for i in range(M):
        base = i * d
        terms.append(([], A_const))
        terms.extend(([base + k], -A_const) for k in range(d))
        terms.extend(
            ([base + k, base + l], 2.0 * A_const) for k in range(d) for l in range(k + 1, d)
        )
    return Polynomial.from_terms(terms, Domain.BOOLEAN, num_vars=M * d)


def _bits_of(code: Code) -> int:
    return code.n if isinstance(code, PhaseCode) else code.d


def decode_indices(code: Code, assignment: Sequence[float] | np.ndarray) -> tuple[int, ...]:
    """Grid index of every torsion in a full assignment (bit j of torsion i at i·bits + j)."""
    values = [int(v) if float(v).is_integer() else v for v in np.asarray(assignment).reshape(-1)]
    bits = _bits_of(code)
    if len(values) % bits:
        raise ValueError(f"assignment of {len(values)} variables is not a multiple of {bits}")
    out: list[int] = []
    for i in range(len(values) // bits):
        chunk = values[i * bits : (i + 1) * bits]
        if isinstance(code, PhaseCode):
            out.append(code.grid_index(chunk))
            continue
        if any(v not in (0, 1) for v in chunk):
            raise ValueError(f"one-hot bits of torsion {i} must be 0/1, got {chunk}")
        hot = [k for k, v in enumerate(chunk) if v == 1]
        if len(hot) != 1:
            raise ConstraintViolationError(i, len(hot))
        out.append(hot[0])
    return tuple(out)


def decode(code: Code, assignment: Sequence[float] | np.ndarray) -> TorsionAssignment:
    d = code.d
    return TorsionAssignment.from_indices(decode_indices(code, assignment), d)


def encode(code: Code, grid_indices: Iterable[int]) -> np.ndarray:
    """Assignment vector for the given grid indices; inverse of ``decode_indices``."""
    chunks: list[Sequence[int]] = []
    for k in grid_indices:
        k = int(k)
        if not 0 <= k < code.d:
            raise ValueError(f"grid index {k} outside 0..{code.d - 1}")
        if isinstance(code, PhaseCode):
            chunks.append(code.spins_for(k))
        else:
            chunks.append([1 if j == k else 0 for j in range(code.d)])
    if not chunks:
        return np.zeros(0, dtype=np.int8)
    return np.concatenate([np.asarray(c, dtype=np.int8) for c in chunks])


def encoding_resources(M: int, d: int) -> dict[str, dict[str, int | None]]:
    """Variable and per-torsion trig-term counts for both encodings."""
    if M < 0 or d < 2:
        raise ValueError(f"need M >= 0 and d >= 2, got M={M}, d={d}")
    onehot_trig = trig_polys_onehot(d)
    phase: dict[str, int | None] = {"variables": None, "sin_terms": None, "cos_terms": None}
    if is_power_of_two(d):
        n = d.bit_length() - 1
        half = 1 << (n - 1)
        phase = {"variables": M * n, "sin_terms": half, "cos_terms": half}
        if n <= 8:
            trig = trig_polys_phase(build_phase_code(n))
            phase["sin_terms"], phase["cos_terms"] = len(trig.sin_poly), len(trig.cos_poly)
    return {
        "phase": phase,
        "onehot": {
            "variables": M * d,
            "sin_terms": len(onehot_trig.sin_poly),
            "cos_terms": len(onehot_trig.cos_poly),
        },
    }
