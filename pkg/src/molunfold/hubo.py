"""
Binary variable registries and the HUBO objective O = -D(Θ).

Every fragment pair contributes a squared-distance sum that, as a function of
the torsions on its path, is a linear combination of products of
{1, cos θ_t, sin θ_t}. The coefficients are recovered exactly from three
samples per torsion (discrete Fourier orthogonality on 0, 2π/3, 4π/3) and
each basis function is then replaced by the encoding's trig polynomial.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

from molunfold.encoding import (
    AngleGrid,
    Code,
    EncodingKind,
    OneHotCode,
    PhaseCode,
    TrigPolynomial,
    build_phase_code,
    decode_indices,
    encode,
    printed_phase_code,
    penalty_polynomial,
    trig_polys_onehot,
    trig_polys_phase,
)
from molunfold.geometry import TWO_PI, TorsionAssignment, fragment_pair_tables
from molunfold.molgraph import FragmentDecomposition, Molecule
from molunfold.polynomial import Domain, Polynomial

logger = logging.getLogger(__name__)

FOURIER_GRID = TWO_PI * np.arange(3) / 3
# rows map three samples to (constant, cos, sin) coefficients
_FOURIER = np.vstack(
    [
        np.full(3, 1.0 / 3.0),
        (2.0 / 3.0) * np.cos(FOURIER_GRID),
        (2.0 / 3.0) * np.sin(FOURIER_GRID),
    ]
)
ROUNDOFF_REL = 1e-11


@dataclass(frozen=True, eq=False)
class VariableRegistry:
    """
    Bijection (torsion i, bit j) ↔ global variable i·bits + j.

    Build with :meth:`phase` or :meth:`onehot`.
    """

    kind: EncodingKind
    num_torsions: int
    grid: AngleGrid
    code: Code

    @classmethod
    def phase(cls, M: int, d: int, *, printed_table: bool = False) -> VariableRegistry:
        grid = AngleGrid(d)
        code = printed_phase_code(grid.bits) if printed_table else build_phase_code(grid.bits)
        return cls(EncodingKind.PHASE, _check_m(M), grid, code)

    @classmethod
    def onehot(cls, M: int, d: int, *, penalty_weight: float | None = None) -> VariableRegistry:
        return cls(EncodingKind.ONEHOT, _check_m(M), AngleGrid(d), OneHotCode(d, penalty_weight))

    @classmethod
    def create(cls, kind: EncodingKind | str, M: int, d: int, **kwargs: Any) -> VariableRegistry:
        kind = EncodingKind(kind)
        return cls.phase(M, d, **kwargs) if kind is EncodingKind.PHASE else cls.onehot(M, d, **kwargs)

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def domain(self) -> Domain:
        return self.kind.domain

    @property
    def bits_per_torsion(self) -> int:
        return self.code.n if isinstance(self.code, PhaseCode) else self.code.d

    @property
    def num_vars(self) -> int:
        return self.num_torsions * self.bits_per_torsion

    def index(self, torsion: int, bit: int) -> int:
        if not 0 <= torsion < self.num_torsions:
            raise ValueError(f"torsion {torsion} outside 0..{self.num_torsions - 1}")
        if not 0 <= bit < self.bits_per_torsion:
            raise ValueError(f"bit {bit} outside 0..{self.bits_per_torsion - 1}")
        return torsion * self.bits_per_torsion + bit

    def locate(self, variable: int) -> tuple[int, int]:
        if not 0 <= variable < self.num_vars:
            raise ValueError(f"variable {variable} outside 0..{self.num_vars - 1}")
        return divmod(variable, self.bits_per_torsion)

    def name(self, variable: int) -> str:
        i, j = self.locate(variable)
        return f"b_{i}{j}" if i < 10 and j < 10 else f"b_{i}_{j}"

    def variables_of(self, torsion: int) -> tuple[int, ...]:
        base = self.index(torsion, 0)
        return tuple(range(base, base + self.bits_per_torsion))

    @cached_property
    def trig(self) -> tuple[TrigPolynomial, ...]:
        """Per-torsion sin/cos polynomials over that torsion's global variables."""
        out = []
        for i in range(self.num_torsions):
            var = self.variables_of(i)
            if isinstance(self.code, PhaseCode):
                out.append(trig_polys_phase(self.code, var))
            else:
                out.append(trig_polys_onehot(self.d, var))
        return tuple(out)

    def decode_indices(self, assignment: Sequence[float] | np.ndarray) -> tuple[int, ...]:
        self._check_length(assignment)
        return decode_indices(self.code, assignment)

    def decode(self, assignment: Sequence[float] | np.ndarray) -> TorsionAssignment:
        return TorsionAssignment.from_indices(self.decode_indices(assignment), self.d)

    def encode(self, grid_indices: Sequence[int]) -> np.ndarray:
        if len(grid_indices) != self.num_torsions:
            raise ValueError(f"expected {self.num_torsions} grid indices, got {len(grid_indices)}")
        return encode(self.code, grid_indices)

    def random_assignment(self, rng: np.random.Generator) -> np.ndarray:
        """A valid assignment at uniformly random grid indices."""
        return self.encode(rng.integers(0, self.d, size=self.num_torsions).tolist())

    def _check_length(self, assignment: Sequence[float] | np.ndarray) -> None:
        size = np.asarray(assignment).size
        if size != self.num_vars:
            raise ValueError(f"assignment has {size} variables, registry has {self.num_vars}")

    def to_dict(self) -> dict[str, Any]:
        info: dict[str, Any] = {
            "encoding": self.kind.value,
            "num_torsions": self.num_torsions,
            "d": self.d,
            "bits_per_torsion": self.bits_per_torsion,
            "names": [self.name(v) for v in range(self.num_vars)],
        }
        if isinstance(self.code, PhaseCode):
            info["phase_table"] = self.code.source
        return info


def _check_m(M: int) -> int:
    if M < 0:
        raise ValueError(f"number of torsions must be non-negative, got {M}")
    return M


def trig_coefficients(values: np.ndarray) -> np.ndarray:
    """Coefficients over {1, cos, sin}^m from samples on the 3-point grid per axis."""
    out = np.asarray(values, dtype=float)
    for axis in range(out.ndim):
        out = np.moveaxis(np.tensordot(_FOURIER, out, axes=([1], [axis])), 0, axis)
    return out


def _expand(coeffs: np.ndarray, bases: Sequence[tuple[Polynomial, ...]], domain: Domain) -> Polynomial:
    if coeffs.ndim == 0:
        return Polynomial.constant(float(coeffs), domain)
    total = Polynomial(domain)
    for e, basis in enumerate(bases[0]):
        sub = coeffs[e]
        if not np.any(sub):
            continue
        total = total + basis * _expand(sub, bases[1:], domain)
    return total


def pair_polynomial(
    coeffs: np.ndarray,
    torsions: Sequence[int],
    trig: Sequence[TrigPolynomial],
    domain: Domain,
) -> Polynomial:
    """Substitute the per-torsion trig polynomials into a {1, cos, sin} coefficient tensor."""
    coeffs = np.array(coeffs, dtype=float)
    scale = float(np.max(np.abs(coeffs))) if coeffs.size else 0.0
    coeffs[np.abs(coeffs) <= ROUNDOFF_REL * scale] = 0.0
    one = Polynomial.constant(1.0, domain)
    bases = [(one, trig[t].cos_poly, trig[t].sin_poly) for t in torsions]
    return _expand(coeffs, bases, domain)


def _pair_job(args: tuple[np.ndarray, tuple[int, ...], tuple[TrigPolynomial, ...], Domain]) -> Polynomial:
    return pair_polynomial(*args)


def default_penalty_weight(objective: Polynomial) -> float:
    """Twice the largest absolute coefficient, constant included."""
    return 2.0 * max((abs(c) for c in objective.terms.values()), default=1.0)


def build_objective(
    mol: Molecule,
    fd: FragmentDecomposition,
    registry: VariableRegistry,
    *,
    include_hydrogens: bool = True,
    penalty_weight: float | None = None,
    jobs: int = 1,
) -> Polynomial:
    """
    Minimization objective -D(Θ) over the registry's binary variables.

    One-hot objectives carry the sum-to-one penalty; its weight defaults to
    :func:`default_penalty_weight` of the unpenalized objective. ``jobs > 1``
    expands fragment pairs in a process pool and merges them in pair order,
    so the result matches the sequential build exactly.
    """
    if fd.num_torsions == 0:
        raise ValueError("molecule has no rotatable bonds: nothing to optimize")
    if registry.num_torsions != fd.num_torsions:
        raise ValueError(
            f"registry covers {registry.num_torsions} torsions, molecule has {fd.num_torsions}"
        )
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    started = time.perf_counter()
    tables = fragment_pair_tables(mol, fd, FOURIER_GRID, include_hydrogens=include_hydrogens)
    work = [
        (trig_coefficients(pt.values), pt.torsions, registry.trig, registry.domain) for pt in tables
    ]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_pair_job, work))
    else:
        parts = [_pair_job(w) for w in work]
    volume = Polynomial(registry.domain, num_vars=registry.num_vars)
    for part in parts:
        volume = volume + part
    objective = -volume
    if registry.kind is EncodingKind.ONEHOT:
        weight = penalty_weight
        if weight is None:
            assert isinstance(registry.code, OneHotCode)
            weight = registry.code.penalty_weight or default_penalty_weight(objective)
        objective = objective + penalty_polynomial(registry.d, registry.num_torsions, weight)
        logger.debug(f"one-hot penalty weight {weight:.6g}")
    objective = objective.with_num_vars(registry.num_vars)
    logger.info(
        f"{mol.name or 'molecule'}: {registry.kind.value} objective with {len(objective)} terms, "
        f"degree {objective.degree}, {len(tables)} fragment pairs, "
        f"built in {time.perf_counter() - started:.3f}s"
    )
    return objective
