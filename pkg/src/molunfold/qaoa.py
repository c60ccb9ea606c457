"""
Single-layer QAOA on a statevector for diagonal (spin polynomial) costs.

Qubit q carries spin variable q and is bit q of the basis index; bit value
0 is spin +1. The cost layer applies e^{-iγE(z)}, the mixer RX(2β) on every
qubit. ``build_circuit`` emits the same layer as explicit H/CNOT/RZ/RX gates.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from molunfold.polynomial import Domain, Polynomial

logger = logging.getLogger(__name__)

MAX_QUBITS = 24
COEFF_TOL = 1e-12
TWO_PI = 2.0 * math.pi


class QubitLimitError(ValueError):
    """More qubits than the statevector simulator handles."""


def _check_qubits(n: int) -> None:
    if n > MAX_QUBITS:
        raise QubitLimitError(f"{n} qubits exceeds the simulator limit of {MAX_QUBITS}")


def _parity(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    for shift in (16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


def bitstring(z: int, n: int) -> str:
    """Basis index as bits, qubit 0 first."""
    return "".join(str(z >> q & 1) for q in range(n))


@dataclass(frozen=True, eq=False)
class DiagonalHamiltonian:
    n_qubits: int
    energies: np.ndarray
    polynomial: Polynomial | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.energies.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"{self.n_qubits} qubits need {1 << self.n_qubits} energies, got {self.energies.shape}"
            )

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def ground_energy(self) -> float:
        return float(np.min(self.energies))

    @property
    def ground_state(self) -> int:
        return int(np.argmin(self.energies))


def build_diagonal(p: Polynomial, n_qubits: int | None = None) -> DiagonalHamiltonian:
    """Energies of a spin polynomial at every basis state."""
    if p.domain is not Domain.SPIN:
        raise ValueError("QAOA needs a spin polynomial")
    n = max(p.num_vars, n_qubits or 0)
    _check_qubits(n)
    z = np.arange(1 << n, dtype=np.int64)
    energies = np.full(1 << n, p.constant_term)
    for mask, c in p.terms.items():
        if mask:
            energies += c * (1.0 - 2.0 * _parity(z & mask))
    logger.debug(f"diagonal Hamiltonian on {n} qubits from {len(p)} terms")
    return DiagonalHamiltonian(n, energies, p.with_num_vars(n))


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalized transform: out[m] = Σ_z values[z]·(-1)^{popcount(z & m)}."""
    a = np.array(values, dtype=float)
    h = 1
    while h < a.size:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1).reshape(-1)
        h *= 2
    return a


def spin_coefficients(h: DiagonalHamiltonian) -> dict[int, float]:
    """Spin-polynomial coefficients (bitmask → c) reproducing the energies."""
    coeffs = walsh_hadamard(h.energies) / h.dim
    return {int(m): float(c) for m, c in enumerate(coeffs) if abs(c) > COEFF_TOL}


def _rms(values: Sequence[float]) -> float:
    if not values:
        raise ValueError("cannot rescale: no nonconstant coefficients")
    return math.sqrt(sum(v * v for v in values) / len(values))


def rescale(h: DiagonalHamiltonian | Polynomial) -> DiagonalHamiltonian | Polynomial:
    """Divide every coefficient by the RMS of the nonconstant ones."""
    if isinstance(h, Polynomial):
        rms = _rms([c for m, c in h.terms.items() if m])
        return h.scale(1.0 / rms)
    rms = _rms([c for m, c in spin_coefficients(h).items() if m])
    poly = h.polynomial.scale(1.0 / rms) if h.polynomial is not None else None
    return DiagonalHamiltonian(h.n_qubits, h.energies / rms, poly)


class QaoaParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: float
    beta: float
    layers: Literal[1] = 1


@dataclass(eq=False)
class Statevector:
    amplitudes: np.ndarray

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def uniform(cls, n: int) -> Statevector:
        return cls(np.full(1 << n, (1 << n) ** -0.5, dtype=complex))

    @classmethod
    def basis(cls, n: int, z: int = 0) -> Statevector:
        amps = np.zeros(1 << n, dtype=complex)
        amps[z] = 1.0
        return cls(amps)


def _apply_1q(psi: np.ndarray, q: int, u: np.ndarray) -> np.ndarray:
    view = psi.reshape(-1, 2, 1 << q)
    out = np.einsum("ij,bjr->bir", u, view)
    return out.reshape(-1)


def _rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def _mixer(psi: np.ndarray, n: int, beta: float) -> np.ndarray:
    u = _rx(2.0 * beta)
    for q in range(n):
        psi = _apply_1q(psi, q, u)
    return psi


def run_qaoa(h: DiagonalHamiltonian, params: QaoaParams) -> Statevector:
    psi = Statevector.uniform(h.n_qubits).amplitudes
    psi = psi * np.exp(-1j * params.gamma * h.energies)
    return Statevector(_mixer(psi, h.n_qubits, params.beta))


def expectation(h: DiagonalHamiltonian, sv: Statevector) -> float:
    if sv.amplitudes.size != h.dim:
        raise ValueError(f"statevector of size {sv.amplitudes.size} does not match {h.dim} energies")
    return float(sv.probabilities @ h.energies)


def grid_axis(resolution: int) -> np.ndarray:
    if resolution < 2:
        raise ValueError(f"landscape resolution must be >= 2, got {resolution}")
    return np.linspace(0.0, TWO_PI, resolution)


def landscape(h: DiagonalHamiltonian, grid_resolution: int = 32) -> np.ndarray:
    """Expectation on the (γ, β) grid over [0, 2π]²; rows index γ, columns β."""
    axis = grid_axis(grid_resolution)
    out = np.empty((grid_resolution, grid_resolution))
    start = Statevector.uniform(h.n_qubits).amplitudes
    for gi, gamma in enumerate(axis):
        phased = start * np.exp(-1j * gamma * h.energies)
        for bi, beta in enumerate(axis):
            psi = _mixer(phased, h.n_qubits, beta)
            out[gi, bi] = float((np.abs(psi) ** 2) @ h.energies)
    return out


def optimize(
    h: DiagonalHamiltonian,
    start: QaoaParams,
    *,
    initial_step: float = TWO_PI / 32,
    min_step: float = 1e-4,
    max_iterations: int = 2000,
) -> tuple[QaoaParams, list[float]]:
    """Coordinate search with step halving; the trace is nonincreasing."""

    def cost(gamma: float, beta: float) -> float:
        return expectation(h, run_qaoa(h, QaoaParams(gamma=gamma, beta=beta)))

    gamma, beta = start.gamma, start.beta
    best = cost(gamma, beta)
    trace = [best]
    step = initial_step
    while step >= min_step and len(trace) <= max_iterations:
        improved = False
        for dg, db in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            g, b = (gamma + dg) % TWO_PI, (beta + db) % TWO_PI
            value = cost(g, b)
            if value < best:
                gamma, beta, best = g, b, value
                improved = True
        trace.append(best)
        if not improved:
            step /= 2.0
    if best == trace[0]:
        return start, trace
    return QaoaParams(gamma=gamma, beta=beta), trace


def sample(sv: Statevector, shots: int, seed: int | None = None) -> dict[int, int]:
    """Measurement counts per basis index (nonzero counts only)."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    probs = sv.probabilities
    counts = np.random.default_rng(seed).multinomial(shots, probs / probs.sum())
    return {int(z): int(c) for z, c in enumerate(counts) if c}


def basin_fraction(values: np.ndarray, tolerance: float = 0.05) -> float:
    """Share of landscape cells within ``tolerance`` of the range above the minimum."""
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        return 1.0
    return float(np.mean(values <= lo + tolerance * (hi - lo)))


# --- explicit gates ---


class Gate(NamedTuple):
    name: Literal["H", "RX", "RZ", "CNOT"]
    qubits: tuple[int, ...]
    angle: float | None = None

    def to_text(self) -> str:
        parts = [self.name, *(str(q) for q in self.qubits)]
        if self.angle is not None:
            parts.append(format(self.angle, ".12g"))
        return " ".join(parts)


@dataclass(eq=False)
class GateList:
    gates: list[Gate] = field(default_factory=list)
    global_phase: float = 0.0

    def __len__(self) -> int:
        return len(self.gates)

    def count(self, name: str) -> int:
        return sum(1 for g in self.gates if g.name == name)

    def extend(self, other: GateList) -> None:
        self.gates.extend(other.gates)
        self.global_phase += other.global_phase

    def to_text(self) -> str:
        return "\n".join(g.to_text() for g in self.gates) + ("\n" if self.gates else "")


def decompose_term(term: Sequence[int], gamma: float) -> GateList:
    """
    e^{iγ Z_{q0}…Z_{qk}} as a CNOT ladder onto the last qubit, RZ(-2γ), mirrored ladder.

    An empty term is the global phase e^{iγ}.
    """
    qubits = list(term)
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"term {qubits} repeats a qubit")
    if not qubits:
        return GateList(global_phase=gamma)
    ladder = [Gate("CNOT", (qubits[i], qubits[i + 1])) for i in range(len(qubits) - 1)]
    return GateList([*ladder, Gate("RZ", (qubits[-1],), -2.0 * gamma), *reversed(ladder)])


def build_circuit(p: Polynomial, params: QaoaParams, n_qubits: int | None = None) -> GateList:
    """Full single-layer circuit from |0…0⟩: H layer, cost terms, RX(2β) mixers."""
    if p.domain is not Domain.SPIN:
        raise ValueError("QAOA needs a spin polynomial")
    n = max(p.num_vars, n_qubits or 0)
    _check_qubits(n)
    circuit = GateList([Gate("H", (q,)) for q in range(n)])
    for mono, c in p.items():
        circuit.extend(decompose_term(mono, -params.gamma * c))
    circuit.gates.extend(Gate("RX", (q,), 2.0 * params.beta) for q in range(n))
    return circuit


def apply_gates(circuit: GateList, n_qubits: int, state: Statevector | None = None) -> Statevector:
    _check_qubits(n_qubits)
    psi = (state or Statevector.basis(n_qubits)).amplitudes.astype(complex)
    index = np.arange(psi.size)
    for gate in circuit.gates:
        if any(q >= n_qubits for q in gate.qubits):
            raise ValueError(f"gate {gate.to_text()!r} addresses a qubit beyond {n_qubits}")
        if gate.name == "H":
            psi = _apply_1q(psi, gate.qubits[0], _H)
        elif gate.name == "RX":
            psi = _apply_1q(psi, gate.qubits[0], _rx(gate.angle or 0.0))
        elif gate.name == "RZ":
            psi = _apply_1q(psi, gate.qubits[0], _rz(gate.angle or 0.0))
        else:
            control, target = gate.qubits
            psi = psi[index ^ (((index >> control) & 1) << target)]
    return Statevector(psi * np.exp(1j * circuit.global_phase))


class QaoaReport(BaseModel):
    n_qubits: int
    gamma: float
    beta: float
    grid_resolution: int
    expectation_trace: list[float]
    histogram: dict[str, int]
    mode: str
    mode_probability: float
    ground_energy: float
    ground_state: str
    basin_fraction: float
    landscape: list[list[float]] = Field(default_factory=list, exclude=True)

    @property
    def found_ground_state(self) -> bool:
        return self.mode == self.ground_state


def solve_qaoa(
    h: DiagonalHamiltonian,
    grid_resolution: int = 32,
    shots: int = 10000,
    seed: int | None = None,
) -> QaoaReport:
    """Grid scan, refine from the best cell, then sample the optimized state."""
    values = landscape(h, grid_resolution)
    axis = grid_axis(grid_resolution)
    gi, bi = np.unravel_index(int(np.argmin(values)), values.shape)
    params, trace = optimize(h, QaoaParams(gamma=float(axis[gi]), beta=float(axis[bi])))
    counts = sample(run_qaoa(h, params), shots, seed)
    mode = max(counts, key=lambda z: (counts[z], -z))
    n = h.n_qubits
    logger.info(
        f"QAOA on {n} qubits: γ={params.gamma:.4f} β={params.beta:.4f}, "
        f"<E>={trace[-1]:.6g}, mode {bitstring(mode, n)}"
    )
    return QaoaReport(
        n_qubits=n,
        gamma=params.gamma,
        beta=params.beta,
        grid_resolution=grid_resolution,
        expectation_trace=trace,
        histogram={bitstring(z, n): c for z, c in sorted(counts.items())},
        mode=bitstring(mode, n),
        mode_probability=counts[mode] / shots,
        ground_energy=h.ground_energy,
        ground_state=bitstring(h.ground_state, n),
        basin_fraction=basin_fraction(values),
        landscape=values.tolist(),
    )
