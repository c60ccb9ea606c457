"""
Optimizers for the unfolding objective.

``solve_bsb`` and ``solve_sa`` minimize a HUBO polynomial; ``brute_force`` and
``greedy_geodock`` maximize the molecular volume on the angle grid directly.
Every result reports volumes (the negated objective), so traces are
best-so-far and nondecreasing.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Sequence
from typing import TYPE_CHECKING, Any

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from molunfold.encoding import AngleGrid, EncodingKind
from molunfold.geometry import TorsionAssignment, molecular_volume, volume_table
from molunfold.hubo import VariableRegistry
from molunfold.molgraph import FragmentDecomposition, Molecule
from molunfold.polynomial import Domain, DomainMismatchError, Polynomial

if TYPE_CHECKING:
    from molunfold.problem import UnfoldingProblem

logger = logging.getLogger(__name__)

DEFAULT_CAP = 16**5
C0_SAMPLES = 64
T0_SAMPLES = 100


class CapExceededError(ValueError):
    """Exhaustive search would exceed the configured number of grid points."""


class SolverDivergenceError(RuntimeError):
    """Non-finite solver state."""


class BsbConfig(BaseModel):
    """Ballistic simulated bifurcation parameters. ``c0=None`` calibrates automatically."""

    model_config = ConfigDict(frozen=True)

    a0: float = Field(1.0, gt=0)
    c0: float | None = Field(None, gt=0)
    dt: float = Field(0.5, gt=0)
    steps: int = Field(100, ge=1)

    def ramp(self) -> np.ndarray:
        """a(t) at each step, linear from 0 to a0; a single step runs at a0."""
        if self.steps == 1:
            return np.array([self.a0])
        return np.linspace(0.0, self.a0, self.steps)


class SaConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    initial_acceptance: float = Field(0.8, gt=0, lt=1)
    cooling_factor: float = Field(0.95, gt=0, lt=1)
    steps: int = Field(100, ge=1)
    moves_per_step: int | None = Field(None, ge=1)
    initial_temperature: float | None = Field(None, gt=0)


class SolveResult(BaseModel):
    solver: str
    grid_indices: list[int]
    assignment: list[int] = Field(default_factory=list)
    best_volume: float
    trace: list[float]
    step_times: list[float] = Field(default_factory=list)
    wall_time: float
    seed: int | None = None

    @property
    def steps(self) -> int:
        return len(self.trace)

    def volume_at(self, step: int) -> float:
        """Best-so-far volume after ``step`` steps (1-based, clipped to the run length)."""
        if not self.trace:
            return self.best_volume
        return self.trace[min(max(step, 1), len(self.trace)) - 1]

    def time_at(self, step: int) -> float:
        """Solver wall time spent up to ``step`` steps."""
        if not self.step_times:
            return self.wall_time
        return self.step_times[min(max(step, 1), len(self.step_times)) - 1]


def _readout(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0.0, 1.0, -1.0)


def calibrate_c0(objective: Polynomial, a0: float, rng: np.random.Generator) -> float:
    """a0 divided by the RMS of ‖∇E‖∞ over random points of [-1, 1]^N."""
    compiled = objective.compiled
    norms = np.array(
        [
            np.max(np.abs(compiled.gradient(rng.uniform(-1.0, 1.0, objective.num_vars))))
            for _ in range(C0_SAMPLES)
        ]
    )
    rms = float(np.sqrt(np.mean(norms**2)))
    if rms == 0.0:
        logger.warning("objective gradient vanishes on all samples, using c0 = a0")
        return a0
    return a0 / rms


def solve_bsb(
    objective: Polynomial,
    cfg: BsbConfig | None = None,
    seed: int | None = None,
    *,
    registry: VariableRegistry | None = None,
) -> SolveResult:
    """
    Minimize a spin polynomial with ballistic simulated bifurcation.

    Per step: y += (-(a0 - a(t)) x - c0 ∇E(x)) dt, then x += a0 y dt; any
    |x_i| > 1 is clamped to the wall with y_i = 0. The readout sign(x), ties
    to +1, is evaluated every step and the best one kept.
    """
    if objective.domain is not Domain.SPIN:
        raise DomainMismatchError("bSB needs a spin objective")
    cfg = cfg or BsbConfig()
    rng = np.random.default_rng(seed)
    n = objective.num_vars
    compiled = objective.compiled
    c0 = cfg.c0 if cfg.c0 is not None else calibrate_c0(objective, cfg.a0, rng)
    x = rng.uniform(-0.1, 0.1, n)
    y = rng.uniform(-0.1, 0.1, n)
    ramp = cfg.ramp()

    best_spins = _readout(x)
    best_energy = compiled.value(best_spins)
    trace: list[float] = []
    step_times: list[float] = []
    started = time.perf_counter()
    for step in range(cfg.steps):
        y += (-(cfg.a0 - ramp[step]) * x - c0 * compiled.gradient(x)) * cfg.dt
        x += cfg.a0 * y * cfg.dt
        wall = np.abs(x) > 1.0
        x[wall] = np.sign(x[wall])
        y[wall] = 0.0
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise SolverDivergenceError(
                f"bSB diverged at step {step} with a0={cfg.a0}, c0={c0}, dt={cfg.dt}, steps={cfg.steps}"
            )
        spins = _readout(x)
        energy = compiled.value(spins)
        if energy < best_energy:
            best_energy, best_spins = energy, spins
        trace.append(-best_energy)
        step_times.append(time.perf_counter() - started)
    wall_time = time.perf_counter() - started

    assignment = [int(s) for s in best_spins]
    grid_indices = list(registry.decode_indices(assignment)) if registry is not None else []
    logger.debug(f"bSB seed={seed}: best volume {-best_energy:.6f} after {cfg.steps} steps (c0={c0:.4g})")
    return SolveResult(
        solver="bsb",
        grid_indices=grid_indices,
        assignment=assignment,
        best_volume=-best_energy,
        trace=trace,
        step_times=step_times,
        wall_time=wall_time,
        seed=seed,
    )


MoveListener = Callable[[np.ndarray, float, bool], None]


def _onehot_state(registry: VariableRegistry, indices: np.ndarray) -> np.ndarray:
    state = np.zeros(registry.num_vars)
    state[np.arange(registry.num_torsions) * registry.d + indices] = 1.0
    return state


def _metropolis(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Downhill always; uphill with probability exp(-delta/T), never once T has cooled to 0."""
    if delta <= 0.0:
        return True
    if temperature <= 0.0:
        return False
    return bool(rng.random() < math.exp(-delta / temperature))


def _propose(rng: np.random.Generator, indices: np.ndarray, d: int) -> tuple[int, int]:
    torsion = int(rng.integers(len(indices)))
    shift = int(rng.integers(1, d))
    return torsion, (int(indices[torsion]) + shift) % d


def calibrate_temperature(
    objective: Polynomial,
    registry: VariableRegistry,
    acceptance: float,
    rng: np.random.Generator,
) -> float:
    """T0 such that the mean uphill move from random valid states is accepted with ``acceptance``."""
    compiled = objective.compiled
    uphill: list[float] = []
    for _ in range(T0_SAMPLES):
        indices = rng.integers(0, registry.d, size=registry.num_torsions)
        torsion, new = _propose(rng, indices, registry.d)
        before = compiled.value(_onehot_state(registry, indices))
        indices[torsion] = new
        delta = compiled.value(_onehot_state(registry, indices)) - before
        if delta > 0:
            uphill.append(delta)
    if not uphill:
        logger.warning("no uphill moves while calibrating SA temperature, using T0 = 1.0")
        return 1.0
    return float(np.mean(uphill)) / math.log(1.0 / acceptance)


def solve_sa(
    objective: Polynomial,
    registry: VariableRegistry,
    cfg: SaConfig | None = None,
    seed: int | None = None,
    *,
    on_move: MoveListener | None = None,
) -> SolveResult:
    """
    Simulated annealing over valid one-hot states.

    A move reassigns one torsion's hot index, so the constraint always holds.
    One step is a sweep of ``moves_per_step`` proposals (default M), followed
    by geometric cooling.
    """
    if registry.kind is not EncodingKind.ONEHOT:
        raise ValueError(f"simulated annealing needs a one-hot registry, got {registry.kind.value}")
    if objective.domain is not Domain.BOOLEAN:
        raise DomainMismatchError("simulated annealing needs a boolean objective")
    if registry.num_torsions == 0:
        raise ValueError("simulated annealing needs at least one torsion")
    cfg = cfg or SaConfig()
    rng = np.random.default_rng(seed)
    compiled = objective.compiled
    d = registry.d
    moves = cfg.moves_per_step or registry.num_torsions
    temperature = cfg.initial_temperature or calibrate_temperature(
        objective, registry, cfg.initial_acceptance, rng
    )

    indices = rng.integers(0, d, size=registry.num_torsions)
    state = _onehot_state(registry, indices)
    energy = compiled.value(state)
    best_energy, best_indices = energy, indices.copy()
    trace: list[float] = []
    step_times: list[float] = []
    started = time.perf_counter()
    for _ in range(cfg.steps):
        for _ in range(moves):
            torsion, new = _propose(rng, indices, d)
            old = int(indices[torsion])
            base = torsion * d
            state[base + old], state[base + new] = 0.0, 1.0
            proposed = compiled.value(state)
            delta = proposed - energy
            accepted = _metropolis(delta, temperature, rng)
            if on_move is not None:
                on_move(state.copy(), delta, accepted)
            if accepted:
                indices[torsion] = new
                energy = proposed
                if energy < best_energy:
                    best_energy, best_indices = energy, indices.copy()
            else:
                state[base + old], state[base + new] = 1.0, 0.0
        temperature *= cfg.cooling_factor
        trace.append(-best_energy)
        step_times.append(time.perf_counter() - started)
    wall_time = time.perf_counter() - started

    grid_indices = [int(k) for k in best_indices]
    logger.debug(f"SA seed={seed}: best volume {-best_energy:.6f} after {cfg.steps} sweeps")
    return SolveResult(
        solver="sa",
        grid_indices=grid_indices,
        assignment=[int(b) for b in registry.encode(grid_indices)],
        best_volume=-best_energy,
        trace=trace,
        step_times=step_times,
        wall_time=wall_time,
        seed=seed,
    )


def brute_force(
    mol: Molecule,
    fd: FragmentDecomposition,
    grid: AngleGrid,
    *,
    include_hydrogens: bool = True,
    cap: int = DEFAULT_CAP,
    table: np.ndarray | None = None,
) -> SolveResult:
    """Exact grid maximizer; ties go to the lowest mixed-radix index (torsion 0 most significant)."""
    size = grid.d**fd.num_torsions
    if size > cap:
        raise CapExceededError(
            f"{grid.d}^{fd.num_torsions} = {size} grid points exceeds the brute-force cap {cap}"
        )
    started = time.perf_counter()
    if table is None:
        table = volume_table(mol, fd, grid.values, include_hydrogens=include_hydrogens)
    flat = int(np.argmax(table))
    indices = [int(k) for k in np.unravel_index(flat, table.shape)]
    best = float(table.reshape(-1)[flat])
    wall_time = time.perf_counter() - started
    return SolveResult(
        solver="brute",
        grid_indices=indices,
        best_volume=best,
        trace=[best],
        step_times=[wall_time],
        wall_time=wall_time,
    )


def torsion_order(mol: Molecule, fd: FragmentDecomposition) -> list[int]:
    """Torsions by descending edge betweenness centrality of their bond, ties by index."""
    centrality = nx.edge_betweenness_centrality(mol.graph)

    def score(t: int) -> float:
        bond = mol.bonds[fd.rotatable[t].bond_index]
        value = centrality.get((bond.a, bond.b), centrality.get((bond.b, bond.a), 0.0))
        return round(value, 12)

    return sorted(range(fd.num_torsions), key=lambda t: (-score(t), t))


def greedy_geodock(
    mol: Molecule,
    fd: FragmentDecomposition,
    grid: AngleGrid,
    rounds: int = 5,
    *,
    include_hydrogens: bool = True,
) -> SolveResult:
    """
    Coordinate ascent over torsions in centrality order.

    Starts from all torsions at grid index 0; each pass sets every torsion to
    its best grid value with the others held fixed. A torsion only moves on a
    strict improvement. ``trace`` holds the volume after each round.
    """
    if fd.num_torsions == 0:
        raise ValueError("greedy search needs at least one rotatable bond")
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    order = torsion_order(mol, fd)
    indices = [0] * fd.num_torsions

    def volume(ix: Sequence[int]) -> float:
        return molecular_volume(
            mol, fd, TorsionAssignment.from_indices(ix, grid.d), include_hydrogens=include_hydrogens
        )

    current = volume(indices)
    trace: list[float] = []
    step_times: list[float] = []
    started = time.perf_counter()
    for _ in range(rounds):
        for t in order:
            for k in range(grid.d):
                if k == indices[t]:
                    continue
                trial = list(indices)
                trial[t] = k
                value = volume(trial)
                if value > current:
                    current, indices = value, trial
        trace.append(current)
        step_times.append(time.perf_counter() - started)
    wall_time = time.perf_counter() - started
    return SolveResult(
        solver="greedy",
        grid_indices=indices,
        best_volume=current,
        trace=trace,
        step_times=step_times,
        wall_time=wall_time,
    )


# --- registry adapters: (problem, seed, **options) -> SolveResult ---


def run_bsb(
    problem: UnfoldingProblem,
    *,
    seed: int | None = None,
    steps: int = 100,
    dt: float = 0.5,
    a0: float = 1.0,
    c0: float | None = None,
    printed_table: bool = False,
    jobs: int = 1,
    **_: Any,
) -> SolveResult:
    registry = problem.registry(EncodingKind.PHASE, printed_table=printed_table)
    objective = problem.objective(registry, jobs=jobs)
    cfg = BsbConfig(a0=a0, c0=c0, dt=dt, steps=steps)
    return solve_bsb(objective, cfg, seed, registry=registry)


def run_sa(
    problem: UnfoldingProblem,
    *,
    seed: int | None = None,
    steps: int = 100,
    cooling_factor: float = 0.95,
    moves_per_step: int | None = None,
    jobs: int = 1,
    **_: Any,
) -> SolveResult:
    registry = problem.registry(EncodingKind.ONEHOT)
    objective = problem.objective(registry, jobs=jobs)
    cfg = SaConfig(cooling_factor=cooling_factor, steps=steps, moves_per_step=moves_per_step)
    return solve_sa(objective, registry, cfg, seed)


def run_brute(
    problem: UnfoldingProblem, *, seed: int | None = None, cap: int = DEFAULT_CAP, **_: Any
) -> SolveResult:
    size = problem.d**problem.num_torsions
    if size > cap:
        raise CapExceededError(
            f"{problem.d}^{problem.num_torsions} = {size} grid points exceeds the brute-force cap {cap}"
        )
    return brute_force(
        problem.molecule,
        problem.decomposition,
        problem.grid,
        include_hydrogens=problem.include_hydrogens,
        cap=cap,
        table=problem.volumes,
    )


def run_greedy(
    problem: UnfoldingProblem, *, seed: int | None = None, rounds: int = 5, **_: Any
) -> SolveResult:
    return greedy_geodock(
        problem.molecule,
        problem.decomposition,
        problem.grid,
        rounds,
        include_hydrogens=problem.include_hydrogens,
    )
