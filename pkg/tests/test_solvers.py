"""Tests for bSB, simulated annealing, brute force and the greedy baseline."""

import itertools

import numpy as np
import pytest
from pydantic import ValidationError

from molunfold.encoding import AngleGrid
from molunfold.molgraph import prepare
from molunfold.polynomial import Domain, DomainMismatchError, Polynomial
from molunfold.problem import UnfoldingProblem
from molunfold.solvers import (
    BsbConfig,
    CapExceededError,
    SaConfig,
    SolveResult,
    SolverDivergenceError,
    brute_force,
    calibrate_c0,
    greedy_geodock,
    run_brute,
    run_bsb,
    run_greedy,
    run_sa,
    solve_bsb,
    solve_sa,
    torsion_order,
)
from tests.example_molecules import butane, hexane, pentane


def is_nondecreasing(trace):
    return all(a <= b for a, b in zip(trace, trace[1:]))


class TestConfigs:
    def test_bsb_defaults_and_ramp(self):
        cfg = BsbConfig(a0=2.0, steps=5)
        assert cfg.c0 is None
        np.testing.assert_allclose(cfg.ramp(), [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_single_step_ramp_ends_at_a0(self):
        np.testing.assert_allclose(BsbConfig(a0=2.0, steps=1).ramp(), [2.0])

    @pytest.mark.parametrize("field", [{"a0": 0.0}, {"c0": -1.0}, {"dt": 0.0}, {"steps": 0}])
    def test_bsb_rejects_non_positive_values(self, field):
        with pytest.raises(ValidationError):
            BsbConfig(**field)

    def test_bsb_config_is_frozen(self):
        cfg = BsbConfig()
        with pytest.raises(ValidationError):
            cfg.steps = 10

    def test_sa_cooling_factor_range(self):
        with pytest.raises(ValidationError):
            SaConfig(cooling_factor=1.0)
        assert SaConfig(cooling_factor=0.5).cooling_factor == 0.5


class TestSolveResult:
    def test_lookups_clip_to_the_run(self):
        result = SolveResult(
            solver="x",
            grid_indices=[0],
            best_volume=3.0,
            trace=[1.0, 2.0, 3.0],
            step_times=[0.1, 0.2, 0.3],
            wall_time=0.3,
        )
        assert result.steps == 3
        assert result.volume_at(2) == 2.0
        assert result.volume_at(10) == 3.0
        assert result.volume_at(0) == 1.0
        assert result.time_at(1) == 0.1

    def test_empty_trace_falls_back_to_totals(self):
        result = SolveResult(solver="x", grid_indices=[], best_volume=1.5, trace=[], wall_time=2.0)
        assert result.volume_at(5) == 1.5
        assert result.time_at(5) == 2.0


class TestCalibrateC0:
    def test_linear_objective(self):
        p = Polynomial.from_terms([((0,), 1.0), ((1,), 2.0)])
        assert calibrate_c0(p, 1.0, np.random.default_rng(0)) == pytest.approx(0.5)

    def test_constant_objective_falls_back_to_a0(self, caplog):
        assert calibrate_c0(Polynomial.constant(3.0, num_vars=2), 0.7, np.random.default_rng(0)) == 0.7
        assert "gradient vanishes" in caplog.text


class TestBsb:
    def test_single_step_finds_the_toy_optimum(self):
        p = Polynomial.from_terms([((0,), 1.0), ((1,), 1.0)])
        result = solve_bsb(p, BsbConfig(steps=1), seed=3)
        assert result.assignment == [-1, -1]
        assert result.best_volume == 2.0
        assert result.trace == [2.0]

    def test_same_seed_same_run(self, pentane_problem):
        reg = pentane_problem.registry("phase")
        objective = pentane_problem.objective(reg)
        a = solve_bsb(objective, BsbConfig(steps=30), seed=11, registry=reg)
        b = solve_bsb(objective, BsbConfig(steps=30), seed=11, registry=reg)
        assert a.trace == b.trace
        assert a.grid_indices == b.grid_indices

    def test_result_is_a_real_conformer(self, pentane_problem):
        reg = pentane_problem.registry("phase")
        result = solve_bsb(pentane_problem.objective(reg), BsbConfig(steps=40), seed=0, registry=reg)
        assert len(result.trace) == 40
        assert len(result.step_times) == 40
        assert is_nondecreasing(result.trace)
        assert result.best_volume == pytest.approx(pentane_problem.volume(result.grid_indices), rel=1e-8)
        assert result.best_volume <= float(pentane_problem.volumes.max()) * (1 + 1e-9)

    def test_needs_spin_objective(self):
        with pytest.raises(DomainMismatchError):
            solve_bsb(Polynomial.variable(0, Domain.BOOLEAN))

    def test_divergence_is_reported(self):
        p = Polynomial.variable(0, coeff=float("inf"))
        with np.errstate(all="ignore"), pytest.raises(SolverDivergenceError, match="diverged at step 0"):
            solve_bsb(p, BsbConfig(steps=3), seed=0)


class TestSa:
    def test_stays_on_valid_states(self, butane_problem):
        reg = butane_problem.registry("onehot")
        moves = []
        result = solve_sa(
            butane_problem.objective(reg),
            reg,
            SaConfig(steps=20),
            seed=5,
            on_move=lambda state, delta, accepted: moves.append(state),
        )
        assert len(moves) == 20
        assert all(state.sum() == 1.0 for state in moves)
        assert sum(result.assignment) == 1
        assert is_nondecreasing(result.trace)
        assert result.best_volume == pytest.approx(butane_problem.volume(result.grid_indices), rel=1e-8)

    def test_same_seed_same_run(self, pentane_problem):
        reg = pentane_problem.registry("onehot")
        objective = pentane_problem.objective(reg)
        a = solve_sa(objective, reg, SaConfig(steps=15), seed=2)
        b = solve_sa(objective, reg, SaConfig(steps=15), seed=2)
        assert a.trace == b.trace
        assert a.grid_indices == b.grid_indices

    def test_explicit_moves_per_step(self, pentane_problem):
        reg = pentane_problem.registry("onehot")
        count = []
        solve_sa(
            pentane_problem.objective(reg),
            reg,
            SaConfig(steps=3, moves_per_step=7, initial_temperature=1.0),
            seed=0,
            on_move=lambda *args: count.append(1),
        )
        assert len(count) == 21

    def test_downhill_moves_are_always_accepted(self):
        problem = UnfoldingProblem.from_molecule(pentane(), 16)
        reg = problem.registry("onehot")
        moves = []
        solve_sa(
            problem.objective(reg),
            reg,
            SaConfig(steps=20, moves_per_step=8, initial_temperature=1e3, cooling_factor=0.5),
            seed=4,
            on_move=lambda state, delta, accepted: moves.append((delta, accepted)),
        )
        downhill = [accepted for delta, accepted in moves if delta <= 0.0]
        assert downhill
        assert all(downhill)

    def test_frozen_schedule_only_descends(self):
        problem = UnfoldingProblem.from_molecule(pentane(), 16)
        reg = problem.registry("onehot")
        moves = []
        result = solve_sa(
            problem.objective(reg),
            reg,
            SaConfig(cooling_factor=1e-200, steps=10),
            seed=0,
            on_move=lambda state, delta, accepted: moves.append((delta, accepted)),
        )
        assert len(moves) == 20
        after_first_step = moves[reg.num_torsions :]
        assert not any(accepted and delta > 0.0 for delta, accepted in after_first_step)
        assert result.best_volume == pytest.approx(problem.volume(result.grid_indices), rel=1e-8)

    def test_needs_onehot_registry(self, butane_problem):
        reg = butane_problem.registry("phase")
        with pytest.raises(ValueError, match="one-hot registry"):
            solve_sa(butane_problem.objective(reg), reg)


class TestBruteForce:
    def test_matches_exhaustive_maximum(self, pentane_problem):
        result = run_brute(pentane_problem)
        volumes = {k: pentane_problem.volume(k) for k in itertools.product(range(4), repeat=2)}
        assert result.best_volume == pytest.approx(max(volumes.values()), rel=1e-9)
        assert result.trace == [result.best_volume]

    def test_ties_go_to_the_lowest_index(self):
        mol = pentane()
        table = np.array([[0.0, 5.0], [5.0, 1.0]])
        result = brute_force(mol, prepare(mol), AngleGrid(2), table=table)
        assert result.grid_indices == [0, 1]
        assert result.best_volume == 5.0

    def test_cap(self):
        mol = pentane()
        with pytest.raises(CapExceededError, match="exceeds the brute-force cap 15"):
            brute_force(mol, prepare(mol), AngleGrid(4), cap=15)


class TestGreedy:
    def test_torsions_ordered_by_centrality(self):
        mol = hexane()
        assert torsion_order(mol, prepare(mol)) == [1, 0, 2]

    def test_single_torsion_is_solved_exactly(self, butane_problem):
        greedy = run_greedy(butane_problem, rounds=1)
        assert greedy.best_volume == pytest.approx(run_brute(butane_problem).best_volume, rel=1e-12)

    def test_never_beats_brute_force(self, pentane_problem):
        greedy = run_greedy(pentane_problem, rounds=3)
        assert len(greedy.trace) == 3
        assert is_nondecreasing(greedy.trace)
        assert greedy.best_volume <= run_brute(pentane_problem).best_volume * (1 + 1e-12)

    def test_rounds_must_be_positive(self):
        mol = butane()
        with pytest.raises(ValueError, match="rounds"):
            greedy_geodock(mol, prepare(mol), AngleGrid(4), rounds=0)


class TestAdapters:
    def test_unknown_options_are_ignored(self, butane_problem):
        result = run_bsb(butane_problem, seed=1, steps=5, rounds=9, cooling_factor=0.5)
        assert result.solver == "bsb"
        assert result.steps == 5
        assert result.seed == 1

    def test_sa_adapter(self, butane_problem):
        result = run_sa(butane_problem, seed=1, steps=5, dt=0.1)
        assert result.solver == "sa"
        assert len(result.grid_indices) == 1
