"""Tests for the solver registry: built-ins, custom solvers, dispatch by name."""

import pytest

from molunfold import get_solver, register_solver
from molunfold.plugins import get_registered_solvers, is_registered, unregister_solver
from molunfold.problem import UnfoldingProblem
from molunfold.solvers import SolveResult
from tests.example_molecules import butane


def all_zero(problem: UnfoldingProblem, *, seed=None, **options) -> SolveResult:
    """Custom solver: keep every torsion at grid index 0."""
    indices = [0] * problem.num_torsions
    volume = problem.volume(indices)
    return SolveResult(
        solver="zero", grid_indices=indices, best_volume=volume, trace=[volume], wall_time=0.0, seed=seed
    )


@pytest.fixture
def zero_solver():
    register_solver("zero", all_zero)
    yield
    unregister_solver("zero")


def test_builtins_are_registered():
    assert get_registered_solvers() == ["brute", "bsb", "greedy", "sa"]


def test_register_and_dispatch(zero_solver):
    assert is_registered("zero")
    problem = UnfoldingProblem.from_molecule(butane(), 4)
    result = get_solver("zero")(problem, seed=4, steps=10)
    assert result.grid_indices == [0]
    assert result.seed == 4


def test_register_refuses_to_shadow(zero_solver):
    with pytest.raises(ValueError, match="already registered"):
        register_solver("zero", all_zero)
    register_solver("zero", all_zero, replace=True)


def test_unregister_is_idempotent():
    unregister_solver("never-registered")
    assert not is_registered("never-registered")


def test_unknown_solver_lists_the_registered_ones():
    with pytest.raises(ValueError, match="registered: brute, bsb, greedy, sa"):
        get_solver("tabu")
