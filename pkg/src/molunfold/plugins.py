"""
Solver registry.

A solver is any callable taking an UnfoldingProblem plus keyword options and
returning a SolveResult. The CLI and the benchmark dispatch by name, so a
registered solver is immediately usable from both.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Protocol

from molunfold import solvers

if TYPE_CHECKING:
    from molunfold.problem import UnfoldingProblem
    from molunfold.solvers import SolveResult


class SolverProtocol(Protocol):
    """Protocol for registered solvers.

    Options a solver does not understand must be ignored, since callers pass
    one shared option set (steps, dt, a0, c0, cooling_factor, rounds, ...).
    """

    def __call__(
        self, problem: UnfoldingProblem, *, seed: int | None = None, **options: Any
    ) -> SolveResult:
        """Solve ``problem``; ``seed`` fixes every random choice."""
        ...


_REGISTRY: dict[str, SolverProtocol] = {
    "bsb": solvers.run_bsb,
    "sa": solvers.run_sa,
    "brute": solvers.run_brute,
    "greedy": solvers.run_greedy,
}


def register_solver(name: str, solver: SolverProtocol, *, replace: bool = False) -> None:
    """Register ``solver`` under ``name``. Refuses to shadow an existing name unless ``replace``."""
    if name in _REGISTRY and not replace:
        raise ValueError(f"solver {name!r} is already registered")
    _REGISTRY[name] = solver


def unregister_solver(name: str) -> None:
    _REGISTRY.pop(name, None)


def get_solver(name: str) -> SolverProtocol:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown solver {name!r}; registered: {', '.join(sorted(_REGISTRY))}"
        ) from None


def get_registered_solvers() -> list[str]:
    return sorted(_REGISTRY)


def is_registered(name: str) -> bool:
    return name in _REGISTRY
