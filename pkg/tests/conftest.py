"""Pytest fixtures for molunfold tests.

Molecules come from tests.example_molecules; most tests build what they need
directly and only share the prepared problems below.
"""

import pytest

from molunfold.problem import UnfoldingProblem
from tests.example_molecules import butane, pentane


@pytest.fixture
def butane_problem() -> UnfoldingProblem:
    return UnfoldingProblem.from_molecule(butane(), 4)


@pytest.fixture
def pentane_problem() -> UnfoldingProblem:
    return UnfoldingProblem.from_molecule(pentane(), 4)
