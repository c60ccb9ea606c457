"""Tests for run-configuration validation."""

import pytest

from molunfold.config import UnfoldConfig
from molunfold.validation import validate_run_config


def test_default_config_is_valid():
    assert validate_run_config(UnfoldConfig()) == []


@pytest.mark.parametrize(
    "overrides,message",
    [
        ({"encoding": "gray", "solver": "greedy"}, "encoding must be one of phase, onehot"),
        ({"d": 1}, "grid size d must be >= 2"),
        ({"d": 12}, "phase encoding needs d to be a power of 2"),
        ({"solver": "sa"}, "solver 'sa' needs --encoding onehot"),
        ({"encoding": "onehot"}, "solver 'bsb' needs --encoding phase"),
        ({"solver": "tabu"}, "unknown solver 'tabu'"),
        ({"steps": 0}, "steps must be >= 1"),
        ({"dt": 0.0}, "dt must be positive"),
        ({"c0": -1.0}, "c0 must be positive"),
        ({"prune": -0.1}, "prune threshold must be non-negative"),
        ({"grid": 1}, "landscape grid must be >= 2"),
        ({"cooling_factor": 1.0}, "cooling factor must be in (0, 1)"),
        ({"reference": "exact"}, "reference must be one of brute, greedy"),
        ({"windows": (0, 10)}, "windows must be positive step counts"),
    ],
)
def test_single_problem_is_reported(overrides, message):
    errors = validate_run_config(UnfoldConfig(**overrides))
    assert len(errors) == 1
    assert errors[0].startswith(message)


def test_onehot_accepts_any_grid():
    assert validate_run_config(UnfoldConfig(encoding="onehot", solver="sa", d=12)) == []


def test_all_problems_are_collected(tmp_path):
    cfg = UnfoldConfig(steps=0, shots=0, jobs=0)
    errors = validate_run_config(cfg, inputs=[tmp_path / "missing.xyz"], n_qubits=30)
    assert len(errors) == 5
    assert "30 qubits exceeds the simulator limit of 24" in errors
    assert f"input not found: {tmp_path / 'missing.xyz'}" in errors


def test_benchmark_solvers_are_checked_by_name():
    """A benchmark picks encodings per solver, so the pairing check is skipped."""
    cfg = UnfoldConfig(encoding="phase")
    assert validate_run_config(cfg, solvers=["bsb", "sa"]) == []
    assert validate_run_config(cfg, solvers=["bsb", "tabu"]) == ["unknown solver 'tabu'"]
