"""
Validation of run configurations before any work starts.

Problems are collected as readable strings so the CLI can report them all at
once and exit without writing output.
"""

from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path

from molunfold.config import UnfoldConfig
from molunfold.encoding import is_power_of_two
from molunfold.plugins import is_registered
from molunfold.qaoa import MAX_QUBITS

ENCODINGS = ("phase", "onehot")
REFERENCES = ("brute", "greedy")


def validate_run_config(
    cfg: UnfoldConfig,
    *,
    inputs: Iterable[str | Path] = (),
    n_qubits: int | None = None,
    solvers: Iterable[str] | None = None,
) -> list[str]:
    """Return a list of error messages; an empty list means the config is usable."""
    errors: list[str] = []
    if cfg.encoding not in ENCODINGS:
        errors.append(f"encoding must be one of {', '.join(ENCODINGS)}, got {cfg.encoding!r}")
    if cfg.d < 2:
        errors.append(f"grid size d must be >= 2, got {cfg.d}")
    elif cfg.encoding == "phase" and not is_power_of_two(cfg.d):
        errors.append(f"phase encoding needs d to be a power of 2, got {cfg.d}")
    if solvers is not None:
        # benchmark runs pick each solver's encoding themselves
        errors.extend(f"unknown solver {name!r}" for name in solvers if not is_registered(name))
    elif not is_registered(cfg.solver):
        errors.append(f"unknown solver {cfg.solver!r}")
    elif cfg.solver == "sa" and cfg.encoding != "onehot":
        errors.append("solver 'sa' needs --encoding onehot")
    elif cfg.solver == "bsb" and cfg.encoding != "phase":
        errors.append("solver 'bsb' needs --encoding phase")
    if cfg.steps < 1:
        errors.append(f"steps must be >= 1, got {cfg.steps}")
    if cfg.dt <= 0:
        errors.append(f"dt must be positive, got {cfg.dt}")
    if cfg.a0 <= 0:
        errors.append(f"a0 must be positive, got {cfg.a0}")
    if cfg.c0 is not None and cfg.c0 <= 0:
        errors.append(f"c0 must be positive, got {cfg.c0}")
    if cfg.samples < 1:
        errors.append(f"samples must be >= 1, got {cfg.samples}")
    if cfg.prune < 0:
        errors.append(f"prune threshold must be non-negative, got {cfg.prune}")
    if cfg.grid < 2:
        errors.append(f"landscape grid must be >= 2, got {cfg.grid}")
    if cfg.jobs < 1:
        errors.append(f"jobs must be >= 1, got {cfg.jobs}")
    if cfg.shots < 1:
        errors.append(f"shots must be >= 1, got {cfg.shots}")
    if not 0 < cfg.cooling_factor < 1:
        errors.append(f"cooling factor must be in (0, 1), got {cfg.cooling_factor}")
    if cfg.rounds < 1:
        errors.append(f"rounds must be >= 1, got {cfg.rounds}")
    if cfg.reference not in REFERENCES:
        errors.append(f"reference must be one of {', '.join(REFERENCES)}, got {cfg.reference!r}")
    if not cfg.windows or min(cfg.windows) < 1:
        errors.append(f"windows must be positive step counts, got {list(cfg.windows)}")
    if n_qubits is not None and n_qubits > MAX_QUBITS:
        errors.append(f"{n_qubits} qubits exceeds the simulator limit of {MAX_QUBITS}")
    for path in inputs:
        if not Path(path).exists():
            errors.append(f"input not found: {path}")
    return errors
