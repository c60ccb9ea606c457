"""
molunfold --- molecular unfolding as higher-order binary optimization.

Discretize the torsions of a molecule, encode the molecular volume as a
polynomial over binary variables and maximize it with ballistic simulated
bifurcation, simulated annealing, exhaustive search or a greedy sweep.
"""

from molunfold.encoding import AngleGrid, EncodingKind, PhaseCode, build_phase_code
from molunfold.geometry import (
    Conformation,
    TorsionAssignment,
    molecular_volume,
    realize_conformation,
    rmsd,
)
from molunfold.hubo import VariableRegistry, build_objective
from molunfold.molgraph import (
    Molecule,
    MoleculeParseError,
    load_molecule,
    prepare,
)
from molunfold.plugins import SolverProtocol, get_solver, register_solver
from molunfold.polynomial import Domain, Polynomial, prune_threshold
from molunfold.problem import UnfoldingProblem
from molunfold.solvers import SolveResult

__all__ = [
    "AngleGrid",
    "build_objective",
    "build_phase_code",
    "Conformation",
    "Domain",
    "EncodingKind",
    "get_solver",
    "load_molecule",
    "molecular_volume",
    "Molecule",
    "MoleculeParseError",
    "PhaseCode",
    "Polynomial",
    "prepare",
    "prune_threshold",
    "realize_conformation",
    "register_solver",
    "rmsd",
    "SolveResult",
    "SolverProtocol",
    "TorsionAssignment",
    "UnfoldingProblem",
    "VariableRegistry",
]
