"""One molecule prepared for unfolding: decomposition, grid, cached objectives."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

from molunfold.encoding import AngleGrid, EncodingKind
from molunfold.geometry import (
    Conformation,
    TorsionAssignment,
    molecular_volume,
    realize_conformation,
    volume_table,
)
from molunfold.hubo import VariableRegistry, build_objective
from molunfold.molgraph import (
    FragmentDecomposition,
    Molecule,
    load_molecule,
    prepare,
    selected_atoms,
)
from molunfold.polynomial import Polynomial, prune_threshold

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class UnfoldingProblem:
    molecule: Molecule
    decomposition: FragmentDecomposition
    d: int = 16
    include_hydrogens: bool = True
    _objectives: dict[tuple[Any, ...], Polynomial] = field(default_factory=dict, repr=False)

    @classmethod
    def from_molecule(cls, mol: Molecule, d: int = 16, *, include_hydrogens: bool = True) -> UnfoldingProblem:
        problem = cls(mol, prepare(mol), d, include_hydrogens)
        logger.info(
            f"{mol.name or 'molecule'}: {mol.num_atoms} atoms, {problem.num_torsions} rotatable bonds, "
            f"{problem.decomposition.fragment_count} fragments"
        )
        return problem

    @classmethod
    def load(cls, path: str | Path, d: int = 16, *, include_hydrogens: bool = True) -> UnfoldingProblem:
        return cls.from_molecule(load_molecule(path), d, include_hydrogens=include_hydrogens)

    @property
    def name(self) -> str:
        return self.molecule.name or "molecule"

    @property
    def num_torsions(self) -> int:
        return self.decomposition.num_torsions

    @cached_property
    def grid(self) -> AngleGrid:
        return AngleGrid(self.d)

    @property
    def atoms(self) -> list[int]:
        return selected_atoms(self.molecule, self.include_hydrogens)

    def registry(self, kind: EncodingKind | str, *, printed_table: bool = False) -> VariableRegistry:
        kind = EncodingKind(kind)
        if kind is EncodingKind.PHASE:
            return VariableRegistry.phase(self.num_torsions, self.d, printed_table=printed_table)
        return VariableRegistry.onehot(self.num_torsions, self.d)

    def objective(
        self,
        registry: VariableRegistry,
        *,
        prune: float = 0.0,
        penalty_weight: float | None = None,
        jobs: int = 1,
    ) -> Polynomial:
        """Objective for ``registry``, built once per encoding and optionally pruned."""
        key = (registry.kind, registry.code, penalty_weight)
        if key not in self._objectives:
            self._objectives[key] = build_objective(
                self.molecule,
                self.decomposition,
                registry,
                include_hydrogens=self.include_hydrogens,
                penalty_weight=penalty_weight,
                jobs=jobs,
            )
        poly = self._objectives[key]
        return prune_threshold(poly, prune) if prune > 0 else poly

    def angles(self, grid_indices: Sequence[int]) -> TorsionAssignment:
        return TorsionAssignment.from_indices(grid_indices, self.d)

    def volume(self, grid_indices: Sequence[int]) -> float:
        return molecular_volume(
            self.molecule,
            self.decomposition,
            self.angles(grid_indices),
            include_hydrogens=self.include_hydrogens,
        )

    @cached_property
    def volumes(self) -> np.ndarray:
        """Volume for every grid assignment, shape (d,) * M."""
        return volume_table(
            self.molecule, self.decomposition, self.grid.values, include_hydrogens=self.include_hydrogens
        )

    def conformation(self, grid_indices: Sequence[int]) -> Conformation:
        return realize_conformation(self.molecule, self.decomposition, self.angles(grid_indices))

    def unfolded(self, grid_indices: Sequence[int]) -> Molecule:
        """The molecule with coordinates of the given grid conformer."""
        return self.molecule.with_positions(self.conformation(grid_indices).positions)
