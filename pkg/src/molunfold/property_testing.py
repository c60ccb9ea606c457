"""
Property-based testing helpers for molunfold.

Hypothesis strategies for polynomials, spin assignments, torsion angles and
small chain molecules with non-degenerate 3D geometry.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from molunfold.geometry import TWO_PI, RotationSpec, TorsionAssignment
from molunfold.molgraph import Atom, Bond, Molecule
from molunfold.polynomial import Domain, Polynomial

try:
    from hypothesis import strategies as st
except ImportError as e:
    raise ImportError(
        "Property-based testing requires hypothesis. Install with: pip install molunfold[dev]"
    ) from e

BOND_LENGTH = 1.54
BOND_ANGLE = math.radians(111.0)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def chain_molecule(
    dihedrals: Sequence[float],
    *,
    element: str = "C",
    bond_length: float = BOND_LENGTH,
    bond_angle: float = BOND_ANGLE,
    name: str = "chain",
) -> Molecule:
    """
    Unbranched chain of ``len(dihedrals) + 3`` atoms placed atom by atom.

    Each dihedral sets the torsion of the next atom about the preceding bond,
    so the chain has ``len(dihedrals)`` rotatable bonds.
    """
    pos = [
        np.zeros(3),
        np.array([bond_length, 0.0, 0.0]),
    ]
    pos.append(
        pos[1] + bond_length * np.array([-math.cos(bond_angle), math.sin(bond_angle), 0.0])
    )
    for tau in dihedrals:
        a, b, c = pos[-3], pos[-2], pos[-1]
        bc = _unit(c - b)
        n = _unit(np.cross(b - a, bc))
        m = np.cross(n, bc)
        local = bond_length * np.array(
            [-math.cos(bond_angle), math.sin(bond_angle) * math.cos(tau), math.sin(bond_angle) * math.sin(tau)]
        )
        pos.append(c + local[0] * bc + local[1] * m + local[2] * n)
    atoms = tuple(Atom(element, (float(p[0]), float(p[1]), float(p[2]))) for p in pos)
    bonds = tuple(Bond(i, i + 1) for i in range(len(atoms) - 1))
    return Molecule(atoms=atoms, bonds=bonds, name=name)


def angles(min_size: int = 1, max_size: int = 4) -> st.SearchStrategy[list[float]]:
    return st.lists(
        st.floats(min_value=0.0, max_value=TWO_PI, exclude_max=True, allow_nan=False),
        min_size=min_size,
        max_size=max_size,
    )


def torsion_assignments(num_torsions: int) -> st.SearchStrategy[TorsionAssignment]:
    return angles(num_torsions, num_torsions).map(lambda a: TorsionAssignment(tuple(a)))


def chain_molecules(min_torsions: int = 1, max_torsions: int = 3) -> st.SearchStrategy[Molecule]:
    """Chains whose dihedrals stay at least 20° away from the eclipsed position."""
    dihedral = st.floats(min_value=math.radians(20), max_value=math.radians(340), allow_nan=False)
    return st.lists(dihedral, min_size=min_torsions, max_size=max_torsions).map(chain_molecule)


def rotation_specs() -> st.SearchStrategy[RotationSpec]:
    coord = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
    vector = st.tuples(coord, coord, coord).map(np.array)
    axis = vector.filter(lambda v: float(np.linalg.norm(v)) > 1e-3).map(
        lambda v: v / np.linalg.norm(v)
    )
    return st.builds(
        RotationSpec,
        axis=axis,
        pivot=vector,
        angle=st.floats(min_value=-TWO_PI, max_value=TWO_PI, allow_nan=False),
    )


def polynomials(
    domain: Domain = Domain.SPIN,
    max_vars: int = 4,
    max_terms: int = 6,
) -> st.SearchStrategy[Polynomial]:
    """Random multilinear polynomials over ``max_vars`` variables with small coefficients."""
    monomial = st.sets(st.integers(min_value=0, max_value=max_vars - 1), max_size=max_vars)
    coeff = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
    return st.lists(st.tuples(monomial, coeff), max_size=max_terms).map(
        lambda terms: Polynomial.from_terms(terms, domain, num_vars=max_vars)
    )


def assignments(num_vars: int, domain: Domain = Domain.SPIN) -> st.SearchStrategy[list[int]]:
    return st.lists(st.sampled_from(domain.values), min_size=num_vars, max_size=num_vars)
