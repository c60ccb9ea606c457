"""
Rigid rotations about bonds, squared distances and the molecular volume.

The volume of a conformation is the sum of squared distances over unordered
atom pairs that sit in different rigid fragments. Rotations follow the
Rodrigues form R = I + sin(θ)K + (1 - cos(θ))K² about an axis pointing from
a bond's static end to its mobile end, pivoting on the static end.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from molunfold.molgraph import (
    FragmentDecomposition,
    Molecule,
    RotatableBond,
    selected_atoms,
    torsion_path,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
AXIS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RotationSpec:
    axis: np.ndarray
    pivot: np.ndarray
    angle: float


@dataclass(frozen=True, eq=False)
class Conformation:
    positions: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.positions, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"positions must have shape (N, 3), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", arr)

    @property
    def num_atoms(self) -> int:
        return int(self.positions.shape[0])


@dataclass(frozen=True)
class TorsionAssignment:
    """Torsion angles θ_1..θ_M in radians, each in [0, 2π)."""

    angles: tuple[float, ...]

    def __post_init__(self) -> None:
        for a in self.angles:
            if not (0.0 <= a < TWO_PI):
                raise ValueError(f"torsion angle {a} outside [0, 2π)")

    @classmethod
    def from_indices(cls, indices: Sequence[int], d: int) -> TorsionAssignment:
        return cls(tuple(TWO_PI * (int(k) % d) / d for k in indices))


AngleLike = TorsionAssignment | Sequence[float] | np.ndarray


def _angles(theta: AngleLike, expected: int) -> np.ndarray:
    values = theta.angles if isinstance(theta, TorsionAssignment) else theta
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size != expected:
        raise ValueError(f"expected {expected} torsion angles, got {arr.size}")
    return arr


def skew(axis: np.ndarray) -> np.ndarray:
    kx, ky, kz = axis
    return np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])


def rodrigues_matrix(spec: RotationSpec) -> np.ndarray:
    """Rotation matrix for ``spec``; the axis must be a unit vector."""
    k = np.asarray(spec.axis, dtype=float)
    norm = float(np.linalg.norm(k))
    if abs(norm - 1.0) > AXIS_TOL:
        raise ValueError(f"rotation axis must be a unit vector, |k| = {norm!r}")
    K = skew(k)
    return np.eye(3) + math.sin(spec.angle) * K + (1.0 - math.cos(spec.angle)) * (K @ K)


def apply_rotation(p: np.ndarray, spec: RotationSpec) -> np.ndarray:
    pivot = np.asarray(spec.pivot, dtype=float)
    return rodrigues_matrix(spec) @ (np.asarray(p, dtype=float) - pivot) + pivot


def compose_chain(p: np.ndarray, specs: Sequence[RotationSpec]) -> np.ndarray:
    """Apply ``specs`` in order (first spec first)."""
    out = np.asarray(p, dtype=float)
    for spec in specs:
        out = apply_rotation(out, spec)
    return out


def bond_axis(mol: Molecule, rb: RotatableBond) -> tuple[np.ndarray, np.ndarray]:
    """(unit axis static→mobile, pivot) of a rotatable bond."""
    pos = mol.positions
    pivot = pos[rb.static_end]
    vec = pos[rb.mobile_end] - pivot
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValueError(f"rotatable bond {rb.bond_index} has coincident endpoints")
    return vec / norm, pivot.copy()


def rotation_spec(mol: Molecule, rb: RotatableBond, angle: float) -> RotationSpec:
    axis, pivot = bond_axis(mol, rb)
    return RotationSpec(axis=axis, pivot=pivot, angle=angle)


def _chain_transform(
    mol: Molecule,
    fd: FragmentDecomposition,
    torsions: Sequence[int],
    directions: Sequence[int],
    angles: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Affine map x -> A x + b of the rotation chain, first torsion applied first."""
    A = np.eye(3)
    b = np.zeros(3)
    for t, sign in zip(torsions, directions):
        spec = rotation_spec(mol, fd.rotatable[t], sign * angles[t])
        R = rodrigues_matrix(spec)
        A = R @ A
        b = R @ b + spec.pivot - R @ spec.pivot
    return A, b


def pair_sq_dist(
    mol: Molecule, fd: FragmentDecomposition, alpha: int, beta: int, theta: AngleLike
) -> float:
    """Squared distance between α and β after rotating β along the torsion path."""
    angles = _angles(theta, fd.num_torsions)
    path = torsion_path(fd, alpha, beta)
    specs = [
        rotation_spec(mol, fd.rotatable[t], sign * angles[t])
        for t, sign in zip(path.torsions, path.directions)
    ]
    moved = compose_chain(mol.positions[beta], specs)
    diff = mol.positions[alpha] - moved
    return float(diff @ diff)


def fragment_atoms(
    mol: Molecule, fd: FragmentDecomposition, include_hydrogens: bool = True
) -> list[np.ndarray]:
    """Per-fragment arrays of the atoms that enter the volume."""
    keep = set(selected_atoms(mol, include_hydrogens))
    return [np.array([a for a in members if a in keep], dtype=np.intp) for members in fd.members]


def molecular_volume(
    mol: Molecule,
    fd: FragmentDecomposition,
    theta: AngleLike,
    *,
    include_hydrogens: bool = True,
) -> float:
    """Sum of squared cross-fragment distances at torsion angles ``theta``.

    Fragment pairs share one rotation chain, so each pair of fragments is
    transformed once and summed in a fixed order.
    """
    angles = _angles(theta, fd.num_torsions)
    pos = mol.positions
    groups = fragment_atoms(mol, fd, include_hydrogens)
    total = 0.0
    for i in range(fd.fragment_count):
        for j in range(i + 1, fd.fragment_count):
            if groups[i].size == 0 or groups[j].size == 0:
                continue
            torsions, directions = fd.fragment_path(j, i)
            A, b = _chain_transform(mol, fd, torsions, directions, angles)
            moved = pos[groups[j]] @ A.T + b
            diff = pos[groups[i]][:, None, :] - moved[None, :, :]
            total += float(np.sum(diff * diff))
    return total


def realize_conformation(
    mol: Molecule, fd: FragmentDecomposition, theta: AngleLike
) -> Conformation:
    """Place every fragment by the rotations on its path to the tree root."""
    angles = _angles(theta, fd.num_torsions)
    pos = mol.positions
    out = np.array(pos, dtype=float)
    for frag, members in enumerate(fd.members):
        torsions = fd.torsion_tree.path_to_root(frag)
        if not torsions:
            continue
        A, b = _chain_transform(mol, fd, torsions, [1] * len(torsions), angles)
        idx = np.array(members, dtype=np.intp)
        out[idx] = pos[idx] @ A.T + b
    return Conformation(out)


def conformation_volume(
    conf: Conformation,
    fd: FragmentDecomposition,
    atoms: Sequence[int] | None = None,
) -> float:
    """Cross-fragment squared-distance sum read directly off realized coordinates."""
    pos = conf.positions
    keep = np.arange(conf.num_atoms) if atoms is None else np.asarray(atoms, dtype=np.intp)
    frag = np.asarray(fd.fragment_of)[keep]
    sub = pos[keep]
    diff = sub[:, None, :] - sub[None, :, :]
    sq = np.sum(diff * diff, axis=2)
    cross = frag[:, None] != frag[None, :]
    return float(np.sum(np.triu(sq * cross, k=1)))


def _rotation_stack(axis: np.ndarray, angles: np.ndarray) -> np.ndarray:
    K = skew(axis)
    K2 = K @ K
    s = np.sin(angles)[:, None, None]
    c = np.cos(angles)[:, None, None]
    return np.eye(3)[None] + s * K[None] + (1.0 - c) * K2[None]


@dataclass(frozen=True, eq=False)
class PairTable:
    """Squared-distance sum between two fragments over a grid of angles.

    ``values`` has one axis per torsion in ``torsions`` (ascending index).
    """

    fragments: tuple[int, int]
    torsions: tuple[int, ...]
    values: np.ndarray


def fragment_pair_table(
    mol: Molecule,
    fd: FragmentDecomposition,
    fragments: tuple[int, int],
    grid_values: Sequence[float] | np.ndarray,
    *,
    include_hydrogens: bool = True,
    groups: Sequence[np.ndarray] | None = None,
) -> PairTable:
    """Tabulate one fragment pair on ``grid_values`` for each torsion of its path.

    Uses the rigid-motion identity Σ|A r + b|² = Q + 2 b·(A S) + n|b|², so
    the cost per grid point is independent of the atom count.
    """
    values = np.asarray(grid_values, dtype=float)
    d = values.size
    i, j = fragments
    if groups is None:
        groups = fragment_atoms(mol, fd, include_hydrogens)
    pos = mol.positions
    torsions, directions = fd.fragment_path(j, i)
    A = np.eye(3)[None]
    b = np.zeros((1, 3))
    for t, sign in zip(torsions, directions):
        axis, pivot = bond_axis(mol, fd.rotatable[t])
        Rs = _rotation_stack(axis, sign * values)
        A = np.einsum("kij,cjl->ckil", Rs, A).reshape(-1, 3, 3)
        shift = pivot[None, :] - Rs @ pivot
        b = (np.einsum("kij,cj->cki", Rs, b) + shift[None, :, :]).reshape(-1, 3)
    ri, rj = pos[groups[i]], pos[groups[j]]
    ni, nj = len(ri), len(rj)
    si, sj = ri.sum(axis=0), rj.sum(axis=0)
    qi, qj = float(np.sum(ri * ri)), float(np.sum(rj * rj))
    a_sj = A @ sj
    moved_sq = qj + 2.0 * np.einsum("ci,ci->c", b, a_sj) + nj * np.einsum("ci,ci->c", b, b)
    cross = np.einsum("i,ci->c", si, a_sj + nj * b)
    pair = nj * qi + ni * moved_sq - 2.0 * cross
    # axis p of the flat index is path torsion p; reorder by torsion index
    table = pair.reshape((d,) * len(torsions))
    order = np.argsort(torsions, kind="stable")
    table = table.transpose(order) if len(torsions) else table
    return PairTable(
        fragments=(i, j),
        torsions=tuple(int(torsions[o]) for o in order),
        values=np.ascontiguousarray(table),
    )


def fragment_pair_tables(
    mol: Molecule,
    fd: FragmentDecomposition,
    grid_values: Sequence[float] | np.ndarray,
    *,
    include_hydrogens: bool = True,
) -> list[PairTable]:
    """PairTables for every fragment pair with atoms on both sides, in (i, j) order."""
    groups = fragment_atoms(mol, fd, include_hydrogens)
    return [
        fragment_pair_table(mol, fd, (i, j), grid_values, groups=groups)
        for i in range(fd.fragment_count)
        for j in range(i + 1, fd.fragment_count)
        if groups[i].size and groups[j].size
    ]


def volume_table(
    mol: Molecule,
    fd: FragmentDecomposition,
    grid_values: Sequence[float] | np.ndarray,
    *,
    include_hydrogens: bool = True,
) -> np.ndarray:
    """Molecular volume for every grid assignment, shape (d,) * M.

    Axis i indexes torsion i. Each fragment pair contributes a table over the
    torsions on its path only, broadcast into the full table.
    """
    d = np.asarray(grid_values).size
    m_total = fd.num_torsions
    total = np.zeros((d,) * m_total)
    for pt in fragment_pair_tables(mol, fd, grid_values, include_hydrogens=include_hydrogens):
        shape = [1] * m_total
        for t in pt.torsions:
            shape[t] = d
        total = total + pt.values.reshape(shape)
    return total


def rmsd(
    c1: Conformation | np.ndarray,
    c2: Conformation | np.ndarray,
    *,
    align: bool = False,
    atoms: Sequence[int] | None = None,
) -> float:
    """Root-mean-square deviation over matching atoms, optionally after Kabsch superposition."""
    a = c1.positions if isinstance(c1, Conformation) else np.asarray(c1, dtype=float)
    b = c2.positions if isinstance(c2, Conformation) else np.asarray(c2, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"conformations differ in size: {a.shape} vs {b.shape}")
    if atoms is not None:
        idx = np.asarray(atoms, dtype=np.intp)
        a, b = a[idx], b[idx]
    if a.shape[0] == 0:
        raise ValueError("rmsd needs at least one atom")
    if align:
        a = a - a.mean(axis=0)
        b = b - b.mean(axis=0)
        U, _, Vt = np.linalg.svd(b.T @ a)
        sign = 1.0 if np.linalg.det(Vt.T @ U.T) >= 0 else -1.0
        R = Vt.T @ np.diag([1.0, 1.0, sign]) @ U.T
        b = b @ R.T
    diff = a - b
    return math.sqrt(float(np.mean(np.sum(diff * diff, axis=1))))
