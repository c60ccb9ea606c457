"""
Molecule graphs: parsing, rotatable bonds, rigid fragments and torsion paths.

Reads the XYZ+bonds text format and the V2000 subset of MOL files, finds the
bonds a fragment can rotate about, and cuts the molecule into rigid fragments
arranged in a torsion tree rooted at the largest fragment.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import networkx as nx
import numpy as np

logger = logging.getLogger(__name__)

HYDROGEN = "H"


class MoleculeParseError(ValueError):
    """Malformed molecule text. ``line`` is 1-based when the failure has a location."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Atom:
    element: str
    position: tuple[float, float, float]

    def __post_init__(self) -> None:
        if len(self.position) != 3 or not all(math.isfinite(c) for c in self.position):
            raise ValueError(f"atom position must be 3 finite numbers, got {self.position!r}")

    @property
    def is_heavy(self) -> bool:
        return self.element.capitalize() != HYDROGEN


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: int = 1
    in_ring: bool = False

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError(f"bond endpoints must differ, got {self.a}-{self.b}")
        if self.order < 1:
            raise ValueError(f"bond order must be >= 1, got {self.order}")

    @property
    def key(self) -> tuple[int, int]:
        return (min(self.a, self.b), max(self.a, self.b))


@dataclass(frozen=True)
class Molecule:
    """Atoms, bonds and an optional explicit rotatable-bond list.

    The bond graph must be connected. ``rotatable_override`` holds the
    ``ROTATABLE a b`` pairs of the input file; ``None`` means detect.
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    name: str = ""
    rotatable_override: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.atoms)
        if n == 0:
            raise ValueError("molecule has no atoms")
        seen: set[tuple[int, int]] = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise ValueError(f"bond {bond.a}-{bond.b} out of range for {n} atoms")
            if bond.key in seen:
                raise ValueError(f"duplicate bond {bond.a}-{bond.b}")
            seen.add(bond.key)
        if not nx.is_connected(self.graph):
            raise ValueError("molecule graph is disconnected")

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @cached_property
    def graph(self) -> nx.Graph:
        """Bond graph with ``element`` node and ``index``/``order`` edge attributes. Do not mutate."""
        g = nx.Graph()
        for i, atom in enumerate(self.atoms):
            g.add_node(i, element=atom.element)
        for idx, bond in enumerate(self.bonds):
            g.add_edge(bond.a, bond.b, index=idx, order=bond.order)
        return g

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted(self.graph.neighbors(i))) for i in range(self.num_atoms))

    @cached_property
    def positions(self) -> np.ndarray:
        arr = np.array([a.position for a in self.atoms], dtype=float)
        arr.flags.writeable = False
        return arr

    def bond_index(self, a: int, b: int) -> int | None:
        data = self.graph.get_edge_data(a, b)
        return None if data is None else int(data["index"])

    def with_positions(self, positions: np.ndarray | Sequence[Sequence[float]]) -> Molecule:
        """Same topology with new coordinates (e.g. an unfolded conformer)."""
        coords = np.asarray(positions, dtype=float)
        if coords.shape != (self.num_atoms, 3):
            raise ValueError(
                f"expected positions of shape ({self.num_atoms}, 3), got {coords.shape}"
            )
        atoms = tuple(
            Atom(a.element, (float(p[0]), float(p[1]), float(p[2])))
            for a, p in zip(self.atoms, coords)
        )
        return replace(self, atoms=atoms)


@dataclass(frozen=True)
class RotatableBond:
    """A bridge bond one side of which rotates about the static→mobile axis.

    ``static_end`` is the pivot. After ``decompose_fragments`` it is the
    endpoint on the root side of the torsion tree.
    """

    bond_index: int
    static_end: int
    mobile_end: int
    torsion_index: int


@dataclass(frozen=True)
class TorsionTree:
    """Fragments as a rooted tree whose edges are rotatable bonds."""

    root: int
    parent: tuple[int | None, ...]
    parent_torsion: tuple[int | None, ...]
    depth: tuple[int, ...]

    def path_to_root(self, fragment: int) -> list[int]:
        """Torsion indices from ``fragment`` up to the root, nearest first."""
        torsions: list[int] = []
        node = fragment
        while self.parent[node] is not None:
            torsions.append(self.parent_torsion[node])  # type: ignore[arg-type]
            node = self.parent[node]  # type: ignore[assignment]
        return torsions


@dataclass(frozen=True)
class FragmentDecomposition:
    fragment_of: tuple[int, ...]
    fragment_count: int
    torsion_tree: TorsionTree
    rotatable: tuple[RotatableBond, ...]

    @property
    def num_torsions(self) -> int:
        return len(self.rotatable)

    @cached_property
    def members(self) -> tuple[tuple[int, ...], ...]:
        groups: list[list[int]] = [[] for _ in range(self.fragment_count)]
        for atom, frag in enumerate(self.fragment_of):
            groups[frag].append(atom)
        return tuple(tuple(g) for g in groups)

    def fragment_path(self, source: int, target: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Torsions on the tree path from ``source`` to ``target`` fragment.

        Returns (torsions, directions). Torsions climbed from ``source`` to the
        common ancestor come first with direction +1, then the ones descending
        to ``target`` with direction -1.
        """
        tree = self.torsion_tree
        up: list[int] = []
        down: list[int] = []
        s, t = source, target
        while tree.depth[s] > tree.depth[t]:
            up.append(tree.parent_torsion[s])  # type: ignore[arg-type]
            s = tree.parent[s]  # type: ignore[assignment]
        while tree.depth[t] > tree.depth[s]:
            down.append(tree.parent_torsion[t])  # type: ignore[arg-type]
            t = tree.parent[t]  # type: ignore[assignment]
        while s != t:
            up.append(tree.parent_torsion[s])  # type: ignore[arg-type]
            s = tree.parent[s]  # type: ignore[assignment]
            down.append(tree.parent_torsion[t])  # type: ignore[arg-type]
            t = tree.parent[t]  # type: ignore[assignment]
        torsions = tuple(up) + tuple(reversed(down))
        directions = (1,) * len(up) + (-1,) * len(down)
        return torsions, directions


@dataclass(frozen=True)
class TorsionPath:
    """Rotations carrying atom ``pair[1]`` into the frame of atom ``pair[0]``.

    ``torsions`` is nearest-to-β first. A direction of -1 means the bond is
    traversed against its static→mobile orientation, i.e. the angle enters
    negated.
    """

    pair: tuple[int, int]
    torsions: tuple[int, ...]
    directions: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.torsions)


# --- parsing ---------------------------------------------------------------


def _ring_flags(num_atoms: int, pairs: Sequence[tuple[int, int]]) -> list[bool]:
    g = nx.Graph()
    g.add_nodes_from(range(num_atoms))
    g.add_edges_from(pairs)
    bridges = {(min(a, b), max(a, b)) for a, b in nx.bridges(g)}
    return [(min(a, b), max(a, b)) not in bridges for a, b in pairs]


def _assemble(
    atoms: list[Atom],
    bond_rows: list[tuple[int, int, int, int]],
    override_rows: list[tuple[int, int, int]],
    name: str,
) -> Molecule:
    """Build a Molecule from parsed rows of (a, b, order, line) and (a, b, line)."""
    n = len(atoms)
    seen: set[tuple[int, int]] = set()
    for a, b, order, line in bond_rows:
        if not (0 <= a < n and 0 <= b < n):
            raise MoleculeParseError(f"bond index out of range for {n} atoms: {a} {b}", line)
        if a == b:
            raise MoleculeParseError(f"bond joins atom {a} to itself", line)
        if order < 1:
            raise MoleculeParseError(f"bond order must be >= 1, got {order}", line)
        key = (min(a, b), max(a, b))
        if key in seen:
            raise MoleculeParseError(f"duplicate bond {a} {b}", line)
        seen.add(key)
    pairs = [(a, b) for a, b, _, _ in bond_rows]
    flags = _ring_flags(n, pairs)
    bonds = tuple(
        Bond(a, b, order, ring) for (a, b, order, _), ring in zip(bond_rows, flags)
    )
    override: tuple[tuple[int, int], ...] | None = None
    if override_rows:
        for a, b, line in override_rows:
            if (min(a, b), max(a, b)) not in seen:
                raise MoleculeParseError(f"ROTATABLE {a} {b} is not a bond", line)
        override = tuple((a, b) for a, b, _ in override_rows)
    try:
        return Molecule(atoms=tuple(atoms), bonds=bonds, name=name, rotatable_override=override)
    except ValueError as exc:
        raise MoleculeParseError(str(exc)) from exc


def _parse_rotatable(parts: list[str], line: int) -> tuple[int, int, int]:
    if len(parts) != 3:
        raise MoleculeParseError("expected 'ROTATABLE a b'", line)
    try:
        return int(parts[1]), int(parts[2]), line
    except ValueError as exc:
        raise MoleculeParseError("ROTATABLE indices must be integers", line) from exc


def parse_xyz_bonds(text: str, name: str | None = None) -> Molecule:
    """
    Parse the XYZ+bonds format.

    Line 1 is the atom count, line 2 a comment (used as the name), then one
    ``symbol x y z`` line per atom, a blank line and ``a b [order]`` bond
    lines with 0-based indices. ``ROTATABLE a b`` lines override detection.
    """
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise MoleculeParseError("missing atom count", 1)
    try:
        count = int(lines[0].strip())
    except ValueError as exc:
        raise MoleculeParseError(f"atom count must be an integer, got {lines[0].strip()!r}", 1) from exc
    if count < 1:
        raise MoleculeParseError("atom count must be positive", 1)
    if len(lines) < count + 2:
        raise MoleculeParseError(
            f"expected {count} atom lines, found {max(0, len(lines) - 2)}", len(lines)
        )
    comment = lines[1].strip()
    atoms: list[Atom] = []
    for i in range(count):
        lineno = i + 3
        parts = lines[i + 2].split()
        if len(parts) != 4:
            raise MoleculeParseError("expected 'symbol x y z'", lineno)
        try:
            coords = (float(parts[1]), float(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise MoleculeParseError(f"non-numeric coordinate in {lines[i + 2].strip()!r}", lineno) from exc
        if not all(math.isfinite(c) for c in coords):
            raise MoleculeParseError("coordinates must be finite", lineno)
        atoms.append(Atom(parts[0], coords))

    bond_rows: list[tuple[int, int, int, int]] = []
    override_rows: list[tuple[int, int, int]] = []
    for offset, raw in enumerate(lines[count + 2 :]):
        lineno = count + 3 + offset
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if parts[0].upper() == "ROTATABLE":
            override_rows.append(_parse_rotatable(parts, lineno))
            continue
        if len(parts) not in (2, 3):
            raise MoleculeParseError("expected 'a b order'", lineno)
        try:
            values = [int(p) for p in parts]
        except ValueError as exc:
            raise MoleculeParseError(f"bond fields must be integers, got {stripped!r}", lineno) from exc
        order = values[2] if len(values) == 3 else 1
        bond_rows.append((values[0], values[1], order, lineno))
    return _assemble(atoms, bond_rows, override_rows, name if name is not None else comment)


def parse_mol_v2000(text: str, name: str | None = None) -> Molecule:
    """
    Parse a V2000 molfile (first record of an SD file).

    Coordinates and symbols are read from the fixed V2000 columns, bond
    indices are 1-based in the file and 0-based in the result. ``ROTATABLE
    a b`` lines (0-based) after the bond block override detection.
    """
    lines = text.splitlines()
    if len(lines) < 4:
        raise MoleculeParseError("missing counts line", len(lines) + 1)
    counts = lines[3]
    if "V3000" in counts.upper():
        raise MoleculeParseError("V3000 molfiles are not supported", 4)
    try:
        n_atoms = int(counts[0:3])
        n_bonds = int(counts[3:6])
    except ValueError as exc:
        raise MoleculeParseError("malformed counts line", 4) from exc
    if n_atoms < 1:
        raise MoleculeParseError("counts line declares no atoms", 4)
    if n_bonds < 0:
        raise MoleculeParseError("counts line declares a negative bond count", 4)
    if len(lines) < 4 + n_atoms:
        raise MoleculeParseError(
            f"atom block shorter than the {n_atoms} atoms declared", len(lines) + 1
        )
    if len(lines) < 4 + n_atoms + n_bonds:
        raise MoleculeParseError(
            f"bond block shorter than the {n_bonds} bonds declared", len(lines) + 1
        )

    atoms: list[Atom] = []
    for i in range(n_atoms):
        lineno = 5 + i
        row = lines[4 + i]
        try:
            coords = (float(row[0:10]), float(row[10:20]), float(row[20:30]))
        except ValueError as exc:
            raise MoleculeParseError("malformed atom line", lineno) from exc
        symbol = row[31:34].strip()
        if not symbol:
            raise MoleculeParseError("atom line has no element symbol", lineno)
        atoms.append(Atom(symbol, coords))

    bond_rows: list[tuple[int, int, int, int]] = []
    start = 4 + n_atoms
    for i in range(n_bonds):
        lineno = start + i + 1
        row = lines[start + i]
        try:
            a, b, order = int(row[0:3]), int(row[3:6]), int(row[6:9])
        except ValueError as exc:
            raise MoleculeParseError("malformed bond line", lineno) from exc
        bond_rows.append((a - 1, b - 1, order, lineno))

    override_rows: list[tuple[int, int, int]] = []
    for offset, raw in enumerate(lines[start + n_bonds :]):
        lineno = start + n_bonds + offset + 1
        stripped = raw.strip()
        if stripped == "$$$$":
            break
        parts = stripped.split()
        if parts and parts[0].upper() == "ROTATABLE":
            override_rows.append(_parse_rotatable(parts, lineno))
    return _assemble(atoms, bond_rows, override_rows, name if name is not None else lines[0].strip())


def load_molecule(path: str | Path) -> Molecule:
    """Read a molecule file; ``.mol``/``.sdf`` are V2000, anything else XYZ+bonds."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() in (".mol", ".sdf"):
        mol = parse_mol_v2000(text, name=p.stem)
    else:
        mol = parse_xyz_bonds(text, name=p.stem)
    logger.info(f"Parsed {p.name}: {mol.num_atoms} atoms, {len(mol.bonds)} bonds")
    return mol


def to_xyz_bonds(mol: Molecule) -> str:
    """Serialize to XYZ+bonds with round-trip exact coordinates."""
    out = [str(mol.num_atoms), mol.name]
    for atom in mol.atoms:
        x, y, z = atom.position
        out.append(f"{atom.element} {x!r} {y!r} {z!r}")
    out.append("")
    for bond in mol.bonds:
        out.append(f"{bond.a} {bond.b} {bond.order}")
    for a, b in mol.rotatable_override or ():
        out.append(f"ROTATABLE {a} {b}")
    return "\n".join(out) + "\n"


def to_mol_v2000(mol: Molecule) -> str:
    """Serialize to a V2000 molfile (coordinates at 4 decimals)."""
    out = [mol.name, "  molunfold", ""]
    out.append(f"{mol.num_atoms:3d}{len(mol.bonds):3d}  0  0  0  0  0  0  0  0999 V2000")
    for atom in mol.atoms:
        x, y, z = atom.position
        out.append(
            f"{x:10.4f}{y:10.4f}{z:10.4f} {atom.element:<3} 0  0  0  0  0  0  0  0  0  0  0  0"
        )
    for bond in mol.bonds:
        out.append(f"{bond.a + 1:3d}{bond.b + 1:3d}{bond.order:3d}  0")
    out.append("M  END")
    for a, b in mol.rotatable_override or ():
        out.append(f"ROTATABLE {a} {b}")
    return "\n".join(out) + "\n"


# --- topology --------------------------------------------------------------


def _split(mol: Molecule, a: int, b: int) -> tuple[set[int], set[int]] | None:
    """Atom sets on either side of bond a-b, or None when it is not a bridge."""
    g = mol.graph.copy()
    g.remove_edge(a, b)
    side_a = nx.node_connected_component(g, a)
    if b in side_a:
        return None
    return set(side_a), set(nx.node_connected_component(g, b))


def _heavy_count(mol: Molecule, atoms: Iterable[int]) -> int:
    return sum(1 for i in atoms if mol.atoms[i].is_heavy)


def detect_rotatable_bonds(mol: Molecule) -> list[RotatableBond]:
    """
    Rotatable bonds: single, not in a ring, with at least two heavy atoms on
    each side. An explicit ROTATABLE list in the input replaces the rule.

    The static end is provisionally the endpoint on the larger side;
    ``decompose_fragments`` re-orients it toward the torsion-tree root.
    """
    if mol.rotatable_override is not None:
        candidates = [mol.bond_index(a, b) for a, b in mol.rotatable_override]
    else:
        candidates = [
            idx for idx, bond in enumerate(mol.bonds) if bond.order == 1 and not bond.in_ring
        ]
    result: list[RotatableBond] = []
    for idx in candidates:
        if idx is None:
            continue
        bond = mol.bonds[idx]
        sides = _split(mol, bond.a, bond.b)
        if sides is None:
            if mol.rotatable_override is not None:
                # kept so decompose_fragments reports the bad override
                result.append(RotatableBond(idx, bond.a, bond.b, len(result)))
            continue
        side_a, side_b = sides
        if mol.rotatable_override is None and (
            _heavy_count(mol, side_a) < 2 or _heavy_count(mol, side_b) < 2
        ):
            continue
        static, mobile = (bond.a, bond.b) if len(side_a) >= len(side_b) else (bond.b, bond.a)
        result.append(RotatableBond(idx, static, mobile, len(result)))
    logger.debug(f"{mol.name or 'molecule'}: {len(result)} rotatable bonds")
    return result


def decompose_fragments(mol: Molecule, rbs: Sequence[RotatableBond]) -> FragmentDecomposition:
    """
    Cut every rotatable bond and arrange the rigid fragments as a tree.

    Fragment ids follow the lowest atom index of each fragment. The tree is
    rooted at the largest fragment (ties by lowest id) and every returned
    bond has its static end on the root side.
    """
    cut = mol.graph.copy()
    for position, rb in enumerate(rbs):
        bond = mol.bonds[rb.bond_index]
        if {rb.static_end, rb.mobile_end} != {bond.a, bond.b}:
            raise ValueError(f"rotatable bond {rb.bond_index} endpoints do not match the bond")
        if rb.torsion_index != position:
            raise ValueError(
                f"torsion indices must be 0..M-1 in order, got {rb.torsion_index} at {position}"
            )
        if _split(mol, bond.a, bond.b) is None:
            raise ValueError(f"bond {bond.a}-{bond.b} does not disconnect the molecule")
        cut.remove_edge(bond.a, bond.b)

    components = sorted((sorted(c) for c in nx.connected_components(cut)), key=lambda c: c[0])
    fragment_of = [0] * mol.num_atoms
    for fid, comp in enumerate(components):
        for atom in comp:
            fragment_of[atom] = fid
    count = len(components)
    sizes = [len(c) for c in components]
    root = max(range(count), key=lambda f: (sizes[f], -f))

    tree = nx.Graph()
    tree.add_nodes_from(range(count))
    for rb in rbs:
        tree.add_edge(fragment_of[rb.static_end], fragment_of[rb.mobile_end], torsion=rb.torsion_index)
    parent: list[int | None] = [None] * count
    parent_torsion: list[int | None] = [None] * count
    depth = [0] * count
    for u, v in nx.bfs_edges(tree, root):
        parent[v] = u
        parent_torsion[v] = tree.edges[u, v]["torsion"]
        depth[v] = depth[u] + 1

    oriented: list[RotatableBond] = []
    for rb in rbs:
        child = fragment_of[rb.mobile_end]
        if parent_torsion[child] != rb.torsion_index:
            oriented.append(replace(rb, static_end=rb.mobile_end, mobile_end=rb.static_end))
        else:
            oriented.append(rb)

    logger.debug(f"{count} fragments, sizes {sizes}, root {root}")
    return FragmentDecomposition(
        fragment_of=tuple(fragment_of),
        fragment_count=count,
        torsion_tree=TorsionTree(root, tuple(parent), tuple(parent_torsion), tuple(depth)),
        rotatable=tuple(oriented),
    )


def torsion_path(fd: FragmentDecomposition, alpha: int, beta: int) -> TorsionPath:
    """Torsions between the fragments of ``alpha`` and ``beta``, nearest to ``beta`` first."""
    fa, fb = fd.fragment_of[alpha], fd.fragment_of[beta]
    if fa == fb:
        raise ValueError(f"atoms {alpha} and {beta} are in the same fragment ({fa})")
    torsions, directions = fd.fragment_path(fb, fa)
    return TorsionPath(pair=(alpha, beta), torsions=torsions, directions=directions)


def cross_fragment_pairs(
    fd: FragmentDecomposition, atoms: Iterable[int] | None = None
) -> list[tuple[int, int]]:
    """Unordered atom pairs (α < β) in different fragments, optionally restricted to ``atoms``."""
    pool = sorted(set(range(len(fd.fragment_of)) if atoms is None else atoms))
    return [
        (a, b)
        for i, a in enumerate(pool)
        for b in pool[i + 1 :]
        if fd.fragment_of[a] != fd.fragment_of[b]
    ]


def selected_atoms(mol: Molecule, include_hydrogens: bool = True) -> list[int]:
    """Atoms that take part in volume sums and RMSD."""
    return [i for i, a in enumerate(mol.atoms) if include_hydrogens or a.is_heavy]


def prepare(mol: Molecule) -> FragmentDecomposition:
    """Detect rotatable bonds and decompose in one step."""
    return decompose_fragments(mol, detect_rotatable_bonds(mol))
