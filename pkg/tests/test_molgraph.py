"""Tests for molecule parsing, rotatable-bond detection and fragment decomposition."""

import numpy as np
import pytest

from molunfold.molgraph import (
    MoleculeParseError,
    RotatableBond,
    cross_fragment_pairs,
    decompose_fragments,
    detect_rotatable_bonds,
    load_molecule,
    parse_mol_v2000,
    parse_xyz_bonds,
    prepare,
    selected_atoms,
    to_mol_v2000,
    to_xyz_bonds,
    torsion_path,
)
from tests.example_molecules import (
    BUTANE_XYZ,
    TOLUENE_MOL,
    butane,
    butane_with_hydrogen,
    hexane,
    propane,
    toluene,
)


class TestParseXyzBonds:
    def test_reads_atoms_bonds_and_name(self):
        mol = parse_xyz_bonds(BUTANE_XYZ)
        assert mol.name == "butane"
        assert mol.num_atoms == 4
        assert [b.key for b in mol.bonds] == [(0, 1), (1, 2), (2, 3)]
        assert all(b.order == 1 for b in mol.bonds)
        assert mol.atoms[3].position == (3.63, 1.44, 0.5)

    def test_explicit_name_wins_over_comment(self):
        assert parse_xyz_bonds(BUTANE_XYZ, name="other").name == "other"

    def test_short_atom_line_reports_line_number(self):
        text = BUTANE_XYZ.replace("C 1.54 0.0 0.0", "C 1.54 0.0")
        with pytest.raises(MoleculeParseError) as exc_info:
            parse_xyz_bonds(text)
        assert exc_info.value.line == 4
        assert "line 4" in str(exc_info.value)

    def test_non_integer_count(self):
        with pytest.raises(MoleculeParseError) as exc_info:
            parse_xyz_bonds("four\nx\n")
        assert exc_info.value.line == 1

    def test_bond_out_of_range(self):
        with pytest.raises(MoleculeParseError) as exc_info:
            parse_xyz_bonds(BUTANE_XYZ + "3 9\n")
        assert exc_info.value.line == 11

    def test_disconnected_graph_is_rejected(self):
        text = BUTANE_XYZ.replace("1 2 1\n", "")
        with pytest.raises(MoleculeParseError, match="disconnected"):
            parse_xyz_bonds(text)

    def test_rotatable_override_replaces_detection(self):
        """An explicit ROTATABLE line is honoured even for a terminal bond."""
        mol = parse_xyz_bonds(BUTANE_XYZ + "ROTATABLE 0 1\n")
        assert mol.rotatable_override == ((0, 1),)
        rbs = detect_rotatable_bonds(mol)
        assert [rb.bond_index for rb in rbs] == [0]

    def test_rotatable_override_must_name_a_bond(self):
        with pytest.raises(MoleculeParseError, match="not a bond"):
            parse_xyz_bonds(BUTANE_XYZ + "ROTATABLE 0 3\n")

    def test_xyz_text_round_trips_exactly(self):
        mol = hexane()
        again = parse_xyz_bonds(to_xyz_bonds(mol))
        assert again.name == mol.name
        np.testing.assert_array_equal(again.positions, mol.positions)
        assert [b.key for b in again.bonds] == [b.key for b in mol.bonds]


class TestParseMol:
    def test_reads_fixed_columns(self):
        mol = toluene()
        assert mol.name == "toluene"
        assert mol.num_atoms == 7
        assert len(mol.bonds) == 7
        assert mol.atoms[6].position == (2.9, 0.0, 0.0)
        assert mol.bonds[0].order == 2

    def test_ring_bonds_are_flagged(self):
        mol = toluene()
        assert [b.in_ring for b in mol.bonds] == [True] * 6 + [False]

    def test_ring_and_methyl_bonds_are_not_rotatable(self):
        assert detect_rotatable_bonds(toluene()) == []

    def test_v3000_is_rejected(self):
        text = TOLUENE_MOL.replace("V2000", "V3000")
        with pytest.raises(MoleculeParseError, match="V3000"):
            parse_mol_v2000(text)

    def test_truncated_bond_block(self):
        text = "\n".join(TOLUENE_MOL.splitlines()[:12])
        with pytest.raises(MoleculeParseError, match="bond block"):
            parse_mol_v2000(text)

    def test_mol_writer_output_parses(self):
        mol = butane()
        again = parse_mol_v2000(to_mol_v2000(mol))
        assert again.num_atoms == 4
        np.testing.assert_allclose(again.positions, mol.positions, atol=1e-4)


def test_load_molecule_picks_parser_by_suffix(tmp_path):
    xyz = tmp_path / "chain.xyz"
    xyz.write_text(BUTANE_XYZ)
    mol_file = tmp_path / "ring.mol"
    mol_file.write_text(TOLUENE_MOL)
    assert load_molecule(xyz).name == "chain"
    assert load_molecule(mol_file).num_atoms == 7


class TestFragments:
    def test_butane_has_one_rotatable_bond(self):
        rbs = detect_rotatable_bonds(butane())
        assert len(rbs) == 1
        assert rbs[0].bond_index == 1
        assert {rbs[0].static_end, rbs[0].mobile_end} == {1, 2}

    def test_no_rotatable_bonds_in_propane(self):
        fd = prepare(propane())
        assert fd.num_torsions == 0
        assert fd.fragment_count == 1

    def test_butane_decomposition(self):
        """Equal fragment sizes root the tree at the lowest fragment id."""
        fd = prepare(butane())
        assert fd.fragment_count == 2
        assert fd.members == ((0, 1), (2, 3))
        assert fd.torsion_tree.root == 0
        rb = fd.rotatable[0]
        assert (rb.static_end, rb.mobile_end) == (1, 2)

    def test_decompose_orients_static_end_toward_root(self):
        fd = decompose_fragments(butane(), [RotatableBond(1, 2, 1, 0)])
        rb = fd.rotatable[0]
        assert (rb.static_end, rb.mobile_end) == (1, 2)

    def test_decompose_rejects_bad_bonds(self):
        mol = butane()
        with pytest.raises(ValueError, match="do not match"):
            decompose_fragments(mol, [RotatableBond(1, 0, 3, 0)])
        with pytest.raises(ValueError, match="torsion indices"):
            decompose_fragments(mol, [RotatableBond(1, 1, 2, 1)])

    def test_hexane_tree_is_a_path(self):
        fd = prepare(hexane())
        assert fd.num_torsions == 3
        assert [rb.bond_index for rb in fd.rotatable] == [1, 2, 3]
        assert fd.members == ((0, 1), (2,), (3,), (4, 5))
        assert fd.torsion_tree.parent == (None, 0, 1, 2)
        assert fd.torsion_tree.path_to_root(3) == [2, 1, 0]

    def test_fragment_path_directions(self):
        fd = prepare(hexane())
        assert fd.fragment_path(3, 0) == ((2, 1, 0), (1, 1, 1))
        assert fd.fragment_path(0, 3) == ((0, 1, 2), (-1, -1, -1))
        assert fd.fragment_path(1, 1) == ((), ())

    def test_torsion_path_is_nearest_to_beta_first(self):
        fd = prepare(hexane())
        path = torsion_path(fd, 0, 5)
        assert path.torsions == (2, 1, 0)
        assert path.directions == (1, 1, 1)
        assert path.m == 3

    def test_torsion_path_rejects_same_fragment(self):
        fd = prepare(hexane())
        with pytest.raises(ValueError, match="same fragment"):
            torsion_path(fd, 0, 1)

    def test_cross_fragment_pairs(self):
        fd = prepare(butane())
        assert cross_fragment_pairs(fd) == [(0, 2), (0, 3), (1, 2), (1, 3)]
        assert cross_fragment_pairs(fd, atoms=[0, 3]) == [(0, 3)]

    def test_selected_atoms_can_drop_hydrogens(self):
        mol = butane_with_hydrogen()
        assert selected_atoms(mol) == [0, 1, 2, 3, 4]
        assert selected_atoms(mol, include_hydrogens=False) == [0, 1, 2, 3]

    def test_hydrogen_does_not_count_as_heavy_side(self):
        """The terminal C-C bond stays non-rotatable with a hydrogen attached."""
        fd = prepare(butane_with_hydrogen())
        assert fd.num_torsions == 1
        assert fd.members[0] == (0, 1, 4)


def test_with_positions_checks_shape():
    mol = butane()
    with pytest.raises(ValueError, match="shape"):
        mol.with_positions(np.zeros((3, 3)))
    moved = mol.with_positions(mol.positions + 1.0)
    np.testing.assert_allclose(moved.positions, mol.positions + 1.0)
