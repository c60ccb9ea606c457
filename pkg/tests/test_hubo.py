"""Tests for variable registries and the HUBO objective construction."""

import itertools
import math
from dataclasses import replace

import numpy as np
import pytest

from molunfold.encoding import EncodingKind
from molunfold.geometry import conformation_volume, molecular_volume, realize_conformation
from molunfold.hubo import (
    FOURIER_GRID,
    VariableRegistry,
    build_objective,
    default_penalty_weight,
    trig_coefficients,
)
from molunfold.molgraph import prepare
from molunfold.polynomial import Domain, Polynomial
from molunfold.problem import UnfoldingProblem
from molunfold.property_testing import chain_molecule
from tests.example_molecules import (
    butane,
    butane_with_hydrogen,
    forked,
    forked_swapped,
    heptane_middle_root,
    hexane,
    hexane_far_root,
    pentane,
    propane,
)


class TestRegistry:
    def test_phase_layout(self):
        reg = VariableRegistry.phase(2, 8)
        assert reg.bits_per_torsion == 3
        assert reg.num_vars == 6
        assert reg.domain is Domain.SPIN
        assert [reg.name(v) for v in range(6)] == ["b_00", "b_01", "b_02", "b_10", "b_11", "b_12"]
        assert reg.index(1, 2) == 5
        assert reg.locate(4) == (1, 1)
        assert reg.variables_of(1) == (3, 4, 5)

    def test_onehot_layout(self):
        reg = VariableRegistry.create("onehot", 3, 4)
        assert reg.kind is EncodingKind.ONEHOT
        assert reg.bits_per_torsion == 4
        assert reg.num_vars == 12
        assert reg.domain is Domain.BOOLEAN

    def test_wide_indices_are_separated(self):
        reg = VariableRegistry.phase(11, 4)
        assert reg.name(reg.index(10, 1)) == "b_10_1"

    def test_out_of_range(self):
        reg = VariableRegistry.phase(2, 4)
        with pytest.raises(ValueError):
            reg.index(2, 0)
        with pytest.raises(ValueError):
            reg.index(0, 2)
        with pytest.raises(ValueError):
            reg.locate(4)

    def test_phase_needs_power_of_two(self):
        with pytest.raises(ValueError, match="power of 2"):
            VariableRegistry.phase(1, 6)

    def test_decode_checks_length(self):
        reg = VariableRegistry.phase(2, 4)
        with pytest.raises(ValueError, match="registry has 4"):
            reg.decode_indices([1, 1, 1])

    def test_random_assignment_is_valid(self):
        reg = VariableRegistry.onehot(3, 5)
        x = reg.random_assignment(np.random.default_rng(0))
        assert x.reshape(3, 5).sum(axis=1).tolist() == [1, 1, 1]

    def test_to_dict(self):
        info = VariableRegistry.phase(1, 4, printed_table=True).to_dict()
        assert info == {
            "encoding": "phase",
            "num_torsions": 1,
            "d": 4,
            "bits_per_torsion": 2,
            "names": ["b_00", "b_01"],
            "phase_table": "printed",
        }


class TestTrigCoefficients:
    def test_one_torsion(self):
        samples = 2.0 + 3.0 * np.cos(FOURIER_GRID) - 0.5 * np.sin(FOURIER_GRID)
        np.testing.assert_allclose(trig_coefficients(samples), [2.0, 3.0, -0.5], atol=1e-12)

    def test_two_torsions(self):
        u, v = np.meshgrid(FOURIER_GRID, FOURIER_GRID, indexing="ij")
        samples = 1.0 + np.cos(u) * np.sin(v) - 2.0 * np.sin(u)
        coeffs = trig_coefficients(samples)
        expected = np.zeros((3, 3))
        expected[0, 0] = 1.0
        expected[1, 2] = 1.0
        expected[2, 0] = -2.0
        np.testing.assert_allclose(coeffs, expected, atol=1e-12)


class TestBuildObjective:
    @pytest.mark.parametrize("d", [2, 4, 8])
    def test_phase_objective_is_the_negated_volume_on_every_grid_point(self, d):
        problem = UnfoldingProblem.from_molecule(pentane(), d)
        reg = problem.registry("phase")
        objective = problem.objective(reg)
        assert objective.domain is Domain.SPIN
        assert objective.num_vars == reg.num_vars
        for k in itertools.product(range(d), repeat=2):
            value = objective.evaluate(reg.encode(list(k)))
            assert value == pytest.approx(-problem.volume(k), rel=1e-8)

    def test_phase_degree_is_bounded_by_the_path(self):
        problem = UnfoldingProblem.from_molecule(pentane(), 4)
        objective = problem.objective(problem.registry("phase"))
        assert 1 <= objective.degree <= 4

    def test_onehot_objective_matches_on_valid_states(self):
        problem = UnfoldingProblem.from_molecule(pentane(), 4)
        reg = problem.registry("onehot")
        objective = problem.objective(reg)
        assert objective.domain is Domain.BOOLEAN
        for k in itertools.product(range(4), repeat=2):
            assert objective.evaluate(reg.encode(list(k))) == pytest.approx(-problem.volume(k), rel=1e-8)

    def test_penalty_keeps_invalid_states_above_the_optimum(self):
        problem = UnfoldingProblem.from_molecule(butane(), 4)
        reg = problem.registry("onehot")
        objective = problem.objective(reg)
        best_valid = min(objective.evaluate(reg.encode([k])) for k in range(4))
        for bits in itertools.product((0, 1), repeat=4):
            if sum(bits) != 1:
                assert objective.evaluate(bits) > best_valid

    def test_penalty_separates_every_invalid_state_of_two_torsions(self):
        problem = UnfoldingProblem.from_molecule(pentane(), 8)
        reg = problem.registry("onehot")
        compiled = problem.objective(reg).compiled
        states = ((np.arange(2**reg.num_vars)[:, None] >> np.arange(reg.num_vars)) & 1).astype(float)
        valid = np.ones(len(states), dtype=bool)
        for t in range(reg.num_torsions):
            valid &= states[:, list(reg.variables_of(t))].sum(axis=1) == 1
        values = np.concatenate([compiled.values(chunk) for chunk in np.array_split(states, 16)])
        assert int(valid.sum()) == 64
        assert values[valid].min() == pytest.approx(-float(problem.volumes.max()), rel=1e-8)
        assert values[valid].max() < values[~valid].min()

    def test_explicit_penalty_weight(self):
        mol = butane()
        fd = prepare(mol)
        reg = VariableRegistry.onehot(1, 4)
        light = build_objective(mol, fd, reg, penalty_weight=1.0)
        heavy = build_objective(mol, fd, reg, penalty_weight=3.0)
        assert heavy.evaluate([0, 0, 0, 0]) - light.evaluate([0, 0, 0, 0]) == pytest.approx(2.0)
        assert heavy.evaluate([0, 1, 0, 0]) == pytest.approx(light.evaluate([0, 1, 0, 0]))

    def test_default_penalty_weight(self):
        p = Polynomial.from_terms([((), -10.0), ((0,), 3.0)], Domain.BOOLEAN)
        assert default_penalty_weight(p) == 20.0

    def test_printed_and_constructed_two_bit_tables_agree(self):
        problem = UnfoldingProblem.from_molecule(pentane(), 4)
        printed = problem.registry("phase", printed_table=True)
        constructed = problem.registry("phase")
        for k in itertools.product(range(4), repeat=2):
            a = problem.objective(printed).evaluate(printed.encode(list(k)))
            b = problem.objective(constructed).evaluate(constructed.encode(list(k)))
            assert a == pytest.approx(b, rel=1e-12)

    def test_hydrogens_can_be_left_out(self):
        mol = butane_with_hydrogen()
        reg = VariableRegistry.phase(1, 4)
        without_h = build_objective(mol, prepare(mol), reg, include_hydrogens=False)
        heavy = butane()
        plain = build_objective(heavy, prepare(heavy), reg)
        assert without_h.is_close(plain, tol=1e-9)

    def test_parallel_build_is_identical(self):
        mol = pentane()
        fd = prepare(mol)
        reg = VariableRegistry.phase(2, 4)
        assert build_objective(mol, fd, reg, jobs=2) == build_objective(mol, fd, reg)

    def test_no_torsions(self):
        mol = propane()
        with pytest.raises(ValueError, match="no rotatable bonds"):
            build_objective(mol, prepare(mol), VariableRegistry.phase(0, 4))

    def test_registry_must_cover_every_torsion(self):
        mol = pentane()
        with pytest.raises(ValueError, match="covers 1 torsions"):
            build_objective(mol, prepare(mol), VariableRegistry.phase(1, 4))

    def test_objective_is_cached_per_encoding(self):
        problem = UnfoldingProblem.from_molecule(butane(), 4)
        reg = problem.registry("phase")
        assert problem.objective(reg) is problem.objective(problem.registry("phase"))
        pruned = problem.objective(reg, prune=1e6)
        assert len(pruned) == 1


GRID_ORACLE_CASES = [
    pytest.param(butane, True, id="butane"),
    pytest.param(butane_with_hydrogen, True, id="butane-h"),
    pytest.param(butane_with_hydrogen, False, id="butane-h-heavy-only"),
    pytest.param(pentane, True, id="pentane"),
    pytest.param(lambda: chain_molecule([math.radians(100.0), math.radians(200.0)]), True, id="chain-100-200"),
    pytest.param(lambda: chain_molecule([math.radians(300.0)]), True, id="chain-300"),
    pytest.param(
        lambda: chain_molecule(
            [math.radians(150.0), math.radians(40.0)], bond_length=1.2, bond_angle=math.radians(120.0)
        ),
        True,
        id="short-wide-chain",
    ),
    pytest.param(lambda: replace(hexane(), rotatable_override=((2, 3),)), True, id="hexane-one-cut"),
    pytest.param(heptane_middle_root, True, id="heptane-middle-root"),
    pytest.param(hexane_far_root, True, id="hexane-far-root"),
    pytest.param(forked, True, id="forked"),
    pytest.param(forked_swapped, True, id="forked-swapped"),
]


class TestObjectiveAgainstGeometry:
    @pytest.mark.parametrize("d", [2, 4, 8])
    @pytest.mark.parametrize("build, include_hydrogens", GRID_ORACLE_CASES)
    def test_every_phase_assignment_gives_the_negated_volume(self, build, include_hydrogens, d):
        mol = build()
        problem = UnfoldingProblem.from_molecule(mol, d, include_hydrogens=include_hydrogens)
        fd = problem.decomposition
        assert 1 <= problem.num_torsions <= 2
        reg = problem.registry("phase")
        objective = problem.objective(reg)
        for spins in itertools.product((-1, 1), repeat=reg.num_vars):
            theta = reg.decode(spins)
            volume = molecular_volume(mol, fd, theta, include_hydrogens=include_hydrogens)
            assert objective.evaluate(spins) == pytest.approx(-volume, rel=1e-8, abs=1e-9)
            realized = conformation_volume(realize_conformation(mol, fd, theta), fd, problem.atoms)
            assert realized == pytest.approx(volume, rel=1e-9)

    @pytest.mark.parametrize(
        "build, root, static_ends",
        [
            (pentane, 0, (1, 2)),
            (heptane_middle_root, 1, (2, 4)),
            (hexane_far_root, 2, (2, 3)),
            (forked, 0, (1, 2)),
            (forked_swapped, 0, (2, 1)),
        ],
    )
    def test_tree_roots_of_the_oracle_molecules(self, build, root, static_ends):
        fd = prepare(build())
        assert fd.torsion_tree.root == root
        assert tuple(rb.static_end for rb in fd.rotatable) == static_ends
