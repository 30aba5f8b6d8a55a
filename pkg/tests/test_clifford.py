"""Tests for fkmcone.clifford construction and exact relation checks."""

import numpy as np
import pytest

from fkmcone.clifford import (
    CliffordSystem,
    build_irreducible,
    build_system,
    delta,
    is_orthogonal,
    load_system,
    save_system,
    symmetric_system,
    verify_relations,
    verify_symmetric_relations,
)
from fkmcone.utils import InvalidParameterError

GRID = [
    (m, k)
    for m in range(2, 13)
    for k in range(1, 9)
    if k * delta(m) >= m + 2
]


class TestDelta:
    @pytest.mark.parametrize(
        ("m", "expected"),
        [(1, 1), (2, 2), (3, 4), (4, 4), (5, 8), (8, 8), (9, 16), (10, 32), (12, 64)],
    )
    def test_table(self, m, expected):
        assert delta(m) == expected

    def test_periodicity(self):
        for m in range(1, 9):
            assert delta(m + 8) == 16 * delta(m)

    def test_rejects_zero(self):
        with pytest.raises(InvalidParameterError):
            delta(0)


class TestBuildIrreducible:
    def test_m2_is_quarter_turn(self):
        system = build_irreducible(2)
        (g,) = system.generators
        quarter = np.array([[0, -1], [1, 0]])
        assert np.array_equal(g, quarter) or np.array_equal(g, -quarter)

    def test_m5_octonion_generators(self):
        system = build_irreducible(5)
        assert system.dim == 8
        assert len(system.generators) == 4
        assert verify_relations(system).passed

    def test_m10_size(self):
        system = build_irreducible(10)
        assert system.dim == 32
        assert len(system.generators) == 9
        assert verify_relations(system).passed

    @pytest.mark.parametrize("m", range(2, 13))
    def test_relations(self, m):
        system = build_irreducible(m)
        assert system.dim == delta(m)
        assert verify_relations(system).passed
        assert is_orthogonal(system)

    def test_rejects_m1(self):
        with pytest.raises(InvalidParameterError):
            build_irreducible(1)


class TestBuildSystem:
    def test_block_diagonal(self):
        system = build_system(2, 2)
        (g,) = system.generators
        assert g.shape == (4, 4)
        assert not g[:2, 2:].any()
        assert not g[2:, :2].any()
        assert np.array_equal(g[:2, :2], g[2:, 2:])

    def test_m3_k3(self):
        system = build_system(3, 3)
        assert system.dim == 12
        assert system.n == 11
        assert len(system.generators) == 2

    def test_multiplicity_constraint(self):
        with pytest.raises(InvalidParameterError, match="n = 1, n - m = -1"):
            build_system(2, 1)

    @pytest.mark.parametrize(("m", "k"), GRID)
    def test_grid_relations_exact(self, m, k):
        report = verify_relations(build_system(m, k))
        assert report.passed
        assert report.p is None

    def test_generators_are_read_only(self):
        system = build_system(3, 3)
        with pytest.raises(ValueError):
            system.generators[0][0, 0] = 1


class TestVerifyRelations:
    def test_detects_repeated_generator(self):
        g = build_irreducible(3).generators[0]
        system = CliffordSystem(m=3, k=1, dim=4, generators=(g, g))
        report = verify_relations(system)
        assert not report.passed
        assert (report.p, report.q, report.relation) == (1, 2, "anticommute")

    def test_detects_non_skew(self):
        system = CliffordSystem(m=2, k=1, dim=2, generators=(np.eye(2, dtype=int),))
        report = verify_relations(system)
        assert not report.passed
        assert report.relation == "skew"

    def test_negated_generator_passes(self):
        gens = build_irreducible(4).generators
        system = CliffordSystem(m=4, k=1, dim=4, generators=(-gens[0], *gens[1:]))
        assert verify_relations(system).passed

    def test_zeroed_entry_fails(self):
        gens = [g.copy() for g in build_irreducible(4).generators]
        i, j = np.argwhere(gens[0])[0]
        gens[0][i, j] = 0
        system = CliffordSystem(m=4, k=1, dim=4, generators=tuple(gens))
        report = verify_relations(system)
        assert not report.passed
        assert (report.p, report.q, report.relation) == (1, 1, "skew")

    def test_orbit_is_orthonormal(self):
        rng = np.random.default_rng(0)
        for m, k in [(3, 3), (5, 1), (9, 1)]:
            system = build_system(m, k)
            for _ in range(100):
                x = rng.standard_normal(system.dim)
                x /= np.linalg.norm(x)
                orbit = np.stack([x] + [g @ x for g in system.generators])
                np.testing.assert_allclose(orbit @ orbit.T, np.eye(m), atol=1e-12)

    def test_entries_outside_range(self):
        with pytest.raises(InvalidParameterError):
            CliffordSystem(m=2, k=1, dim=2, generators=(2 * np.eye(2, dtype=int),))

    def test_wrong_generator_count(self):
        g = build_irreducible(3).generators[0]
        with pytest.raises(InvalidParameterError):
            CliffordSystem(m=4, k=1, dim=4, generators=(g,))


class TestSymmetricSystem:
    @pytest.mark.parametrize(("m", "k"), [(2, 2), (3, 3), (5, 1), (9, 1)])
    def test_relations(self, m, k):
        system = build_system(m, k)
        mats = symmetric_system(system)
        assert len(mats) == m + 1
        assert all(p.shape == (2 * system.dim, 2 * system.dim) for p in mats)
        assert verify_symmetric_relations(system).passed


class TestSerialization:
    def test_save_load(self, tmp_path):
        system = build_system(3, 3)
        path = tmp_path / "system.json"
        save_system(system, path)
        loaded = load_system(path)
        assert (loaded.m, loaded.k, loaded.dim) == (3, 3, 12)
        for a, b in zip(loaded.generators, system.generators):
            assert np.array_equal(a, b)

    def test_from_dict_missing_key(self):
        with pytest.raises(InvalidParameterError):
            CliffordSystem.from_dict({"m": 2, "k": 2})

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(InvalidParameterError):
            load_system(tmp_path / "missing.json")
