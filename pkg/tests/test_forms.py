import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirichlet_iso import (
    DirichletForm,
    StateSpace,
    ValidationError,
    build_generator,
    energy,
    energy1,
    is_markovian,
    semigroup_apply,
    semigroup_matrix,
)
from dirichlet_iso.generate import random_form

from oracles import energy_loops, generator_loops, semigroup_expm

seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(1, 12)


def _form(seed, n, killing=True):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, n + 1))
    return random_form(rng, n, k, with_killing=killing), rng


class TestStateSpace:
    def test_rejects_duplicate_labels(self):
        with pytest.raises(ValidationError, match="duplicate"):
            StateSpace(("a", "a"), [1.0, 1.0])

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_nonpositive_weight(self, bad):
        with pytest.raises(ValidationError, match="strictly positive"):
            StateSpace(("a", "b"), [1.0, bad])

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            StateSpace(("a", "b"), [1.0])

    def test_state_cap(self):
        with pytest.raises(ValidationError, match="cap"):
            StateSpace(tuple(str(i) for i in range(5)), np.ones(5), max_states=4)

    def test_immutable(self):
        space = StateSpace(("a",), [1.0])
        with pytest.raises(ValueError):
            space.measure[0] = 2.0


class TestDirichletForm:
    def test_asymmetric_rejected(self):
        with pytest.raises(ValidationError, match="symmetric"):
            DirichletForm(StateSpace.uniform(2), [[0, 1], [2, 0]])

    def test_negative_conductance_rejected(self):
        with pytest.raises(ValidationError, match="negative conductance"):
            DirichletForm(StateSpace.uniform(2), [[0, -1], [-1, 0]])

    def test_negative_killing_rejected(self):
        with pytest.raises(ValidationError, match="negative killing"):
            DirichletForm(StateSpace.uniform(2), np.zeros((2, 2)), [0.0, -0.1])

    def test_diagonal_rejected(self):
        with pytest.raises(ValidationError, match="diagonal"):
            DirichletForm(StateSpace.uniform(2), [[1, 0], [0, 0]])

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            DirichletForm(StateSpace.uniform(3), np.zeros((2, 2)))


class TestBuildGenerator:
    def test_single_edge(self, edge):
        assert np.array_equal(build_generator(edge).matrix, [[1, -1], [-1, 1]])

    def test_three_state_chain(self, chain3):
        expected = [[1, -1, 0], [-1, 3, -2], [0, -1, 1.25]]
        np.testing.assert_allclose(build_generator(chain3).matrix, expected, rtol=0, atol=1e-15)

    def test_empty_graph(self):
        form = DirichletForm(StateSpace.uniform(4), np.zeros((4, 4)))
        assert np.array_equal(build_generator(form).matrix, np.zeros((4, 4)))

    @given(seeds, sizes)
    def test_matches_loop_oracle(self, seed, n):
        form, _ = _form(seed, n)
        L = build_generator(form).matrix
        np.testing.assert_allclose(
            L, generator_loops(form.measure, form.conductances, form.killing), rtol=1e-14, atol=1e-14
        )
        assert build_generator(form).symmetry_defect() <= 1e-12
        assert np.all(L[~np.eye(n, dtype=bool)] <= 0)
        row_sums = (form.measure[:, None] * L).sum(axis=1)
        np.testing.assert_allclose(row_sums, form.killing, atol=1e-12)


class TestEnergy:
    def test_constants_without_killing(self, edge):
        assert energy(edge, [3.0, 3.0], [3.0, 3.0]) == 0.0

    def test_single_edge_values(self, edge):
        # the ordered-pair sum sees the edge twice: 1/2 * (1 + 1)
        assert energy(edge, [1, 0], [1, 0]) == pytest.approx(1.0, abs=1e-15)
        assert energy(edge, [1, 0], [0, 1]) == pytest.approx(-1.0, abs=1e-15)

    def test_energy1(self, edge):
        assert energy1(edge, [1, 0], [1, 0]) == pytest.approx(2.0, abs=1e-15)

    def test_dimension_mismatch(self, edge):
        with pytest.raises(ValidationError):
            energy(edge, [1, 0, 0], [1, 0])

    @given(seeds, sizes)
    def test_matches_generator_and_loops(self, seed, n):
        form, rng = _form(seed, n)
        f, g = rng.normal(size=n), rng.normal(size=n)
        e = energy(form, f, g)
        via_generator = form.space.inner(build_generator(form).matrix @ f, g)
        scale = max(1.0, abs(e))
        assert abs(e - via_generator) <= 1e-10 * scale
        assert abs(e - energy_loops(form.conductances, form.killing, f, g)) <= 1e-10 * scale
        assert energy(form, f, f) >= -1e-12


class TestSemigroup:
    def test_time_zero(self, chain3):
        f = np.array([1.0, -2.0, 3.0])
        assert np.array_equal(semigroup_apply(chain3, 0.0, f), f)

    def test_conservative_constant(self, edge):
        for t in (0.1, 1.0, 10.0):
            np.testing.assert_allclose(semigroup_apply(edge, t, [1.0, 1.0]), [1.0, 1.0], atol=1e-14)

    def test_two_state_closed_form(self, edge):
        e2 = math.exp(-2.0)
        np.testing.assert_allclose(
            semigroup_apply(edge, 1.0, [1.0, 0.0]), [(1 + e2) / 2, (1 - e2) / 2], rtol=1e-14
        )

    def test_negative_time(self, edge):
        with pytest.raises(ValueError):
            semigroup_apply(edge, -1.0, [1.0, 0.0])

    @settings(max_examples=50)
    @given(seeds, sizes, st.sampled_from([0.01, 0.5, 3.0]))
    def test_matches_expm_oracle(self, seed, n, t):
        form, _ = _form(seed, n)
        np.testing.assert_allclose(semigroup_matrix(form, t), semigroup_expm(form, t), atol=1e-12)

    def test_batch_columns(self, two_triangles, rng):
        f = rng.normal(size=(6, 3))
        batch = semigroup_apply(two_triangles, 0.7, f)
        for i in range(3):
            np.testing.assert_allclose(batch[:, i], semigroup_apply(two_triangles, 0.7, f[:, i]))


class TestIsMarkovian:
    def test_valid_form(self, chain3):
        report = is_markovian(chain3)
        assert report.ok
        assert all(row["min_entry"] >= -1e-12 for row in report.per_t)

    def test_conservative_mass_one(self, edge):
        for row in is_markovian(edge).per_t:
            assert abs(row["max_mass"] - 1.0) <= 1e-12

    def test_corrupted_form(self):
        c = np.array([[0.0, -0.5, 1.0], [-0.5, 0.0, 1.0], [1.0, 1.0, 0.0]])
        form = DirichletForm(StateSpace.uniform(3), c, check=False)
        assert form.generator.matrix[0, 1] > 0
        report = is_markovian(form, t_grid=(1e-3, 0.1))
        assert not report.ok
        assert report.per_t[0]["min_entry"] < 0
