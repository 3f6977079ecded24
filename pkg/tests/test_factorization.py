import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirichlet_iso import (
    ComponentNormError,
    DirichletForm,
    ExcessiveFunction,
    Factorization,
    NotIntertwiningError,
    NotUnitaryError,
    ReconstructionError,
    Relabeling,
    StateSpace,
    StepScaling,
    ValidationError,
    check_uniqueness,
    factorize,
    factorize_componentwise,
    factorize_irreducible,
    factorize_unitary,
    from_Uh,
    from_Uj,
    h_transform,
    identity,
    intertwines,
    irreducible_decomposition,
    is_unitary,
    pushforward_form,
    synthesize,
)
from dirichlet_iso.generate import random_excessive, random_form, random_iso, random_relabeling, random_triple

from oracles import dense_generator_residual, dense_iso

seeds = st.integers(0, 2**32 - 1)


def rel_err(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / np.abs(b)))


class TestFactorizeUnitary:
    def test_identity(self, chain3):
        fact = factorize_unitary(identity(chain3.space), chain3, chain3)
        np.testing.assert_allclose(fact.h.values, np.ones(3))
        assert np.array_equal(fact.j.mapping, np.arange(3))
        assert fact.h.certified

    def test_h_only(self, rng):
        form = random_form(rng, 6, 2)
        h0 = random_excessive(rng, form)
        out = h_transform(form, h0)
        fact = factorize_unitary(from_Uh(form.space, h0), form, out)
        assert rel_err(fact.h.values, h0) <= 1e-14
        assert np.array_equal(fact.j.mapping, np.arange(6))

    def test_j_only(self, rng):
        form = random_form(rng, 6, 2)
        j0 = random_relabeling(rng, form.space)
        fact = factorize_unitary(from_Uj(j0), form, pushforward_form(form, j0))
        np.testing.assert_allclose(fact.h.values, np.ones(6))
        assert np.array_equal(fact.j.mapping, j0.mapping)

    def test_not_unitary(self, rng):
        form = random_form(rng, 5, 1)
        with pytest.raises(NotUnitaryError):
            factorize_unitary(identity(form.space) * 2, form, form)

    def test_not_intertwining(self, rng):
        form1 = random_form(rng, 5, 1)
        form2 = random_form(rng, 5, 1, prefix="y")
        with pytest.raises(NotIntertwiningError):
            factorize_unitary(random_iso(rng, form1.space, form2.space), form1, form2)


class TestFactorizeIrreducible:
    def test_unitary(self, rng):
        form1, h, j, _ = random_triple(rng, 6, 1)
        U, form2 = synthesize(form1, h, j, [1.0])
        c, fact = factorize_irreducible(U, form1, form2)
        assert c == pytest.approx(1.0, rel=1e-12)
        assert rel_err(fact.h.values, h) <= 1e-12

    def test_homogeneous(self, rng):
        form1, h, j, _ = random_triple(rng, 6, 1)
        U, form2 = synthesize(form1, h, j, [1.0])
        c, fact = factorize_irreducible(3 * U, form1, form2)
        assert c == pytest.approx(3.0, rel=1e-12)
        assert rel_err(fact.h.values, h) <= 1e-12
        assert np.array_equal(fact.j.mapping, j.mapping)

    def test_eight_states(self):
        rng = np.random.default_rng(8)
        form1, h, j, phi = random_triple(rng, 8, 1)
        U, form2 = synthesize(form1, h, j, phi)
        c, fact = factorize_irreducible(U, form1, form2)
        assert c == pytest.approx(phi[0], rel=1e-8)
        # U = c U_j U_h; the unitary part carries h scaled by nothing
        assert rel_err(fact.h.values, h) <= 1e-8
        assert np.array_equal(fact.j.mapping, j.mapping)

    def test_reducible(self, two_triangles):
        with pytest.raises(ValidationError, match="reducible"):
            factorize_irreducible(identity(two_triangles.space), two_triangles, two_triangles)


class TestFactorize:
    def test_unitary_reduces(self, rng):
        form1, h, j, _ = random_triple(rng, 7, 2)
        U, form2 = synthesize(form1, h, j, np.ones(2))
        fact = factorize(U, form1, form2)
        np.testing.assert_allclose(fact.phi.values(), 1.0, rtol=1e-12)
        ref = factorize_unitary(U, form1, form2)
        assert rel_err(fact.h.values, ref.h.values) <= 1e-12
        assert np.array_equal(fact.j.mapping, ref.j.mapping)

    def test_single_component_matches_irreducible(self, rng):
        form1, h, j, phi = random_triple(rng, 6, 1)
        U, form2 = synthesize(form1, h, j, phi)
        fact = factorize(U, form1, form2)
        c, _ = factorize_irreducible(U, form1, form2)
        np.testing.assert_allclose(fact.phi.values(), c, rtol=1e-12)

    def test_two_components_step(self):
        rng = np.random.default_rng(42)
        form1, h, j, _ = random_triple(rng, 9, 2)
        U, form2 = synthesize(form1, h, j, [2.0, 0.5])
        assert dense_generator_residual(dense_iso(U.s, U.tau), form1, form2) <= 1e-12
        fact = factorize(U, form1, form2)
        assert rel_err(fact.phi.constants, [2.0, 0.5]) <= 1e-9
        assert rel_err(fact.h.values, h) <= 1e-9
        assert np.array_equal(fact.j.mapping, j.mapping)
        assert fact.diagnostics["reconstruction_residual"] <= 1e-9
        assert fact.diagnostics["h_identity_residual"] <= 1e-12

    def test_not_intertwining(self, rng):
        form1 = random_form(rng, 6, 2)
        form2 = random_form(rng, 6, 2, prefix="y")
        with pytest.raises(NotIntertwiningError):
            factorize(random_iso(rng, form1.space, form2.space), form1, form2)

    def test_edgeless_diagonal(self, rng):
        space = StateSpace(tuple("abcd"), rng.uniform(0.5, 2, 4))
        form = DirichletForm(space, np.zeros((4, 4)))
        target = StateSpace(tuple("pqrs"), rng.uniform(0.5, 2, 4))
        form2 = DirichletForm(target, np.zeros((4, 4)))
        U = random_iso(rng, space, target)
        assert intertwines(U, form, form2).ok
        fact = factorize(U, form, form2)
        assert fact.phi.constants.size == 4
        assert fact.diagnostics["reconstruction_residual"] <= 1e-12
        assert is_unitary(from_Uj(fact.j))

    def test_rescaled_triple_gives_same_operator(self, rng):
        form1, h, j, phi = random_triple(rng, 6, 1)
        U, form2 = synthesize(form1, h, j, phi)
        lam = 1.7
        j_lam = Relabeling.onto_labels(
            form1.space.with_measure((lam * h) ** 2 * form1.measure), j.mapping, j.target.labels
        )
        U2, form2b = synthesize(form1, lam * h, j_lam, lam * phi)
        np.testing.assert_allclose(U2.s, U.s, rtol=1e-14)
        assert np.array_equal(U2.tau, U.tau)
        np.testing.assert_allclose(form2b.measure, lam**2 * form2.measure, rtol=1e-14)
        # dividing phi by lam instead overshoots by lam^2
        U3, _ = synthesize(form1, lam * h, j_lam, phi / lam)
        np.testing.assert_allclose(U3.s, lam**2 * U.s, rtol=1e-14)
        fact = factorize(U2, form1, form2b)
        assert rel_err(fact.h.values, lam * h) <= 1e-9
        assert rel_err(fact.phi.constants, lam * phi) <= 1e-9


class TestComponentwise:
    def test_one_component(self, rng):
        form1, h, j, phi = random_triple(rng, 5, 1)
        U, form2 = synthesize(form1, h, j, phi)
        parts = factorize_componentwise(U, form1, form2)
        assert len(parts) == 1
        assert rel_err(parts[0].h, h) <= 1e-9
        assert parts[0].norm == pytest.approx(phi[0], rel=1e-9)

    def test_phi_only(self, two_triangles):
        U, form2 = synthesize(two_triangles, np.ones(6), Relabeling.identity(two_triangles.space), [2.0, 0.25])
        parts = factorize_componentwise(U, two_triangles, form2)
        assert [p.norm for p in parts] == pytest.approx([2.0, 0.25], rel=1e-12)

    def test_three_components(self):
        rng = np.random.default_rng(33)
        form1, h, j, phi = random_triple(rng, 12, 3)
        U, form2 = synthesize(form1, h, j, phi)
        parts = factorize_componentwise(U, form1, form2)
        assert len(parts) == 3
        for p in parts:
            assert p.residual <= 1e-9
            assert p.intertwining_residual <= 1e-10


class TestSynthesize:
    def test_identity(self, chain3):
        U, form2 = synthesize(chain3, np.ones(3), Relabeling.identity(chain3.space), [1.0])
        np.testing.assert_allclose(U.s, 1.0)
        assert np.array_equal(U.tau, np.arange(3))
        assert form2.coefficients_close(chain3, rtol=1e-15)

    def test_permutation(self, rng, chain3):
        space = StateSpace(chain3.space.labels, [1.0, 1.0, 1.0])
        form = DirichletForm(space, chain3.conductances, chain3.killing)
        j = Relabeling(space, space, [1, 0, 2])
        U, form2 = synthesize(form, np.ones(3), j, [1.0])
        assert np.array_equal(U.tau, [1, 0, 2])
        assert intertwines(U, form, form2).ok

    def test_ten_states_two_components(self):
        rng = np.random.default_rng(10)
        form1, h, j, phi = random_triple(rng, 10, 2)
        U, form2 = synthesize(form1, h, j, phi)
        assert intertwines(U, form1, form2).residual < 1e-10

    def test_wrong_phi_shape(self, rng):
        form1, h, j, _ = random_triple(rng, 6, 2)
        with pytest.raises(ValidationError):
            synthesize(form1, h, j, [1.0, 2.0, 3.0])


class TestUniqueness:
    def setup_method(self):
        rng = np.random.default_rng(99)
        self.form1, h, j, phi = random_triple(rng, 8, 2)
        self.U, self.form2 = synthesize(self.form1, h, j, phi)
        self.fact = factorize(self.U, self.form1, self.form2)

    def test_same(self):
        assert check_uniqueness(self.U, self.fact, self.fact)

    def test_rerun(self):
        again = factorize(self.U, self.form1, self.form2)
        assert check_uniqueness(self.U, self.fact, again)

    def test_perturbed_h(self):
        bad_h = ExcessiveFunction(self.fact.h.values * (1 + 1e-3))
        bad = Factorization(self.fact.source, bad_h, self.fact.j, self.fact.phi)
        with pytest.raises(ReconstructionError):
            check_uniqueness(self.U, self.fact, bad)

    def test_perturbed_phi(self):
        phi = self.fact.phi
        bumped = StepScaling(phi.space, phi.decomposition, phi.constants * (1 + 1e-3))
        bad = Factorization(self.fact.source, self.fact.h, self.fact.j, bumped)
        with pytest.raises(ReconstructionError, match="second"):
            check_uniqueness(self.U, self.fact, bad)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_round_trip_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 30))
    k = int(rng.integers(1, min(n, 5) + 1))
    form1, h, j, phi = random_triple(rng, n, k, with_killing=bool(rng.integers(0, 2)))
    U, form2 = synthesize(form1, h, j, phi)
    fact = factorize(U, form1, form2)
    dec2 = irreducible_decomposition(form2)
    assert rel_err(fact.h.values, h) <= 1e-8
    assert rel_err(fact.phi.values(), np.asarray(phi)[dec2.component_index]) <= 1e-8
    assert np.array_equal(fact.j.mapping, j.mapping)
    assert fact.diagnostics["reconstruction_residual"] <= 1e-9
    unitary = np.allclose(phi, 1.0, rtol=1e-12, atol=0)
    assert is_unitary(U, form1, form2, rtol=1e-9) == unitary


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_random_isomorphisms_rejected(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 15))
    form1 = random_form(rng, n, int(rng.integers(1, n + 1)))
    form2 = random_form(rng, n, int(rng.integers(1, n + 1)), prefix="y")
    U = random_iso(rng, form1.space, form2.space)
    try:
        factorize(U, form1, form2)
    except (NotIntertwiningError, ComponentNormError):
        return
    assert dense_generator_residual(dense_iso(U.s, U.tau), form1, form2) <= 1e-9
