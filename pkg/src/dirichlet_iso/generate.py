"""Seeded random instances: forms, excessive functions and ground-truth triples."""

import numpy as np

from .errors import ValidationError
from .forms import DirichletForm, StateSpace
from .invariants import irreducible_decomposition
from .order_iso import OrderIsomorphism
from .transforms import Relabeling

__all__ = [
    "random_partition",
    "random_form",
    "random_excessive",
    "random_relabeling",
    "random_triple",
    "random_iso",
]


def random_partition(rng, n_states, n_components):
    """Component id per state; every component non-empty, states shuffled."""
    if not n_states >= n_components >= 1:
        raise ValidationError(
            f"need n_states >= n_components >= 1, got {n_states} and {n_components}"
        )
    ids = np.concatenate([
        np.arange(n_components),
        rng.integers(0, n_components, size=n_states - n_components),
    ])
    return rng.permutation(ids)


def random_form(rng, n_states, n_components=1, with_killing=True, prefix="x",
                edge_prob=0.3):
    """Random form whose conductance graph has exactly ``n_components`` components.

    Each component gets a random spanning tree plus extra edges with
    probability ``edge_prob``. Weights, measure and killing are O(1).
    """
    comp = random_partition(rng, n_states, n_components)
    c = np.zeros((n_states, n_states))
    for k in range(n_components):
        members = rng.permutation(np.flatnonzero(comp == k))
        for i in range(1, members.size):
            parent = members[rng.integers(0, i)]
            c[members[i], parent] = rng.uniform(0.5, 2.0)
        if members.size > 2:
            extra = rng.random((members.size, members.size)) < edge_prob
            w = rng.uniform(0.5, 2.0, size=extra.shape)
            block = np.where(np.triu(extra, 1), w, 0.0)
            sub = c[np.ix_(members, members)]
            c[np.ix_(members, members)] = np.where(sub > 0, sub, block)
    c = np.triu(c + c.T, 1)
    c = c + c.T
    measure = rng.uniform(0.5, 2.0, size=n_states)
    if with_killing:
        killing = np.where(rng.random(n_states) < 0.5, rng.uniform(0.1, 1.0, size=n_states), 0.0)
    else:
        killing = np.zeros(n_states)
    space = StateSpace(tuple(f"{prefix}{i}" for i in range(n_states)), measure)
    return DirichletForm(space, c, killing)


def random_excessive(rng, form):
    """A random excessive function for ``form``.

    On a component carrying killing, ``h = a + L_A^{-1} f`` with ``a > 0`` and
    ``f >= 0``, so ``L h = a k / m + f >= 0``. Without killing only
    harmonic (per-component constant) choices exist. The result is scaled to
    ``max(h) = 1``.
    """
    dec = irreducible_decomposition(form)
    lmat = form.generator.matrix
    h = np.empty(form.n)
    for i in range(dec.n_components):
        idx = dec.members(i)
        a = rng.uniform(0.5, 2.0)
        if np.any(form.killing[idx] > 0):
            f = np.where(rng.random(idx.size) < 0.7, rng.uniform(0.0, 1.0, size=idx.size), 0.0)
            h[idx] = a + np.linalg.solve(lmat[np.ix_(idx, idx)], f)
        else:
            h[idx] = a
    return h / h.max()


def random_relabeling(rng, space, prefix="y"):
    perm = rng.permutation(space.n)
    labels = [f"{prefix}{i}" for i in range(space.n)]
    return Relabeling.onto_labels(space, perm, labels)


def random_triple(rng, n_states, n_components, with_killing=True, unitary=False):
    """``(form1, h, j, phi_constants)`` satisfying every synthesis precondition.

    ``phi_constants`` are ordered by the component ids of the resulting
    target form, which are the images of ``form1``'s components under ``j``.
    """
    form1 = random_form(rng, n_states, n_components, with_killing)
    h = random_excessive(rng, form1)
    source_h = form1.space.with_measure(h * h * form1.measure)
    j = random_relabeling(rng, source_h)
    if unitary:
        phi = np.ones(n_components)
    else:
        phi = np.exp(rng.uniform(np.log(0.25), np.log(4.0), size=n_components))
    return form1, h, j, phi


def random_iso(rng, source, target, s_range=(0.25, 4.0)):
    """Random order isomorphism between equal-size spaces."""
    if source.n != target.n:
        raise ValidationError("spaces differ in size")
    s = np.exp(rng.uniform(np.log(s_range[0]), np.log(s_range[1]), size=source.n))
    return OrderIsomorphism(source, target, s, rng.permutation(source.n))
