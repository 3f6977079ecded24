"""Invariant sets, restrictions and the irreducible decomposition.

A set ``A`` is invariant when ``1_A T_t f = T_t(1_A f)`` for all ``t`` and
``f``. For a finite form this happens exactly when no conductance crosses
the cut ``(A, A^c)``, so invariant sets are unions of connected components
of the conductance graph and the irreducible decomposition is the list of
those components.

The absolute continuity hypothesis on transition kernels needed for the
decomposition in general holds automatically for a finite measure with full
support, so nothing is checked at runtime.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._config import DEFAULT_T_GRID, default_rtol
from .errors import NotInvariantError, ValidationError
from .forms import DirichletForm, semigroup_apply, semigroup_matrix

__all__ = [
    "StateSubset",
    "IrreducibleDecomposition",
    "as_mask",
    "cut_is_zero",
    "is_invariant",
    "irreducible_decomposition",
    "restrict_form",
    "restrict_semigroup",
]


@dataclass(frozen=True, eq=False)
class StateSubset:
    """Boolean membership mask over the states of a space."""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.ndim != 1:
            raise ValidationError("subset mask must be one-dimensional")
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_indices(cls, n, indices):
        mask = np.zeros(n, dtype=bool)
        mask[np.asarray(list(indices), dtype=int)] = True
        return cls(mask)

    @classmethod
    def full(cls, n):
        return cls(np.ones(n, dtype=bool))

    @property
    def indices(self):
        return np.flatnonzero(self.mask)

    def complement(self):
        return StateSubset(~self.mask)

    def __len__(self):
        return int(self.mask.sum())


def as_mask(subset, n):
    mask = subset.mask if isinstance(subset, StateSubset) else np.asarray(subset)
    if mask.dtype != bool:
        # allow index lists
        mask = StateSubset.from_indices(n, mask).mask
    if mask.shape != (n,):
        raise ValidationError(f"subset mask has shape {mask.shape}, expected ({n},)")
    return mask


@dataclass(frozen=True, eq=False)
class IrreducibleDecomposition:
    """Partition of the states into minimal invariant sets.

    Component ids are ordered by the smallest state index they contain.
    """

    component_index: np.ndarray

    def __post_init__(self):
        idx = np.array(self.component_index, dtype=int, copy=True)
        idx.flags.writeable = False
        object.__setattr__(self, "component_index", idx)

    @property
    def n_components(self):
        return int(self.component_index.max()) + 1 if self.component_index.size else 0

    @property
    def components(self):
        return [
            StateSubset(self.component_index == i) for i in range(self.n_components)
        ]

    def members(self, i):
        return np.flatnonzero(self.component_index == i)

    def as_sets(self):
        """Partition as a set of frozensets of state indices (order-free)."""
        return {frozenset(self.members(i).tolist()) for i in range(self.n_components)}


def cut_is_zero(form, mask):
    """True iff no conductance joins ``mask`` to its complement."""
    mask = as_mask(mask, form.n)
    return not np.any(form.conductances[np.ix_(mask, ~mask)] != 0)


def is_invariant(form, subset, t_grid=DEFAULT_T_GRID, rtol=None):
    """Decide invariance of ``subset``.

    The answer comes from the cut conductances. If ``t_grid`` is non-empty
    the semigroup identity ``1_A T_t f = T_t(1_A f)`` is also checked on the
    standard basis at each time, and both must agree.
    """
    mask = as_mask(subset, form.n)
    algebraic = cut_is_zero(form, mask)
    if not t_grid:
        return algebraic
    rtol = default_rtol() if rtol is None else rtol
    ind = mask.astype(float)
    for t in t_grid:
        p = semigroup_matrix(form, t)
        # columns are T_t e_y; compare 1_A T_t against T_t 1_A column-wise
        lhs = ind[:, None] * p
        rhs = p * ind[None, :]
        if np.max(np.abs(lhs - rhs), initial=0.0) > rtol:
            return False
    return algebraic


def irreducible_decomposition(form):
    """Connected components of the graph ``{c(x, y) > 0}``."""
    n = form.n
    if n == 0:
        return IrreducibleDecomposition(np.zeros(0, dtype=int))
    _, labels = connected_components(csr_matrix(form.conductances > 0), directed=False)
    # renumber by first appearance so ids follow the smallest member index
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    return IrreducibleDecomposition(relabel[labels])


def _require_invariant(form, mask):
    if not cut_is_zero(form, mask):
        raise NotInvariantError("subset is not invariant: a conductance crosses the cut")


def restrict_form(form, subset):
    """Restriction of ``form`` to an invariant subset, as a form on that subset."""
    mask = as_mask(subset, form.n)
    _require_invariant(form, mask)
    idx = np.flatnonzero(mask)
    return DirichletForm(
        form.space.subspace(mask),
        form.conductances[np.ix_(idx, idx)],
        form.killing[idx],
    )


def restrict_semigroup(form, subset, t, f_on_subset):
    """``T_t^A (f|_A) = T_t(f 1_A)|_A`` computed through the parent semigroup."""
    mask = as_mask(subset, form.n)
    _require_invariant(form, mask)
    f_on_subset = np.asarray(f_on_subset, dtype=float)
    if f_on_subset.shape != (int(mask.sum()),):
        raise ValidationError(
            f"function has shape {f_on_subset.shape}, expected ({int(mask.sum())},)"
        )
    full = np.zeros(form.n)
    full[mask] = f_on_subset
    return semigroup_apply(form, t, full)[mask]
