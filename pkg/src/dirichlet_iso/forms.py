"""Finite measured state spaces and Dirichlet forms on them.

On a finite set every symmetric Markovian closed form is a weighted graph
with killing::

    E(f, g) = 1/2 sum_{x != y} c(x, y) (f(x) - f(y)) (g(x) - g(y))
              + sum_x k(x) f(x) g(x)

and its generator with respect to the reference measure ``m`` is::

    L f(x) = (1 / m(x)) [sum_y c(x, y) (f(x) - f(y)) + k(x) f(x)]

so that ``E(f, g) = (L f, g)_m``. The semigroup ``T_t = exp(-t L)`` is
computed from the spectral decomposition of the symmetric matrix
``M^{1/2} L M^{-1/2}``.
"""

from dataclasses import InitVar, dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from ._config import DEFAULT_T_GRID, MAX_STATES, SIGN_TOL, default_rtol
from .errors import ValidationError

__all__ = [
    "StateSpace",
    "DirichletForm",
    "Generator",
    "MarkovReport",
    "build_generator",
    "energy",
    "energy1",
    "inner",
    "semigroup_apply",
    "semigroup_matrix",
    "is_markovian",
]


def _frozen(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def as_vector(space, f, name="f"):
    """Coerce ``f`` to a float vector over ``space``."""
    arr = np.asarray(f, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != space.n:
        raise ValidationError(
            f"{name} has shape {arr.shape}, expected ({space.n},)"
        )
    return arr


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Ordered finite state set with strictly positive weights."""

    labels: tuple
    measure: np.ndarray
    max_states: InitVar[int] = MAX_STATES

    def __post_init__(self, max_states):
        labels = tuple(str(x) for x in self.labels)
        if len(set(labels)) != len(labels):
            seen = set()
            dup = next(x for x in labels if x in seen or seen.add(x))
            raise ValidationError(f"duplicate state label {dup!r}")
        measure = np.asarray(self.measure, dtype=float)
        if measure.ndim != 1 or measure.shape[0] != len(labels):
            raise ValidationError(
                f"measure has shape {measure.shape}, expected ({len(labels)},)"
            )
        if len(labels) > max_states:
            raise ValidationError(
                f"{len(labels)} states exceeds the cap of {max_states}"
            )
        if not np.all(np.isfinite(measure)) or np.any(measure <= 0):
            bad = int(np.flatnonzero(~(np.isfinite(measure) & (measure > 0)))[0])
            raise ValidationError(
                f"measure must be finite and strictly positive; "
                f"state {labels[bad]!r} has weight {measure[bad]!r}"
            )
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "measure", _frozen(measure))

    @classmethod
    def uniform(cls, n, prefix="x"):
        return cls(tuple(f"{prefix}{i}" for i in range(n)), np.ones(n))

    @property
    def n(self):
        return len(self.labels)

    @cached_property
    def index(self):
        """Map label -> position."""
        return {label: i for i, label in enumerate(self.labels)}

    def inner(self, f, g):
        """m-weighted inner product (f, g)_m."""
        return float(np.sum(self.measure * f * g))

    def norm(self, f):
        return float(np.sqrt(self.inner(f, f)))

    def subspace(self, mask):
        """Sub-space on the states selected by a boolean mask."""
        idx = np.flatnonzero(mask)
        return StateSpace(tuple(self.labels[i] for i in idx), self.measure[idx])

    def with_measure(self, measure):
        return StateSpace(self.labels, measure)

    def same_as(self, other, rtol=SIGN_TOL):
        """Same labels in the same order and measures equal to ``rtol``."""
        if self is other:
            return True
        if self.labels != other.labels:
            return False
        return bool(
            np.all(np.abs(self.measure - other.measure) <= rtol * np.abs(other.measure))
        )


@dataclass(frozen=True, eq=False)
class Generator:
    """Generator matrix ``L`` of a Dirichlet form, acting on column vectors."""

    space: StateSpace
    matrix: np.ndarray

    def __call__(self, f):
        return self.matrix @ as_vector(self.space, f)

    def symmetry_defect(self):
        """max |M L - (M L)^T|, zero up to rounding for a valid form."""
        ml = self.space.measure[:, None] * self.matrix
        return float(np.max(np.abs(ml - ml.T), initial=0.0))


@dataclass(frozen=True, eq=False)
class DirichletForm:
    """Symmetric conductances plus killing over a :class:`StateSpace`.

    Instances are immutable. Pass ``check=False`` to skip validation; this
    exists for building deliberately corrupted forms in sanity checks.
    """

    space: StateSpace
    conductances: np.ndarray
    killing: np.ndarray = None
    check: InitVar[bool] = True

    def __post_init__(self, check):
        n = self.space.n
        c = np.asarray(self.conductances, dtype=float)
        k = np.zeros(n) if self.killing is None else np.asarray(self.killing, dtype=float)
        if c.shape != (n, n):
            raise ValidationError(f"conductances have shape {c.shape}, expected ({n}, {n})")
        if k.shape != (n,):
            raise ValidationError(f"killing has shape {k.shape}, expected ({n},)")
        if check:
            if not (np.all(np.isfinite(c)) and np.all(np.isfinite(k))):
                raise ValidationError("conductances and killing must be finite")
            if np.any(np.diag(c) != 0):
                raise ValidationError("conductances must have a zero diagonal")
            if not np.array_equal(c, c.T):
                raise ValidationError("conductances must be symmetric")
            if np.any(c < 0):
                x, y = np.argwhere(c < 0)[0]
                raise ValidationError(
                    f"negative conductance between {self.space.labels[x]!r} "
                    f"and {self.space.labels[y]!r}"
                )
            if np.any(k < 0):
                x = int(np.flatnonzero(k < 0)[0])
                raise ValidationError(f"negative killing at {self.space.labels[x]!r}")
        object.__setattr__(self, "conductances", _frozen(c))
        object.__setattr__(self, "killing", _frozen(k))

    @classmethod
    def from_edges(cls, space, edges, killing=None):
        """Build from ``(x, y, value)`` triplets given by index or label."""
        n = space.n
        c = np.zeros((n, n))
        for x, y, value in edges:
            i = space.index[x] if isinstance(x, str) else int(x)
            j = space.index[y] if isinstance(y, str) else int(y)
            c[i, j] = c[j, i] = value
        return cls(space, c, killing)

    @property
    def n(self):
        return self.space.n

    @property
    def measure(self):
        return self.space.measure

    @cached_property
    def generator(self):
        return build_generator(self)

    @cached_property
    def _spectrum(self):
        # S = M^{1/2} L M^{-1/2} is symmetric when M L is.
        root = np.sqrt(self.measure)
        ml = self.measure[:, None] * self.generator.matrix
        ml = 0.5 * (ml + ml.T)
        sym = ml / root[:, None] / root[None, :]
        evals, evecs = np.linalg.eigh(sym)
        return evals, evecs, root

    def energy(self, f, g=None):
        return energy(self, f, f if g is None else g)

    def semigroup(self, t, f):
        return semigroup_apply(self, t, f)

    def coefficients_close(self, other, rtol=None):
        """Same labels, and measure/conductances/killing equal to ``rtol``."""
        rtol = default_rtol() if rtol is None else rtol
        if self.space.labels != other.space.labels:
            return False
        scale = max(
            np.max(np.abs(self.conductances), initial=0.0),
            np.max(np.abs(self.killing), initial=0.0),
            np.max(self.measure),
        )
        return bool(
            np.allclose(self.measure, other.measure, rtol=rtol, atol=0)
            and np.max(np.abs(self.conductances - other.conductances), initial=0.0) <= rtol * scale
            and np.max(np.abs(self.killing - other.killing), initial=0.0) <= rtol * scale
        )


def build_generator(form):
    """Generator matrix of ``form`` w.r.t. its reference measure."""
    c = form.conductances
    if c.shape != (form.n, form.n):
        raise ValidationError("conductance matrix does not match the state space")
    ml = np.diag(c.sum(axis=1) + form.killing) - c
    return Generator(form.space, ml / form.measure[:, None])


def inner(space, f, g):
    return space.inner(as_vector(space, f), as_vector(space, g, "g"))


def energy(form, f, g):
    """E(f, g) evaluated directly from conductances and killing."""
    f = as_vector(form.space, f)
    g = as_vector(form.space, g, "g")
    df = f[:, None] - f[None, :]
    dg = g[:, None] - g[None, :]
    return float(0.5 * np.sum(form.conductances * df * dg) + np.sum(form.killing * f * g))


def energy1(form, f, g):
    """E_1(f, g) = E(f, g) + (f, g)_m."""
    return energy(form, f, g) + inner(form.space, f, g)


def semigroup_matrix(form, t):
    """Dense matrix of ``T_t = exp(-t L)``."""
    if not t >= 0:
        raise ValueError(f"time must be nonnegative, got {t!r}")
    evals, evecs, root = form._spectrum
    # tiny negative eigenvalues are rounding noise of a PSD operator
    decay = np.exp(-t * np.maximum(evals, 0.0))
    sym = (evecs * decay) @ evecs.T
    return sym / root[:, None] * root[None, :]


def semigroup_apply(form, t, f):
    """``T_t f`` for a single vector (or a matrix of column vectors)."""
    if not t >= 0:
        raise ValueError(f"time must be nonnegative, got {t!r}")
    f = np.asarray(f, dtype=float)
    if f.shape[0] != form.n:
        raise ValidationError(f"f has {f.shape[0]} entries, expected {form.n}")
    if t == 0:
        return f.copy()
    evals, evecs, root = form._spectrum
    decay = np.exp(-t * np.maximum(evals, 0.0))
    if f.ndim == 1:
        return (evecs @ (decay * (evecs.T @ (root * f)))) / root
    return (evecs @ (decay[:, None] * (evecs.T @ (root[:, None] * f)))) / root[:, None]


@dataclass
class MarkovReport:
    ok: bool
    per_t: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def is_markovian(form, t_grid=DEFAULT_T_GRID, tol=SIGN_TOL):
    """Numerically check positivity and ``T_t 1 <= 1`` on a time grid.

    Works on unvalidated forms too, which is the point: a corrupted form
    with a positive off-diagonal generator entry fails here.
    """
    per_t = []
    ok = True
    for t in t_grid:
        # scipy's expm, not the spectral path: this must work for
        # non-symmetric (corrupted) generators as well
        p = expm(-float(t) * form.generator.matrix)
        min_entry = float(p.min())
        max_mass = float(p.sum(axis=1).max())
        good = bool(min_entry >= -tol and max_mass <= 1 + tol)
        ok = ok and good
        per_t.append({"t": float(t), "min_entry": min_entry, "max_mass": max_mass, "ok": good})
    return MarkovReport(ok, per_t)

