"""Excessive functions, h-transforms and measure-preserving relabelings.

For an excessive ``h`` (strictly positive with ``T_t h <= h``) the
h-transformed form ``E^h(f, g) = E(f h, g h)`` lives on the measure
``h^2 m``. Expanding the energy gives its coefficients::

    c^h(x, y) = c(x, y) h(x) h(y)
    k^h(x)    = h(x) m(x) (L h)(x)

The killing is nonnegative exactly when ``L h >= 0``, which on a finite set
is equivalent to excessiveness: ``d/dt T_t h = -T_t L h`` and ``T_t`` is
positivity preserving, so ``L h >= 0`` forces ``T_t h`` to decrease, and
conversely ``L h = lim (h - T_t h) / t``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._config import DEFAULT_T_GRID, SIGN_TOL
from .errors import NotExcessiveError, ValidationError
from .forms import DirichletForm, StateSpace, as_vector, semigroup_apply

__all__ = [
    "ExcessiveFunction",
    "ExcessiveReport",
    "Relabeling",
    "is_excessive",
    "certify_excessive",
    "h_transform",
    "h_semigroup",
    "apply_Uh",
    "apply_Uh_inverse",
    "pushforward_form",
    "apply_Uj",
    "apply_Uj_inverse",
]


@dataclass(frozen=True, eq=False)
class ExcessiveFunction:
    """Strictly positive finite vector, optionally certified excessive."""

    values: np.ndarray
    certified: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        _check_positive(values)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.values.shape[0]


def _check_positive(h):
    bad = ~(np.isfinite(h) & (h > 0))
    if h.ndim != 1:
        raise ValidationError("h must be a vector")
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NotExcessiveError(f"h must be finite and strictly positive; h[{i}] = {h[i]!r}", index=i)


def _values(h):
    return h.values if isinstance(h, ExcessiveFunction) else np.asarray(h, dtype=float)


@dataclass
class ExcessiveReport:
    ok: bool
    min_generator: float
    tolerance: float
    grid_max_excess: dict = field(default_factory=dict)

    @property
    def grid_ok(self):
        return all(v <= self.tolerance for v in self.grid_max_excess.values())

    def __bool__(self):
        return self.ok


def _generator_tolerance(form, h, tol):
    scale = np.max(np.abs(form.generator.matrix), initial=0.0) * float(np.max(h))
    return tol * max(scale, 1.0)


def is_excessive(form, h, t_grid=DEFAULT_T_GRID, tol=SIGN_TOL):
    """Generator criterion ``min(L h) >= -tol``, plus a grid report of ``T_t h - h``.

    ``tol`` is relative to ``max|L| * max(h)``. The verdict is the
    generator criterion; the grid values are diagnostics.
    """
    h = as_vector(form.space, _values(h), "h")
    _check_positive(h)
    lh = form.generator.matrix @ h
    band = _generator_tolerance(form, h, tol)
    min_lh = float(lh.min()) if lh.size else 0.0
    grid = {}
    for t in t_grid:
        grid[float(t)] = float(np.max(semigroup_apply(form, t, h) - h, initial=-np.inf))
    return ExcessiveReport(bool(min_lh >= -band), min_lh, band, grid)


def certify_excessive(form, h, tol=SIGN_TOL):
    """Return ``h`` as a certified :class:`ExcessiveFunction` or raise."""
    report = is_excessive(form, h, t_grid=(), tol=tol)
    if not report.ok:
        lh = form.generator.matrix @ _values(h)
        i = int(np.argmin(lh))
        raise NotExcessiveError(
            f"h is not excessive: (Lh)({form.space.labels[i]!r}) = {lh[i]:.3e} < 0",
            index=i,
        )
    return ExcessiveFunction(_values(h), certified=True)


def h_transform(form, h, tol=SIGN_TOL):
    """The h-transformed form on ``(E, h^2 m)``."""
    h = certify_excessive(form, h, tol).values
    # m(x) (Lh)(x) from differences, so a locally constant h gives exact zeros
    m_lh = np.sum(form.conductances * (h[:, None] - h[None, :]), axis=1) + form.killing * h
    killing = h * m_lh
    # certified: any negative entry is rounding inside the tolerance band
    killing = np.maximum(killing, 0.0)
    return DirichletForm(
        form.space.with_measure(h * h * form.measure),
        form.conductances * np.outer(h, h),
        killing,
    )


def h_semigroup(form, h, t, f):
    """``T^h_t f = T_t(h f) / h``."""
    h = certify_excessive(form, h).values
    f = as_vector(form.space, f)
    return semigroup_apply(form, t, h * f) / h


def apply_Uh(h, f):
    """``f / h``: isometry from ``L^2(m)`` onto ``L^2(h^2 m)``."""
    h = _values(h)
    _check_positive(h)
    return np.asarray(f, dtype=float) / h


def apply_Uh_inverse(h, g):
    h = _values(h)
    _check_positive(h)
    return np.asarray(g, dtype=float) * h


@dataclass(frozen=True, eq=False)
class Relabeling:
    """Measure-preserving bijection ``j`` from ``source`` states to ``target`` states.

    ``mapping[x]`` is the target index of source state ``x``.
    """

    source: StateSpace
    target: StateSpace
    mapping: np.ndarray
    rtol: float = SIGN_TOL

    def __post_init__(self):
        mapping = np.array(self.mapping, dtype=int, copy=True)
        n = self.source.n
        if self.target.n != n:
            raise ValidationError(
                f"relabeling between spaces of sizes {n} and {self.target.n}"
            )
        if mapping.shape != (n,) or not np.array_equal(np.sort(mapping), np.arange(n)):
            raise ValidationError("relabeling map is not a bijection")
        pushed = self.target.measure[mapping]
        bad = np.abs(pushed - self.source.measure) > self.rtol * self.source.measure
        if np.any(bad):
            x = int(np.flatnonzero(bad)[0])
            raise ValidationError(
                f"relabeling is not measure-preserving at {self.source.labels[x]!r}: "
                f"{self.source.measure[x]!r} -> {pushed[x]!r}"
            )
        mapping.flags.writeable = False
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, space):
        return cls(space, space, np.arange(space.n))

    @classmethod
    def onto_labels(cls, source, mapping, labels):
        """Relabel ``source`` onto new labels; the target measure is pushed forward.

        ``labels[mapping[x]]`` becomes the name of source state ``x``.
        """
        mapping = np.asarray(mapping, dtype=int)
        measure = np.empty(source.n)
        measure[mapping] = source.measure
        return cls(source, StateSpace(tuple(labels), measure), mapping)

    @property
    def inverse_mapping(self):
        inv = np.empty_like(self.mapping)
        inv[self.mapping] = np.arange(self.mapping.size)
        return inv

    def as_dict(self):
        """Label mapping source -> target."""
        return {
            self.source.labels[x]: self.target.labels[y]
            for x, y in enumerate(self.mapping)
        }


def _require_source(form, j):
    if not form.space.same_as(j.source, j.rtol):
        raise ValidationError("form's state space does not match the relabeling source")


def pushforward_form(form, j):
    """Image of ``form`` under ``j``: ``E'(f, g) = E(f o j, g o j)``."""
    _require_source(form, j)
    inv = j.inverse_mapping
    return DirichletForm(
        j.target,
        form.conductances[np.ix_(inv, inv)],
        form.killing[inv],
    )


def apply_Uj(j, f):
    """``f o j^{-1}``."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] != j.source.n:
        raise ValidationError(f"f has {f.shape[0]} entries, expected {j.source.n}")
    return f[j.inverse_mapping]


def apply_Uj_inverse(j, g):
    g = np.asarray(g, dtype=float)
    if g.shape[0] != j.target.n:
        raise ValidationError(f"g has {g.shape[0]} entries, expected {j.target.n}")
    return g[j.mapping]
