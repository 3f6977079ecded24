"""Order isomorphisms between finite L^2 spaces.

With full-support measures on finite sets every order isomorphism has the
form ``U f = (f / s) o tau^{-1}`` for a positive scaling ``s`` on the source
and a bijection ``tau`` of states, so ``(U f)(tau(x)) = f(x) / s(x)``. As a
matrix, ``U[tau(x), x] = 1 / s(x)`` and all other entries vanish.

Composition law, for ``U1 = (s1, tau1)`` and ``U2 = (s2, tau2)``::

    U2 U1 = (s1 * (s2 o tau1), tau2 o tau1)
"""

from dataclasses import dataclass, field

import numpy as np

from ._config import SIGN_TOL, default_rtol
from .errors import ComponentNormError, NotInvariantError, ValidationError
from .forms import StateSpace, semigroup_matrix
from .invariants import as_mask, cut_is_zero
from .transforms import Relabeling, _values

__all__ = [
    "OrderIsomorphism",
    "StepScaling",
    "IntertwiningReport",
    "apply",
    "apply_inverse",
    "compose",
    "inverse",
    "identity",
    "from_Uh",
    "from_Uj",
    "from_Uphi",
    "intertwines",
    "generator_residual",
    "is_unitary",
    "restrict",
    "image_mask",
    "operator_norm_on_component",
]


@dataclass(frozen=True, eq=False)
class OrderIsomorphism:
    source: StateSpace
    target: StateSpace
    s: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        n = self.source.n
        if self.target.n != n:
            raise ValidationError(
                f"order isomorphism between spaces of sizes {n} and {self.target.n}"
            )
        s = np.array(self.s, dtype=float, copy=True)
        tau = np.array(self.tau, dtype=int, copy=True)
        if s.shape != (n,) or tau.shape != (n,):
            raise ValidationError(f"scaling and transformation must have length {n}")
        if not (np.all(np.isfinite(s)) and np.all(s > 0)):
            raise ValidationError("scaling must be finite and strictly positive")
        if not np.array_equal(np.sort(tau), np.arange(n)):
            raise ValidationError("transformation is not a bijection")
        s.flags.writeable = False
        tau.flags.writeable = False
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "tau", tau)

    @property
    def n(self):
        return self.source.n

    @property
    def tau_inverse(self):
        inv = np.empty_like(self.tau)
        inv[self.tau] = np.arange(self.n)
        return inv

    def matrix(self):
        u = np.zeros((self.n, self.n))
        u[self.tau, np.arange(self.n)] = 1.0 / self.s
        return u

    def __call__(self, f):
        return apply(self, f)

    def __mul__(self, c):
        """``c * U`` for a positive scalar ``c``."""
        return OrderIsomorphism(self.source, self.target, self.s / float(c), self.tau)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return OrderIsomorphism(self.source, self.target, self.s * float(c), self.tau)

    def tau_dict(self):
        return {
            self.source.labels[x]: self.target.labels[y] for x, y in enumerate(self.tau)
        }


def apply(U, f):
    f = np.asarray(f, dtype=float)
    if f.shape[0] != U.n:
        raise ValidationError(f"f has {f.shape[0]} entries, expected {U.n}")
    out = np.empty_like(f)
    out[U.tau] = f / (U.s if f.ndim == 1 else U.s[:, None])
    return out


def apply_inverse(U, g):
    g = np.asarray(g, dtype=float)
    if g.shape[0] != U.n:
        raise ValidationError(f"g has {g.shape[0]} entries, expected {U.n}")
    return (U.s if g.ndim == 1 else U.s[:, None]) * g[U.tau]


def identity(space):
    return OrderIsomorphism(space, space, np.ones(space.n), np.arange(space.n))


def inverse(U):
    inv = U.tau_inverse
    return OrderIsomorphism(U.target, U.source, 1.0 / U.s[inv], inv)


def compose(U2, U1, rtol=SIGN_TOL):
    """``U2 o U1`` (apply ``U1`` first)."""
    if not U1.target.same_as(U2.source, rtol):
        raise ValidationError("cannot compose: target of U1 is not the source of U2")
    return OrderIsomorphism(U1.source, U2.target, U1.s * U2.s[U1.tau], U2.tau[U1.tau])


def from_Uh(space, h):
    """``f -> f / h`` from ``L^2(m)`` to ``L^2(h^2 m)``."""
    h = _values(h)
    return OrderIsomorphism(space, space.with_measure(h * h * space.measure), h, np.arange(space.n))


def from_Uj(j: Relabeling):
    """``f -> f o j^{-1}``."""
    return OrderIsomorphism(j.source, j.target, np.ones(j.source.n), j.mapping)


def from_Uphi(phi, space=None):
    """``f -> phi f`` on the target space of the step scaling."""
    space = phi.space if space is None else space
    return OrderIsomorphism(space, space, 1.0 / phi.values(), np.arange(space.n))


@dataclass(frozen=True, eq=False)
class StepScaling:
    """Positive constant per irreducible component of a form."""

    space: StateSpace
    decomposition: object
    constants: np.ndarray

    def __post_init__(self):
        c = np.array(self.constants, dtype=float, copy=True)
        if c.shape != (self.decomposition.n_components,):
            raise ValidationError(
                f"expected {self.decomposition.n_components} constants, got {c.shape}"
            )
        if not (np.all(np.isfinite(c)) and np.all(c > 0)):
            raise ValidationError("step constants must be finite and strictly positive")
        c.flags.writeable = False
        object.__setattr__(self, "constants", c)

    @classmethod
    def ones(cls, form):
        from .invariants import irreducible_decomposition

        dec = irreducible_decomposition(form)
        return cls(form.space, dec, np.ones(dec.n_components))

    def values(self):
        """The step function as a per-state vector."""
        return self.constants[self.decomposition.component_index]

    def bound(self):
        """Smallest ``c >= 1`` with all constants in ``[1/c, c]``."""
        if self.constants.size == 0:
            return 1.0
        return float(max(self.constants.max(), 1.0 / self.constants.min(), 1.0))


@dataclass
class IntertwiningReport:
    ok: bool
    residual: float
    tolerance: float
    grid_residual: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def _check_spaces(U, form1, form2):
    if U.source.labels != form1.space.labels or U.target.labels != form2.space.labels:
        raise ValidationError("order isomorphism does not map form1's space to form2's")


def generator_residual(U, form1, form2):
    """Relative max-entry residual of ``U L1 - L2 U``."""
    _check_spaces(U, form1, form2)
    l1 = form1.generator.matrix
    l2 = form2.generator.matrix
    inv = U.tau_inverse
    # (U L1)[a, y] = L1[inv a, y] / s[inv a];  (L2 U)[a, y] = L2[a, tau y] / s[y]
    left = l1[inv] / U.s[inv][:, None]
    right = l2[:, U.tau] / U.s[None, :]
    scale = max(np.max(np.abs(left), initial=0.0), np.max(np.abs(right), initial=0.0), 1e-300)
    return float(np.max(np.abs(left - right), initial=0.0) / scale)


def intertwines(U, form1, form2, rtol=None, t_grid=()):
    """Generator-level intertwining ``U L1 = L2 U``.

    Optionally also reports the semigroup residual
    ``max|U T1_t - T2_t U| / max|U|`` on ``t_grid`` as an oracle.
    """
    rtol = default_rtol() if rtol is None else rtol
    residual = generator_residual(U, form1, form2)
    grid = {}
    if len(t_grid):
        u = U.matrix()
        scale = float(np.max(np.abs(u)))
        for t in t_grid:
            diff = u @ semigroup_matrix(form1, t) - semigroup_matrix(form2, t) @ u
            grid[float(t)] = float(np.max(np.abs(diff)) / scale)
    return IntertwiningReport(bool(residual <= rtol), residual, rtol, grid)


def is_unitary(U, form1=None, form2=None, rtol=SIGN_TOL):
    """Pointwise criterion ``m2(tau(x)) = s(x)^2 m1(x)``."""
    m1 = (form1.space if form1 is not None else U.source).measure
    m2 = (form2.space if form2 is not None else U.target).measure
    lhs = m2[U.tau]
    rhs = U.s**2 * m1
    return bool(np.all(np.abs(lhs - rhs) <= rtol * np.abs(rhs)))


def restrict(U, form1, subset):
    """Restriction of ``U`` to an invariant set ``A``, mapping ``A`` onto ``tau(A)``."""
    mask = as_mask(subset, form1.n)
    if not cut_is_zero(form1, mask):
        raise NotInvariantError("cannot restrict: subset is not invariant for form1")
    src = np.flatnonzero(mask)
    image_mask = np.zeros(U.n, dtype=bool)
    image_mask[U.tau[src]] = True
    dst = np.flatnonzero(image_mask)
    position = np.empty(U.n, dtype=int)
    position[dst] = np.arange(dst.size)
    return OrderIsomorphism(
        U.source.subspace(mask),
        U.target.subspace(image_mask),
        U.s[src],
        position[U.tau[src]],
    )


def image_mask(U, subset):
    mask = as_mask(subset, U.n)
    out = np.zeros(U.n, dtype=bool)
    out[U.tau[mask]] = True
    return out


def operator_norm_on_component(U, subset, rtol=None):
    """Norm of ``U`` restricted to an irreducible component.

    On such a component ``U* U`` is multiplication by
    ``m2(tau x) / (s(x)^2 m1(x))``, and intertwining forces that ratio to be
    constant; its square root is the norm. A non-constant ratio means ``U``
    cannot intertwine and raises :class:`ComponentNormError`.
    """
    rtol = default_rtol() if rtol is None else rtol
    mask = as_mask(subset, U.n)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValidationError("empty component")
    ratio = U.target.measure[U.tau[idx]] / (U.s[idx] ** 2 * U.source.measure[idx])
    spread = float((ratio.max() - ratio.min()) / ratio.min())
    if spread > rtol:
        raise ComponentNormError(
            f"scaling ratio varies by {spread:.3e} across a component", residual=spread
        )
    return float(np.sqrt(ratio[0]))
