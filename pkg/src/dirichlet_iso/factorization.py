"""Factor intertwining order isomorphisms into step scaling, relabeling and h-transform.

Given ``U = (s, tau)`` intertwining the semigroups of ``form1`` and
``form2``:

1. split the source into irreducible components ``A_n`` of ``form1``;
   their images ``tau(A_n)`` are the components of ``form2``;
2. on each component the ratio ``m2(tau x) / (s(x)^2 m1(x))`` is a
   constant ``c_n^2``; ``c_n`` is the norm of ``U`` there and ``phi`` is the
   step function equal to ``c_n`` on ``tau(A_n)``;
3. ``U~ = U_phi^{-1} U`` is unitary with scaling ``h = s * (phi o tau)``;
   ``h`` is excessive for ``form1`` and ``j = tau`` carries the
   h-transform of ``form1`` onto ``form2``.

The output triple is canonical given ``(U, form1, form2)``. The inputs of
:func:`synthesize` are not: ``(lam h, j, lam phi)`` produces the same ``U``
with ``form2`` rescaled by ``lam^2``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._config import default_rtol
from .errors import (
    NotInvariantError,
    NotIntertwiningError,
    NotUnitaryError,
    ReconstructionError,
    ValidationError,
)
from .forms import StateSpace
from .invariants import cut_is_zero, irreducible_decomposition, restrict_form
from .order_iso import (
    OrderIsomorphism,
    StepScaling,
    compose,
    from_Uh,
    from_Uj,
    from_Uphi,
    image_mask,
    intertwines,
    inverse,
    is_unitary,
    operator_norm_on_component,
    restrict,
)
from .transforms import (
    ExcessiveFunction,
    Relabeling,
    certify_excessive,
    h_transform,
    pushforward_form,
)

__all__ = [
    "Factorization",
    "ComponentFactorization",
    "reconstruction_residual",
    "factorize_unitary",
    "factorize_irreducible",
    "factorize",
    "factorize_componentwise",
    "synthesize",
    "check_uniqueness",
]


@dataclass(frozen=True, eq=False)
class Factorization:
    """``U = U_phi U_j U_h`` with diagnostics of every verified identity."""

    source: StateSpace
    h: ExcessiveFunction
    j: Relabeling
    phi: StepScaling
    diagnostics: dict = field(default_factory=dict)

    def reconstruct(self):
        """The order isomorphism ``U_phi U_j U_h``."""
        U_h = from_Uh(self.source, self.h)
        return compose(from_Uphi(self.phi), compose(from_Uj(self.j), U_h))


@dataclass(frozen=True, eq=False)
class ComponentFactorization:
    """``U_n = c_n U_{j_n} U_{h_n}`` on one irreducible component."""

    component: int
    norm: float
    h: np.ndarray
    j: Relabeling
    residual: float
    intertwining_residual: float


def reconstruction_residual(U, V):
    """Max over basis vectors ``e_x`` of ``|U e_x - V e_x|``, relative to ``max|U|``."""
    if U.n != V.n:
        raise ValidationError("operators act on spaces of different size")
    a, b = U.matrix(), V.matrix()
    scale = max(float(np.max(np.abs(a), initial=0.0)), 1e-300)
    return float(np.max(np.abs(a - b), initial=0.0) / scale)


def _require_intertwining(U, form1, form2, rtol):
    report = intertwines(U, form1, form2, rtol=rtol)
    if not report.ok:
        raise NotIntertwiningError(
            f"U does not intertwine the semigroups "
            f"(generator residual {report.residual:.3e} > {rtol:.1e})",
            residual=report.residual,
        )
    return report


def factorize_unitary(U, form1, form2, rtol=None):
    """``U = U_j U_h`` for a unitary intertwining ``U``; ``phi`` is identically 1."""
    rtol = default_rtol() if rtol is None else rtol
    report = _require_intertwining(U, form1, form2, rtol)
    # the measure identity is as exact as the caller's data; hold it to rtol
    if not is_unitary(U, form1, form2, rtol=rtol):
        raise NotUnitaryError("U is not unitary: m2(tau x) != s(x)^2 m1(x)")
    h = certify_excessive(form1, U.s)
    source_h = form1.space.with_measure(h.values**2 * form1.measure)
    j = Relabeling(source_h, form2.space, U.tau, rtol=rtol)
    pushed = pushforward_form(h_transform(form1, h), j)
    if not pushed.coefficients_close(form2, rtol=rtol):
        raise ReconstructionError("j does not carry the h-transform of form1 onto form2")
    phi = StepScaling.ones(form2)
    fact = Factorization(form1.space, h, j, phi)
    residual = reconstruction_residual(U, fact.reconstruct())
    if residual > rtol:
        raise ReconstructionError(f"factorization reproduces U only to {residual:.3e}")
    fact.diagnostics.update(
        generator_residual=report.residual,
        reconstruction_residual=residual,
        min_Lh=float(np.min(form1.generator.matrix @ h.values)),
    )
    return fact


def factorize_irreducible(U, form1, form2, rtol=None):
    """``U = c U_j U_h`` when ``form1`` is irreducible. Returns ``(c, factorization of U / c)``."""
    rtol = default_rtol() if rtol is None else rtol
    if irreducible_decomposition(form1).n_components != 1:
        raise ValidationError("form1 is reducible")
    _require_intertwining(U, form1, form2, rtol)
    c = operator_norm_on_component(U, np.ones(U.n, dtype=bool), rtol=rtol)
    return c, factorize_unitary(U / c, form1, form2, rtol=rtol)


def factorize(U, form1, form2, rtol=None):
    """Canonical ``(h, j, phi)`` with ``U = U_phi U_j U_h``."""
    rtol = default_rtol() if rtol is None else rtol
    report = _require_intertwining(U, form1, form2, rtol)
    dec1 = irreducible_decomposition(form1)
    dec2 = irreducible_decomposition(form2)

    images = [image_mask(U, comp) for comp in dec1.components]
    for mask in images:
        if not cut_is_zero(form2, mask):
            raise NotInvariantError("image of an irreducible component is not invariant")
    if {frozenset(np.flatnonzero(m).tolist()) for m in images} != dec2.as_sets():
        raise NotIntertwiningError("images of components are not the components of form2")

    constants = np.empty(dec2.n_components)
    for comp, mask in zip(dec1.components, images):
        target_id = dec2.component_index[np.flatnonzero(mask)[0]]
        constants[target_id] = operator_norm_on_component(U, comp, rtol=rtol)
    phi = StepScaling(form2.space, dec2, constants)

    U_tilde = compose(inverse(from_Uphi(phi)), U)
    unitary = factorize_unitary(U_tilde, form1, form2, rtol=rtol)
    fact = Factorization(form1.space, unitary.h, unitary.j, phi)

    residual = reconstruction_residual(U, fact.reconstruct())
    if residual > rtol:
        raise ReconstructionError(f"factorization reproduces U only to {residual:.3e}")
    h_check = U.s * phi.values()[U.tau]
    fact.diagnostics.update(
        generator_residual=report.residual,
        reconstruction_residual=residual,
        h_identity_residual=float(np.max(np.abs(h_check - fact.h.values) / fact.h.values)),
        n_components=dec1.n_components,
        component_norms=constants.tolist(),
        min_Lh=unitary.diagnostics["min_Lh"],
    )
    return fact


def factorize_componentwise(U, form1, form2, rtol=None):
    """Per-component ``U_n = c_n U_{j_n} U_{h_n}``, checked on each component."""
    rtol = default_rtol() if rtol is None else rtol
    fact = factorize(U, form1, form2, rtol=rtol)
    dec1 = irreducible_decomposition(form1)
    out = []
    for n, comp in enumerate(dec1.components):
        mask = comp.mask
        U_n = restrict(U, form1, mask)
        img = image_mask(U, mask)
        f1 = restrict_form(form1, mask)
        f2 = restrict_form(form2, img)
        c_n = operator_norm_on_component(U_n, np.ones(U_n.n, dtype=bool), rtol=rtol)
        h_n = fact.h.values[mask]
        j_n = restrict_relabeling(fact.j, mask)
        rebuilt = compose(from_Uj(j_n), from_Uh(f1.space, h_n)) * c_n
        residual = reconstruction_residual(U_n, rebuilt)
        inter = intertwines(U_n, f1, f2, rtol=rtol)
        if residual > rtol or not inter.ok:
            raise ReconstructionError(f"component {n}: factorization fails to reproduce U_n")
        out.append(ComponentFactorization(n, c_n, h_n, j_n, residual, inter.residual))
    return out


def restrict_relabeling(j, mask):
    src = np.flatnonzero(mask)
    img = np.zeros(j.source.n, dtype=bool)
    img[j.mapping[src]] = True
    position = np.empty(j.source.n, dtype=int)
    position[np.flatnonzero(img)] = np.arange(int(img.sum()))
    return Relabeling(
        j.source.subspace(mask), j.target.subspace(img), position[j.mapping[src]], rtol=j.rtol
    )


def synthesize(form1, h, j, phi):
    """Build ``(U, form2)`` from a triple.

    ``j`` must relabel the h-transformed space ``(E1, h^2 m1)``. ``phi`` is a
    :class:`StepScaling` on the resulting ``form2`` or an array of constants
    ordered by ``form2``'s component ids.
    """
    h = certify_excessive(form1, h)
    form2 = pushforward_form(h_transform(form1, h), j)
    if not isinstance(phi, StepScaling):
        dec2 = irreducible_decomposition(form2)
        phi = StepScaling(form2.space, dec2, np.asarray(phi, dtype=float))
    elif phi.space.labels != form2.space.labels:
        raise ValidationError("step scaling lives on a different space than form2")
    elif phi.decomposition.as_sets() != irreducible_decomposition(form2).as_sets():
        raise ValidationError("step scaling is not constant on the components of form2")
    U = compose(from_Uphi(phi, form2.space), compose(from_Uj(j), from_Uh(form1.space, h)))
    return U, form2


def check_uniqueness(U, fact1, fact2, rtol=None):
    """True iff two factorizations of ``U`` coincide (everywhere, at finite scale).

    Both must reproduce ``U`` within ``rtol``; otherwise
    :class:`ReconstructionError` is raised rather than returning a verdict.
    """
    rtol = default_rtol() if rtol is None else rtol
    for name, fact in (("first", fact1), ("second", fact2)):
        try:
            rebuilt = fact.reconstruct()
        except ValidationError as exc:
            raise ReconstructionError(f"{name} factorization is inconsistent: {exc}") from exc
        residual = reconstruction_residual(U, rebuilt)
        if residual > rtol:
            raise ReconstructionError(
                f"{name} factorization does not reproduce U (residual {residual:.3e})"
            )
    phi1, phi2 = fact1.phi.values(), fact2.phi.values()
    h1, h2 = fact1.h.values, fact2.h.values
    return bool(
        np.array_equal(fact1.j.mapping, fact2.j.mapping)
        and np.all(np.abs(phi1 - phi2) <= rtol * np.abs(phi2))
        and np.all(np.abs(h1 - h2) <= rtol * np.abs(h2))
    )
