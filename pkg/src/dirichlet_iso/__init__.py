"""Finite-state Dirichlet forms and the factorization of order isomorphisms
that intertwine their semigroups into step scaling, relabeling and h-transform.
"""

from .errors import (
    ComponentNormError,
    DirichletError,
    NotExcessiveError,
    NotIntertwiningError,
    NotInvariantError,
    NotUnitaryError,
    ReconstructionError,
    RejectionError,
    SchemaError,
    ValidationError,
)
from .factorization import (
    ComponentFactorization,
    Factorization,
    check_uniqueness,
    factorize,
    factorize_componentwise,
    factorize_irreducible,
    factorize_unitary,
    reconstruction_residual,
    synthesize,
)
from .forms import (
    DirichletForm,
    Generator,
    StateSpace,
    build_generator,
    energy,
    energy1,
    is_markovian,
    semigroup_apply,
    semigroup_matrix,
)
from .invariants import (
    IrreducibleDecomposition,
    StateSubset,
    irreducible_decomposition,
    is_invariant,
    restrict_form,
    restrict_semigroup,
)
from .order_iso import (
    OrderIsomorphism,
    StepScaling,
    apply,
    apply_inverse,
    compose,
    from_Uh,
    from_Uj,
    from_Uphi,
    identity,
    intertwines,
    inverse,
    is_unitary,
    operator_norm_on_component,
    restrict,
)
from .transforms import (
    ExcessiveFunction,
    Relabeling,
    apply_Uh,
    apply_Uh_inverse,
    apply_Uj,
    apply_Uj_inverse,
    certify_excessive,
    h_semigroup,
    h_transform,
    is_excessive,
    pushforward_form,
)

__version__ = "0.1.0"
