import os

TOL_ENV_VAR = "DIRICHLET_ISO_TOL"

# relative tolerance for operator identities
DEFAULT_RTOL = 1e-9
# absolute tolerance for sign checks (positivity, sub-Markov bounds)
SIGN_TOL = 1e-12
MAX_STATES = 10_000
DEFAULT_T_GRID = (0.01, 0.1, 1.0, 10.0)


def default_rtol():
    """Operator-identity tolerance, overridable through ``DIRICHLET_ISO_TOL``."""
    raw = os.environ.get(TOL_ENV_VAR)
    if not raw:
        return DEFAULT_RTOL
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{TOL_ENV_VAR}={raw!r} is not a number") from None
    if not value > 0:
        raise ValueError(f"{TOL_ENV_VAR} must be positive, got {value}")
    return value
