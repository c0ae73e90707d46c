import os

from .errors import InputError

STOCH_TOL = 1e-12
SYM_TOL = 1e-12
EIG_TOL = 1e-9
ORTHO_TOL = 1e-10
# Eigenvalues of M closer than this are one eigenspace; also the snap width at 0 and 1.
CLUSTER_TOL = 1e-8

DEFAULT_SIZE_CAP = 4096
# Above this ambient dimension the walk is applied without materializing mu.
MATERIALIZE_LIMIT = 256
JOHNSON_CAP = 5000


def size_cap() -> int:
    """Dense-matrix cap, overridable through ``WALK_SIZE_CAP``."""
    raw = os.environ.get("WALK_SIZE_CAP")
    if raw is None or raw == "":
        return DEFAULT_SIZE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise InputError(f"WALK_SIZE_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise InputError(f"WALK_SIZE_CAP must be positive, got {cap}")
    return cap
