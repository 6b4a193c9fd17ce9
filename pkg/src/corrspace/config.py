"""Global numeric knobs: default tolerance and the dense-state size cap."""
from __future__ import annotations

import os

#: Default tolerance for approximate comparisons, overridable per call.
DEFAULT_TOL = 1e-9

#: Default cap on dense amplitude vectors (number of complex scalars).
DEFAULT_STATE_CAP = 1 << 20

#: Environment variable that overrides the dense-state cap.
CAP_ENV_VAR = "CORRSPACE_CAP"


def state_cap() -> int:
    """Return the dense-amplitude budget, honouring the ``CORRSPACE_CAP`` env var."""
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None:
        return DEFAULT_STATE_CAP
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{CAP_ENV_VAR} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ValueError(f"{CAP_ENV_VAR} must be positive, got {value}")
    return value
