"""Global numerical policy: tolerances and the Hilbert-space dimension cap."""

from __future__ import annotations

from .errors import ResourceLimitError

# Structural checks (projector, unitary, normalization) use this absolute
# tolerance; experiment-level comparisons take explicit tolerances instead.
ATOL_STRUCT = 1e-10

# Schmidt coefficients below this count as zero when computing ranks.
SCHMIDT_RANK_TOL = 1e-10

# The swap isometry doubles registers, so total dimensions grow fast; fail
# fast instead of thrashing.  Configurable via set_max_dim / --max-dim.
DEFAULT_MAX_DIM = 2**14

_max_dim = DEFAULT_MAX_DIM


def get_max_dim() -> int:
    return _max_dim


def set_max_dim(value: int) -> None:
    global _max_dim
    if value < 2:
        raise ValueError("dimension cap must be at least 2")
    _max_dim = int(value)


def check_dim(total: int, what: str = "computation") -> None:
    """Raise ResourceLimitError if a total dimension exceeds the cap."""
    if total > _max_dim:
        raise ResourceLimitError(
            f"{what} needs Hilbert-space dimension {total}, "
            f"above the cap {_max_dim} (raise it with set_max_dim/--max-dim)"
        )
