"""Schmidt-coefficient states and the per-block angle/tilt parameters.

The families built on top of these states pair consecutive coefficients
into 2x2 blocks; each block m carries angles theta_m (coefficient ratio),
mu_m = arctan(sin 2*theta_m) and the tilt alpha_m of the matching tilted
CHSH functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import PureState


@dataclass(frozen=True)
class SchmidtState:
    """Schmidt coefficients of a bipartite pure state, order preserved.

    All coefficients must be strictly positive: the self-tests assume
    0 < c_i < 1, and the block angles are undefined at zero ratios.
    """

    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "c", c)
        if c.size == 0 or np.any(c <= 0):
            raise ValidationError("all Schmidt coefficients must be > 0")
        if abs(np.sum(c**2) - 1.0) > 1e-12:
            raise ValidationError("squared coefficients must sum to 1 within 1e-12")
        c.setflags(write=False)

    @property
    def d(self) -> int:
        return self.c.size

    def joint_state(self, local_dim: int | None = None) -> PureState:
        """The vector sum_i c_i |ii>, optionally embedded in larger local
        spaces (extra amplitudes are zero)."""
        dim = self.d if local_dim is None else int(local_dim)
        if dim < self.d:
            raise ValidationError("local_dim smaller than the coefficient count")
        m = np.zeros((dim, dim), dtype=np.complex128)
        m[np.arange(self.d), np.arange(self.d)] = self.c
        return PureState((dim, dim), m.reshape(-1))


def make_state(c_raw) -> SchmidtState:
    """Normalize a list of positive reals to unit square-sum, order kept."""
    c = np.asarray(c_raw, dtype=np.float64).reshape(-1)
    if c.size == 0 or np.any(c <= 0):
        raise ValidationError("coefficients must be strictly positive")
    return SchmidtState(c / np.sqrt(np.sum(c**2)))


def psi_N(n: int) -> SchmidtState:
    """Truncated separating state: coefficients proportional to 1/(i+1)^8.

    The normalizing constant is always recomputed from the raw
    coefficients rather than taken in closed form.
    """
    if n < 1:
        raise ValidationError("N must be >= 1")
    i = np.arange(n, dtype=np.float64)
    return make_state(1.0 / (i + 1.0) ** 8)


def harmonic(n: int, r: int) -> float:
    """Generalized harmonic number H_n^(r) = sum_{k=1}^{n} k^-r."""
    if n < 1 or r < 1:
        raise ValidationError("harmonic requires n >= 1 and r >= 1")
    return math.fsum(1.0 / k**r for k in range(1, n + 1))


@dataclass(frozen=True)
class BlockParams:
    """Angles of one 2x2 coefficient block.

    alpha is the nonnegative tilt 2/sqrt(1 + 2 tan^2(2 theta)); the signed
    variant (negative once theta passes pi/4, i.e. when the second
    coefficient of the block dominates) is what makes the tilted functional
    attain its maximum, so both are carried.
    """

    m: int
    theta: float
    mu: float
    alpha: float

    def __post_init__(self):
        if not 0 < self.theta < math.pi / 2:
            raise ValidationError("theta must lie strictly inside (0, pi/2)")
        if not 0 < self.mu < math.pi / 2:
            raise ValidationError("mu must lie strictly inside (0, pi/2)")

    @property
    def alpha_signed(self) -> float:
        return self.alpha if self.theta <= math.pi / 4 else -self.alpha

    @property
    def max_quantum_value(self) -> float:
        return math.sqrt(8.0 + 2.0 * self.alpha**2)


def tilt_parameters(theta: float) -> tuple[float, float]:
    """(mu, alpha) for a block angle theta in (0, pi/2).

    alpha via the stable form 2|cos 2theta|/sqrt(1 + sin^2 2theta), which
    equals 2/sqrt(1 + 2 tan^2 2theta).
    """
    s2 = math.sin(2.0 * theta)
    mu = math.atan(s2)
    alpha = 2.0 * abs(math.cos(2.0 * theta)) / math.sqrt(1.0 + s2 * s2)
    return mu, alpha


def block_params(state: SchmidtState, m: int, primed: bool = False) -> BlockParams:
    """Angles of block m: theta = arctan(c_hi / c_lo) with (lo, hi) =
    (2m, 2m+1) unprimed and (2m+1, 2m+2) primed."""
    lo = 2 * m + 1 if primed else 2 * m
    hi = lo + 1
    if m < 0 or hi >= state.d:
        raise ValidationError(
            f"block {m} ({'primed' if primed else 'unprimed'}) out of range for d={state.d}"
        )
    theta = math.atan2(state.c[hi], state.c[lo])
    mu, alpha = tilt_parameters(theta)
    return BlockParams(m=m, theta=theta, mu=mu, alpha=alpha)


@dataclass(frozen=True)
class ConvergenceParams:
    """Fitted truncation-error model epsilon(N) = alpha_const * N^-16."""

    N: int
    alpha_const: float

    @property
    def epsilonN(self) -> float:
        return self.alpha_const * float(self.N) ** -16


def coefficient_tail(n: int, upto: int | None = None) -> float:
    """sum_{k=n+1}^{upto} k^-16: squared raw-coefficient mass beyond index
    n-1 of the separating family (upto=None sums until convergence)."""
    if upto is None:
        upto = max(4 * n, n + 200)
    return math.fsum(1.0 / k**16 for k in range(n + 1, upto + 1))
