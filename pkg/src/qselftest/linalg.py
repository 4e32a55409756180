"""Dense complex linear algebra primitives: operator predicates, tensor
products, Schmidt decompositions, and low-rank approximation distances.

Operators are plain complex numpy arrays; states carry their subsystem
dimensions.  Everything here is pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ATOL_STRUCT, SCHMIDT_RANK_TOL, check_dim
from .errors import ValidationError


def as_operator(a) -> np.ndarray:
    out = np.asarray(a, dtype=np.complex128)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {out.shape}")
    if not np.all(np.isfinite(out.view(np.float64))):
        raise ValidationError("operator has non-finite entries")
    return out


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def is_hermitian(a, tol: float = ATOL_STRUCT) -> bool:
    a = np.asarray(a)
    return bool(np.max(np.abs(a - dagger(a))) <= tol)


def is_unitary(a, tol: float = ATOL_STRUCT) -> bool:
    a = np.asarray(a)
    eye = np.eye(a.shape[0])
    return bool(np.max(np.abs(dagger(a) @ a - eye)) <= tol)


def is_projector(a, tol: float = ATOL_STRUCT) -> bool:
    a = np.asarray(a)
    return is_hermitian(a, tol) and bool(np.max(np.abs(a @ a - a)) <= tol)


def tensor(a, b) -> np.ndarray:
    """Kronecker product with the package-wide dimension cap enforced."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    check_dim(a.shape[0] * b.shape[0], "tensor product")
    return np.kron(a, b)


def tensor_all(*ops) -> np.ndarray:
    out = np.asarray(ops[0], dtype=np.complex128)
    for op in ops[1:]:
        out = tensor(out, op)
    return out


@dataclass(frozen=True)
class PureState:
    """A normalized pure state over an ordered list of subsystems."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)
        if int(np.prod(dims)) != amps.size:
            raise ValidationError(
                f"amplitude length {amps.size} does not match dims {dims}"
            )
        if not np.all(np.isfinite(amps.view(np.float64))):
            raise ValidationError("state has non-finite amplitudes")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"state norm {norm!r} is not 1 within 1e-12")
        amps.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def as_matrix(self, cut: int = 1) -> np.ndarray:
        """Coefficient matrix for the bipartition dims[:cut] | dims[cut:]."""
        if not 0 < cut < len(self.dims):
            raise ValidationError(f"cut {cut} invalid for {len(self.dims)} subsystems")
        left = int(np.prod(self.dims[:cut]))
        return self.amplitudes.reshape(left, -1)


def state_from_vector(vec, dims) -> PureState:
    vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValidationError("cannot normalize the zero vector")
    return PureState(tuple(dims), vec / norm)


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Schmidt coefficients (nonincreasing) with the matching local bases."""

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=np.float64)
        object.__setattr__(self, "coefficients", coeffs)
        if np.any(coeffs < -ATOL_STRUCT) or np.any(np.diff(coeffs) > ATOL_STRUCT):
            raise ValidationError("coefficients must be nonnegative and nonincreasing")
        if abs(np.sum(coeffs**2) - 1.0) > ATOL_STRUCT:
            raise ValidationError("squared coefficients must sum to 1 within 1e-10")
        for arr in (coeffs, self.left, self.right):
            np.asarray(arr).setflags(write=False)

    def rank(self, threshold: float = SCHMIDT_RANK_TOL) -> int:
        return int(np.sum(self.coefficients > threshold))


def schmidt(state: PureState, cut: int = 1) -> SchmidtSpectrum:
    """Schmidt decomposition across the given bipartition, via SVD."""
    m = state.as_matrix(cut)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SchmidtSpectrum(s, u, vh.conj().T)


def schmidt_reconstruct(spec: SchmidtSpectrum) -> np.ndarray:
    """Vector sum_i lambda_i |u_i>|v_i>; inverse of schmidt up to phase."""
    m = (spec.left * spec.coefficients) @ spec.right.conj().T
    return m.reshape(-1)


def low_rank_distance(spectrum, r: int) -> float:
    """Minimum distance from a unit vector with the given Schmidt spectrum
    to any unit vector of Schmidt rank at most r.

    Closed form sqrt(2 - 2*sqrt(sum of the r largest squared coefficients));
    exactly 0 once r reaches the rank.
    """
    if r < 1:
        raise ValidationError("rank bound r must be >= 1")
    coeffs = (
        spectrum.coefficients
        if isinstance(spectrum, SchmidtSpectrum)
        else np.asarray(spectrum, dtype=np.float64)
    )
    if r >= int(np.sum(coeffs > SCHMIDT_RANK_TOL)):
        return 0.0
    kept = np.sum(np.sort(coeffs)[::-1][:r] ** 2)
    kept = min(float(kept), 1.0)
    return float(np.sqrt(max(2.0 - 2.0 * np.sqrt(kept), 0.0)))


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian matrix scaled to unit operator norm."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (g + dagger(g)) / 2
    return h / np.linalg.norm(h, ord=2)


def hermitian_expi(h: np.ndarray, t: float) -> np.ndarray:
    """exp(i t H) for Hermitian H, via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * t * w)) @ dagger(v)
