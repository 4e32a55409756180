"""Extraction operators for self-testing: block observables are unitarized
and combined into projections, flip unitaries, and chain unitaries; the
Yang--Navascues residuals certify them; the swap isometry pulls the target
state onto fresh ancillas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import check_dim
from .errors import ValidationError
from .linalg import PureState, as_operator, dagger, is_projector
from .states import SchmidtState, block_params
from .strategies import MANY_ANSWERS, MANY_QUESTIONS, Strategy, family_of


def unitarize(op: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Extend an operator that is unitary on its support by the identity on
    the orthocomplement: 1 - support + op."""
    op = as_operator(op)
    support = as_operator(support)
    if not is_projector(support):
        raise ValidationError("support must be a projector")
    if np.max(np.abs(op - support @ op @ support)) > 1e-8:
        raise ValidationError("operator leaks outside its support")
    if np.max(np.abs(dagger(op) @ op - support)) > 1e-8:
        raise ValidationError("operator is not unitary on its support")
    return np.eye(op.shape[0], dtype=np.complex128) - support + op


def polar_fix(op: np.ndarray) -> np.ndarray:
    """Sign of a Hermitian operator with zero eigenvalues replaced by one:
    the unitary part Z|Z|^-1 after the zero fix."""
    op = as_operator(op)
    if np.max(np.abs(op - dagger(op))) > 1e-10:
        raise ValidationError("polar_fix expects a Hermitian operator")
    w, v = np.linalg.eigh(op)
    signs = np.where(np.abs(w) < 1e-12, 1.0, np.sign(w))
    return (v * signs) @ dagger(v)


def orthogonalize(p_list, psi: PureState | None = None, side: int = 0) -> list:
    """Round near-orthogonal projections to exactly orthogonal ones.

    Projectors are processed in decreasing order of state weight; each is
    compressed onto the orthocomplement of the span already used and its
    eigenspace above 1/2 is kept, with an explicit re-orthonormalization
    sweep.  Already-orthogonal inputs are returned unchanged.
    """
    ps = [as_operator(p) for p in p_list]
    if not ps:
        return []
    dim = ps[0].shape[0]
    worst = 0.0
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            worst = max(worst, np.linalg.norm(ps[i] @ ps[j], ord=2))
    if worst <= 1e-12:
        return list(ps)

    if psi is None:
        weights = [float(np.real(np.trace(p))) for p in ps]
    else:
        m = psi.as_matrix()
        rho = m @ dagger(m) if side == 0 else m.T @ m.conj()
        weights = [float(np.real(np.trace(rho @ p))) for p in ps]
    order = sorted(range(len(ps)), reverse=True, key=lambda i: weights[i])

    used = np.zeros((dim, dim), dtype=np.complex128)
    out: list = [None] * len(ps)
    for i in order:
        free = np.eye(dim, dtype=np.complex128) - used
        w, v = np.linalg.eigh(free @ ps[i] @ free)
        keep = v[:, w > 0.5]
        if keep.shape[1]:
            keep = keep - used @ keep
            keep, _ = np.linalg.qr(keep)
            q = keep @ dagger(keep)
        else:
            q = np.zeros((dim, dim), dtype=np.complex128)
        out[i] = q
        used = used + q
    return out


@dataclass(frozen=True)
class ResidualReport:
    """Max residuals of the four self-testing criterion conditions."""

    eps1: float
    eps2: float
    eps3: float
    eps4: float

    @property
    def overall(self) -> float:
        return max(self.eps1, self.eps2, self.eps3, self.eps4)


@dataclass(frozen=True)
class ExtractionKit:
    """Everything the swap isometry needs, built from one strategy."""

    d: int
    family: str
    P_A: tuple
    P_B: tuple
    Q_A: tuple
    Q_B: tuple
    chain_A: tuple
    chain_B: tuple
    Z_A: np.ndarray
    Z_B: np.ndarray
    omega: complex


def _diff(meas, o_plus, o_minus) -> np.ndarray:
    i = meas.outcomes.index(o_plus)
    j = meas.outcomes.index(o_minus)
    return meas.projectors[i] - meas.projectors[j]


def _range_union(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Projector onto the effective union of two projector ranges.

    Directions must carry substantial weight in p1 + p2: under perturbation
    the two block ranges tilt and their literal span swallows orthogonal
    directions at second order, which would leak unrelated basis levels
    into the sign split.
    """
    s = p1 + p2
    w, v = np.linalg.eigh(s)
    keep = v[:, w > 0.5]
    return keep @ dagger(keep)


def _sign_split(ones_b: np.ndarray, z_u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact spectral projectors onto the +1/-1 parts of z_u within the
    given subspace."""
    z_tilde = ones_b @ z_u @ ones_b
    w, v = np.linalg.eigh(z_tilde)
    plus = v[:, w > 0.5]
    minus = v[:, w < -0.5]
    return plus @ dagger(plus), minus @ dagger(minus)


def _block_obs(strategy: Strategy, family: str, m: int, primed: bool):
    """The four +/-1 block observables (A_Z, A_X, B_Z, B_X analogues) of
    block m, as raw outcome differences."""
    if family == MANY_ANSWERS:
        if not primed:
            lo = 2 * m
            return (
                _diff(strategy.alice[0], lo, lo + 1),
                _diff(strategy.alice[1], lo, lo + 1),
                _diff(strategy.bob[0], lo, lo + 1),
                _diff(strategy.bob[1], lo, lo + 1),
            )
        lo = 2 * m + 1
        return (
            _diff(strategy.alice[0], lo, lo + 1),
            _diff(strategy.alice[2], lo, lo + 1),
            _diff(strategy.bob[2], lo, lo + 1),
            _diff(strategy.bob[3], lo, lo + 1),
        )
    if not primed:
        return (
            _diff(strategy.alice[(m, "Z")], 0, 1),
            _diff(strategy.alice[(m, "X")], 0, 1),
            _diff(strategy.bob[(m, "Z")], 0, 1),
            _diff(strategy.bob[(m, "X")], 0, 1),
        )
    return (
        _diff(strategy.alice[(m, "Z")], 1, 2),
        _diff(strategy.alice[(m, "X'")], 1, 2),
        _diff(strategy.bob[(m, "Z'")], 0, 1),
        _diff(strategy.bob[(m, "X'")], 0, 1),
    )


def _unitarized(obs: np.ndarray) -> np.ndarray:
    return unitarize(obs, obs @ obs)


def build_kit(strategy: Strategy, family: str, state: SchmidtState) -> ExtractionKit:
    """Construct projections, flip unitaries, and chain unitaries from a
    strategy with the question labels of the given family.

    The flips carry each basis level down one step; chain unitaries are the
    alternating products taking level k to level 0, with the coefficient
    ratios c_k/c_0 showing up in the fourth criterion condition.
    """
    if family_of(strategy) != family:
        raise ValidationError("strategy question labels do not match the family")
    d = state.d
    dim_a, dim_b = strategy.state.dims
    expected_dim = d if family == MANY_ANSWERS else d + 1
    if dim_a != expected_dim or dim_b != expected_dim:
        raise ValidationError(
            f"strategy local dimension {dim_a} does not match the state (want {expected_dim})"
        )

    n_unprimed = (d - 1) // 2 if family == MANY_ANSWERS else d // 2
    n_primed = (d - 1) // 2 if family == MANY_ANSWERS else d // 2 - 1

    p_a: list = [None] * d
    p_b: list = [None] * d
    flip_x_a, flip_x_b, flip_y_a, flip_y_b = [], [], [], []

    for m in range(n_unprimed):
        a_z, a_x, b_z, b_x = _block_obs(strategy, family, m, primed=False)
        mu = block_params(state, m).mu
        bu_z, bu_x = _unitarized(b_z), _unitarized(b_x)
        ones_b = _range_union(b_z @ b_z, b_x @ b_x)
        z_u = polar_fix((bu_z + bu_x) / (2.0 * math.cos(mu)))
        plus, minus = _sign_split(ones_b, z_u)
        p_b[2 * m], p_b[2 * m + 1] = plus, minus
        if family == MANY_ANSWERS:
            p_a[2 * m] = strategy.alice[0].projectors[2 * m]
            p_a[2 * m + 1] = strategy.alice[0].projectors[2 * m + 1]
        else:
            meas = strategy.alice[(m, "Z")]
            p_a[2 * m] = meas.projectors[meas.outcomes.index(0)]
            p_a[2 * m + 1] = meas.projectors[meas.outcomes.index(1)]
        flip_x_a.append(_unitarized(a_x))
        flip_x_b.append(polar_fix((bu_z - bu_x) / (2.0 * math.sin(mu))))

    for m in range(n_primed):
        _, a_xp, b_zp, b_xp = _block_obs(strategy, family, m, primed=True)
        mup = block_params(state, m, primed=True).mu
        bu_zp, bu_xp = _unitarized(b_zp), _unitarized(b_xp)
        flip_y_a.append(_unitarized(a_xp))
        flip_y_b.append(polar_fix((bu_zp - bu_xp) / (2.0 * math.sin(mup))))
        if family == MANY_ANSWERS and m == n_primed - 1:
            # last level of the odd family sits in the minus part of the
            # final primed block on Bob's side
            ones_bp = _range_union(b_zp @ b_zp, b_xp @ b_xp)
            z_up = polar_fix((bu_zp + bu_xp) / (2.0 * math.cos(mup)))
            _, minus_p = _sign_split(ones_bp, z_up)
            p_b[d - 1] = minus_p

    if family == MANY_ANSWERS:
        p_a[d - 1] = strategy.alice[0].projectors[d - 1]

    eye_a = np.eye(dim_a, dtype=np.complex128)
    eye_b = np.eye(dim_b, dtype=np.complex128)
    chain_a, chain_b = [eye_a], [eye_b]
    for k in range(1, d):
        if k % 2 == 1:
            f_a, f_b = flip_x_a[(k - 1) // 2], flip_x_b[(k - 1) // 2]
        else:
            f_a, f_b = flip_y_a[k // 2 - 1], flip_y_b[k // 2 - 1]
        chain_a.append(chain_a[-1] @ f_a)
        chain_b.append(chain_b[-1] @ f_b)

    q_a = orthogonalize(p_a, strategy.state, side=0)
    q_b = orthogonalize(p_b, strategy.state, side=1)
    omega = complex(np.exp(2j * math.pi / d))
    z_a = sum(omega**k * q_a[k] for k in range(d)) + eye_a - sum(q_a)
    z_b = sum(omega**k * q_b[k] for k in range(d)) + eye_b - sum(q_b)

    return ExtractionKit(
        d=d,
        family=family,
        P_A=tuple(p_a),
        P_B=tuple(p_b),
        Q_A=tuple(q_a),
        Q_B=tuple(q_b),
        chain_A=tuple(chain_a),
        chain_B=tuple(chain_b),
        Z_A=z_a,
        Z_B=z_b,
        omega=omega,
    )


def yn_residuals(kit: ExtractionKit, psi: PureState, c: SchmidtState) -> ResidualReport:
    """Residuals of the four criterion conditions on the given state:
    pairwise overlap, completeness, A/B agreement, and the chain condition
    with the coefficient ratios c_k/c_0."""
    m = psi.as_matrix()
    if kit.P_A[0].shape[0] != m.shape[0] or kit.P_B[0].shape[0] != m.shape[1]:
        raise ValidationError("kit dimensions do not match the state")
    d = kit.d
    eps1 = 0.0
    for i in range(d):
        for j in range(d):
            if i != j:
                eps1 = max(eps1, float(np.linalg.norm(kit.P_A[i] @ kit.P_A[j] @ m)))
    total = sum(kit.P_A) - np.eye(m.shape[0])
    eps2 = float(np.linalg.norm(total @ m))
    eps3 = 0.0
    for k in range(d):
        eps3 = max(eps3, float(np.linalg.norm(kit.P_A[k] @ m - m @ kit.P_B[k].T)))
    eps4 = 0.0
    ratios = c.c / c.c[0]
    p0m = kit.P_A[0] @ m
    for k in range(d):
        lhs = kit.chain_A[k] @ (kit.P_A[k] @ m) @ kit.chain_B[k].T
        eps4 = max(eps4, float(np.linalg.norm(lhs - ratios[k] * p0m)))
    return ResidualReport(eps1, eps2, eps3, eps4)


@dataclass(frozen=True)
class SwapResult:
    """Output of the swap isometry applied to psi with fresh ancillas."""

    output: np.ndarray
    dims: tuple
    junk: np.ndarray
    error: float
    output_norm: float


def _fourier(d: int) -> np.ndarray:
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return np.exp(2j * math.pi * j * k / d) / math.sqrt(d)


def _apply_controlled(t: np.ndarray, ops: list, ancilla_axis: int, system_axis: int) -> np.ndarray:
    """Apply ops[k] to the system axis on the slice where the ancilla reads k."""
    out = np.empty_like(t)
    for k in range(t.shape[ancilla_axis]):
        slc = [slice(None)] * t.ndim
        slc[ancilla_axis] = k
        block = t[tuple(slc)]
        out[tuple(slc)] = np.moveaxis(
            np.tensordot(ops[k], block, axes=([1], [system_axis if system_axis < ancilla_axis else system_axis - 1])),
            0,
            system_axis if system_axis < ancilla_axis else system_axis - 1,
        )
    return out


def swap_isometry(kit: ExtractionKit, psi: PureState, c: SchmidtState) -> SwapResult:
    """Four-stage swap circuit: Fourier transforms on two d-level ancillas,
    controlled powers of Z, inverse Fourier transforms, then controlled
    chain unitaries; compares the result against junk (x) sum_j c_j |jj>
    with junk = (1/c_0) Q^(0)_A psi."""
    d = kit.d
    da, db = psi.dims
    check_dim(da * db * d * d, "swap isometry")
    m = psi.as_matrix()

    t = np.zeros((da, db, d, d), dtype=np.complex128)
    t[:, :, 0, 0] = m

    w = _fourier(d)
    t = np.einsum("pk,abkq->abpq", w, t)
    t = np.einsum("ql,abpl->abpq", w, t)

    z_pow_a, z_pow_b = [np.eye(da, dtype=np.complex128)], [np.eye(db, dtype=np.complex128)]
    for _ in range(1, d):
        z_pow_a.append(z_pow_a[-1] @ kit.Z_A)
        z_pow_b.append(z_pow_b[-1] @ kit.Z_B)
    t = _apply_controlled(t, z_pow_a, ancilla_axis=2, system_axis=0)
    t = _apply_controlled(t, z_pow_b, ancilla_axis=3, system_axis=1)

    wbar = dagger(w)
    t = np.einsum("pk,abkq->abpq", wbar, t)
    t = np.einsum("ql,abpl->abpq", wbar, t)

    t = _apply_controlled(t, list(kit.chain_A), ancilla_axis=2, system_axis=0)
    t = _apply_controlled(t, list(kit.chain_B), ancilla_axis=3, system_axis=1)

    junk = (kit.Q_A[0] @ m) / c.c[0]
    target = np.einsum("ab,k->abk", junk, c.c)
    reference = np.zeros_like(t)
    idx = np.arange(d)
    reference[:, :, idx, idx] = target
    error = float(np.linalg.norm(t - reference))
    return SwapResult(
        output=t.reshape(-1),
        dims=(da, db, d, d),
        junk=junk.reshape(-1),
        error=error,
        output_norm=float(np.linalg.norm(t)),
    )
