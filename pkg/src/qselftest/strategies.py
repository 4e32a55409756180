"""Ideal strategies: the tilted-CHSH qubit block, the two qudit self-testing
families, perturbations, embeddings, and the POVM reduction.

Families
--------
many_answers : d odd.  Questions X={0,1,2}, Y={0,1,2,3}, answers {0..d-1}
    on both sides.  Alice 0 is the computational basis; 1 and 2 are direct
    sums of sigma_x eigenbases over the unprimed blocks (2m, 2m+1) and the
    primed blocks (2m+1, 2m+2); Bob's four questions are the corresponding
    cos(mu) sigma_z +/- sin(mu) sigma_x eigenbases.
many_questions : d even.  Questions (m, tag) with three Alice tags and five
    Bob tags per block, answers {0,1,2,perp} / {0,1,perp}.  The listed
    projectors reference basis index 2m+2, which for the last block lies one
    level above the coefficient support, so the strategy is built on local
    dimension d+1 with a zero amplitude on the top level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ATOL_STRUCT
from .errors import ParityError, ValidationError
from .linalg import (
    PureState,
    dagger,
    hermitian_expi,
    is_projector,
    random_hermitian,
    random_unit_vector,
    schmidt,
)
from .states import SchmidtState, block_params, psi_N, tilt_parameters

PERP = "perp"

MANY_ANSWERS = "many_answers"
MANY_QUESTIONS = "many_questions"

ALICE_TAGS = ("Z", "X", "X'")
BOB_TAGS = ("Z", "Z'", "X", "X'", "Aux")


@dataclass(frozen=True)
class Measurement:
    """A labeled projective measurement: one projector per outcome."""

    question: object
    outcomes: tuple
    projectors: tuple

    def __post_init__(self):
        projs = tuple(np.asarray(p, dtype=np.complex128) for p in self.projectors)
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if len(projs) != len(self.outcomes):
            raise ValidationError("outcome/projector count mismatch")
        for p in projs:
            p.setflags(write=False)
        self.validate()

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def operators(self) -> tuple:
        return self.projectors

    def validate(self, tol: float = ATOL_STRUCT) -> None:
        total = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for i, p in enumerate(self.projectors):
            if not is_projector(p, tol):
                raise ValidationError(
                    f"question {self.question!r}: outcome {self.outcomes[i]!r} "
                    "is not a projector"
                )
            total += p
        if np.max(np.abs(total - np.eye(self.dim))) > tol:
            raise ValidationError(
                f"question {self.question!r}: projectors do not sum to identity"
            )
        for i in range(len(self.projectors)):
            for j in range(i + 1, len(self.projectors)):
                prod = self.projectors[i] @ self.projectors[j]
                if np.linalg.norm(prod, ord=2) > tol:
                    raise ValidationError(
                        f"question {self.question!r}: projectors "
                        f"{self.outcomes[i]!r}, {self.outcomes[j]!r} overlap"
                    )


@dataclass(frozen=True)
class PovmMeasurement:
    """A labeled POVM: positive elements summing to identity."""

    question: object
    outcomes: tuple
    elements: tuple

    def __post_init__(self):
        els = tuple(np.asarray(e, dtype=np.complex128) for e in self.elements)
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        for e in els:
            e.setflags(write=False)
        self.validate()

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def operators(self) -> tuple:
        return self.elements

    def validate(self, tol: float = ATOL_STRUCT) -> None:
        total = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for e in self.elements:
            if np.max(np.abs(e - dagger(e))) > tol:
                raise ValidationError(f"POVM {self.question!r}: element not Hermitian")
            if np.linalg.eigvalsh(e).min() < -tol:
                raise ValidationError(f"POVM {self.question!r}: element not PSD")
            total += e
        if np.max(np.abs(total - np.eye(self.dim))) > tol:
            raise ValidationError(f"POVM {self.question!r}: elements do not sum to 1")


def _check_party(measurements: dict, dim: int, party: str) -> None:
    if not measurements:
        raise ValidationError(f"{party} has no measurements")
    outcomes = None
    for q, meas in measurements.items():
        if meas.question != q:
            raise ValidationError(f"{party}: key {q!r} != label {meas.question!r}")
        if meas.dim != dim:
            raise ValidationError(f"{party}: measurement {q!r} acts on wrong space")
        if outcomes is None:
            outcomes = meas.outcomes
        elif meas.outcomes != outcomes:
            raise ValidationError(f"{party}: outcome sets differ across questions")


@dataclass(frozen=True)
class Strategy:
    """A joint pure state plus per-question projective measurements."""

    state: PureState
    alice: dict
    bob: dict

    def __post_init__(self):
        if len(self.state.dims) != 2:
            raise ValidationError("strategy state must be bipartite")
        da, db = self.state.dims
        _check_party(self.alice, da, "alice")
        _check_party(self.bob, db, "bob")

    @property
    def questions_a(self) -> tuple:
        return tuple(self.alice)

    @property
    def questions_b(self) -> tuple:
        return tuple(self.bob)

    @property
    def answers_a(self) -> tuple:
        return next(iter(self.alice.values())).outcomes

    @property
    def answers_b(self) -> tuple:
        return next(iter(self.bob.values())).outcomes


@dataclass(frozen=True)
class PovmStrategy:
    """Same shape as Strategy, with POVMs instead of projective measurements."""

    state: PureState
    alice: dict
    bob: dict

    def __post_init__(self):
        da, db = self.state.dims
        _check_party(self.alice, da, "alice")
        _check_party(self.bob, db, "bob")

    questions_a = Strategy.questions_a
    questions_b = Strategy.questions_b
    answers_a = Strategy.answers_a
    answers_b = Strategy.answers_b


# --- block-local operator helpers -----------------------------------------


def _embed_block(op2: np.ndarray, i: int, j: int, dim: int) -> np.ndarray:
    """Embed a 2x2 operator on basis levels (i, j) of a dim-level space."""
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[i, i] = op2[0, 0]
    out[i, j] = op2[0, 1]
    out[j, i] = op2[1, 0]
    out[j, j] = op2[1, 1]
    return out


def _basis_proj(i: int, dim: int) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[i, i] = 1.0
    return out


_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
_I2 = np.eye(2, dtype=np.complex128)


def _pm_projectors(obs2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(P_plus, P_minus) eigenprojectors of a 2x2 +/-1 observable."""
    return (_I2 + obs2) / 2.0, (_I2 - obs2) / 2.0


def _bob_obs(mu: float, sign: int) -> np.ndarray:
    return math.cos(mu) * _SZ + sign * math.sin(mu) * _SX


# --- tilted CHSH block ------------------------------------------------------


def tilted_chsh_ideal(theta: float) -> Strategy:
    """Two-qubit strategy maximally violating the tilted CHSH functional.

    State cos(theta)|00> + sin(theta)|11>; A0 = sigma_z, A1 = sigma_x,
    B0/B1 = cos(mu) sigma_z +/- sin(mu) sigma_x with mu = arctan(sin 2theta).
    Outcome 0 is the +1 eigenspace, outcome 1 the -1 eigenspace.
    """
    if not 0 < theta < math.pi / 2:
        raise ValidationError("theta must lie strictly inside (0, pi/2)")
    mu, _ = tilt_parameters(theta)
    amps = np.zeros(4, dtype=np.complex128)
    amps[0] = math.cos(theta)
    amps[3] = math.sin(theta)
    state = PureState((2, 2), amps)
    alice = {
        0: Measurement(0, (0, 1), _pm_projectors(_SZ)),
        1: Measurement(1, (0, 1), _pm_projectors(_SX)),
    }
    bob = {
        0: Measurement(0, (0, 1), _pm_projectors(_bob_obs(mu, +1))),
        1: Measurement(1, (0, 1), _pm_projectors(_bob_obs(mu, -1))),
    }
    return Strategy(state, alice, bob)


# --- many answers family ----------------------------------------------------


def _direct_sum_measurement(
    question, d: int, blocks, obs_for_block, lone_level: int | None, lone_outcome
) -> Measurement:
    """Measurement from 2x2 observables on disjoint blocks plus an optional
    single leftover basis level.  Within block (i, j) the +1 eigenvector gets
    the outcome labeled by i and the -1 eigenvector the one labeled by j."""
    outcomes = [None] * d
    projectors = [None] * d
    for (i, j), obs in zip(blocks, obs_for_block):
        plus, minus = _pm_projectors(obs)
        outcomes[i] = i
        projectors[i] = _embed_block(plus, i, j, d)
        outcomes[j] = j
        projectors[j] = _embed_block(minus, i, j, d)
    if lone_level is not None:
        outcomes[lone_outcome] = lone_outcome
        projectors[lone_outcome] = _basis_proj(lone_level, d)
    return Measurement(question, tuple(range(d)), tuple(projectors))


def many_answers_ideal(state: SchmidtState) -> Strategy:
    """Self-testing strategy with 3 and 4 questions and d answers, d odd."""
    d = state.d
    if d % 2 == 0:
        raise ParityError("many_answers requires odd local dimension")
    if d < 3:
        raise ValidationError("many_answers requires d >= 3")
    n_blocks = (d - 1) // 2
    unprimed = [(2 * m, 2 * m + 1) for m in range(n_blocks)]
    primed = [(2 * m + 1, 2 * m + 2) for m in range(n_blocks)]
    mus = [block_params(state, m).mu for m in range(n_blocks)]
    mups = [block_params(state, m, primed=True).mu for m in range(n_blocks)]

    alice = {
        0: Measurement(0, tuple(range(d)), tuple(_basis_proj(a, d) for a in range(d))),
        1: _direct_sum_measurement(1, d, unprimed, [_SX] * n_blocks, d - 1, d - 1),
        2: _direct_sum_measurement(2, d, primed, [_SX] * n_blocks, 0, 0),
    }
    bob = {
        0: _direct_sum_measurement(
            0, d, unprimed, [_bob_obs(mu, +1) for mu in mus], d - 1, d - 1
        ),
        1: _direct_sum_measurement(
            1, d, unprimed, [_bob_obs(mu, -1) for mu in mus], d - 1, d - 1
        ),
        2: _direct_sum_measurement(
            2, d, primed, [_bob_obs(mu, +1) for mu in mups], 0, 0
        ),
        3: _direct_sum_measurement(
            3, d, primed, [_bob_obs(mu, -1) for mu in mups], 0, 0
        ),
    }
    return Strategy(state.joint_state(), alice, bob)


# --- many questions family ---------------------------------------------------


def _mq_angles(state: SchmidtState, m: int, primed: bool) -> tuple[float, float]:
    """(theta, mu) of block m; the last primed block closes with a zero
    coefficient on the embedded top level, giving theta = mu = 0."""
    c = state.c
    lo = 2 * m + 1 if primed else 2 * m
    hi = lo + 1
    c_hi = c[hi] if hi < state.d else 0.0
    theta = math.atan2(c_hi, c[lo])
    mu, _ = tilt_parameters(theta)
    return theta, mu


def _ket_pair_proj(i: int, j: int, sign: int, dim: int) -> np.ndarray:
    """Projector onto (|i> + sign |j>)/sqrt(2)."""
    v = np.zeros(dim, dtype=np.complex128)
    v[i] = 1.0 / math.sqrt(2.0)
    v[j] = sign / math.sqrt(2.0)
    return np.outer(v, v.conj())


def _complete_with_perp(question, outcomes, projs, dim: int) -> Measurement:
    rest = np.eye(dim, dtype=np.complex128) - sum(projs)
    return Measurement(question, tuple(outcomes) + (PERP,), tuple(projs) + (rest,))


def many_questions_ideal(state: SchmidtState) -> Strategy:
    """Self-testing strategy with O(d) questions and 4/3 answers, d even.

    Built on local dimension d+1: the block structure references one basis
    level above the coefficient support, which carries zero amplitude.
    """
    d = state.d
    if d % 2 == 1:
        raise ParityError("many_questions requires even local dimension")
    dim = d + 1
    alice: dict = {}
    bob: dict = {}
    for m in range(d // 2):
        lo = 2 * m
        _, mu = _mq_angles(state, m, primed=False)
        _, mup = _mq_angles(state, m, primed=True)

        alice[(m, "Z")] = _complete_with_perp(
            (m, "Z"),
            (0, 1, 2),
            [_basis_proj(lo + k, dim) for k in range(3)],
            dim,
        )
        alice[(m, "X")] = _complete_with_perp(
            (m, "X"),
            (0, 1, 2),
            [
                _ket_pair_proj(lo, lo + 1, +1, dim),
                _ket_pair_proj(lo, lo + 1, -1, dim),
                _basis_proj(lo + 2, dim),
            ],
            dim,
        )
        alice[(m, "X'")] = _complete_with_perp(
            (m, "X'"),
            (0, 1, 2),
            [
                _basis_proj(lo, dim),
                _ket_pair_proj(lo + 1, lo + 2, +1, dim),
                _ket_pair_proj(lo + 1, lo + 2, -1, dim),
            ],
            dim,
        )

        def _bob_block(tag, i, j, mu_val, sign):
            plus, minus = _pm_projectors(_bob_obs(mu_val, sign))
            return _complete_with_perp(
                (m, tag),
                (0, 1),
                [_embed_block(plus, i, j, dim), _embed_block(minus, i, j, dim)],
                dim,
            )

        bob[(m, "Z")] = _bob_block("Z", lo, lo + 1, mu, +1)
        bob[(m, "X")] = _bob_block("X", lo, lo + 1, mu, -1)
        bob[(m, "Z'")] = _bob_block("Z'", lo + 1, lo + 2, mup, +1)
        bob[(m, "X'")] = _bob_block("X'", lo + 1, lo + 2, mup, -1)
        bob[(m, "Aux")] = _complete_with_perp(
            (m, "Aux"),
            (0, 1),
            [_basis_proj(lo, dim), _basis_proj(lo + 1, dim)],
            dim,
        )
    return Strategy(state.joint_state(dim), alice, bob)


def family_of(strategy) -> str:
    q = next(iter(strategy.alice))
    return MANY_ANSWERS if isinstance(q, int) else MANY_QUESTIONS


def truncated_separating_strategy(family: str, n: int) -> Strategy:
    """Ideal strategy on the truncated separating state with N coefficients."""
    if family == MANY_ANSWERS:
        if n % 2 == 0:
            raise ParityError("many_answers truncations need odd N")
        return many_answers_ideal(psi_N(n))
    if family == MANY_QUESTIONS:
        if n % 2 == 1:
            raise ParityError("many_questions truncations need even N")
        return many_questions_ideal(psi_N(n))
    raise ValidationError(f"unknown family {family!r}")


# --- perturbation -------------------------------------------------------------


def perturb(strategy: Strategy, eps: float, seed: int) -> Strategy:
    """Noise model for the robustness experiments.

    Each measurement is conjugated by exp(i*eps*H) with an independent
    seeded random Hermitian H of unit operator norm (projectivity is exactly
    preserved); the joint state is pushed toward a seeded random direction
    with amplitude eps and renormalized.
    """
    if eps < 0:
        raise ValidationError("eps must be >= 0")
    if eps == 0:
        return strategy
    rng = np.random.Generator(np.random.Philox(seed))
    da, db = strategy.state.dims

    def _rotate(measurements: dict, dim: int) -> dict:
        out = {}
        for q, meas in measurements.items():
            u = hermitian_expi(random_hermitian(dim, rng), eps)
            out[q] = Measurement(
                q, meas.outcomes, tuple(u @ p @ dagger(u) for p in meas.projectors)
            )
        return out

    alice = _rotate(strategy.alice, da)
    bob = _rotate(strategy.bob, db)
    direction = random_unit_vector(da * db, rng)
    amps = strategy.state.amplitudes + eps * direction
    state = PureState((da, db), amps / np.linalg.norm(amps))
    return Strategy(state, alice, bob)


# --- embedding and POVM reduction ---------------------------------------------


def embed_strategy(strategy: Strategy, dim_a: int, dim_b: int) -> Strategy:
    """Embed into larger local spaces; the new directions are absorbed into
    the first outcome of every measurement so completeness is preserved."""
    da, db = strategy.state.dims
    if dim_a < da or dim_b < db:
        raise ValidationError("embedding dimensions must not shrink the space")

    def _pad(measurements: dict, old: int, new: int) -> dict:
        extra = np.zeros((new, new), dtype=np.complex128)
        extra[old:, old:] = np.eye(new - old)
        out = {}
        for q, meas in measurements.items():
            projs = []
            for k, p in enumerate(meas.projectors):
                big = np.zeros((new, new), dtype=np.complex128)
                big[:old, :old] = p
                if k == 0:
                    big += extra
                projs.append(big)
            out[q] = Measurement(q, meas.outcomes, tuple(projs))
        return out

    m_old = strategy.state.amplitudes.reshape(da, db)
    m_new = np.zeros((dim_a, dim_b), dtype=np.complex128)
    m_new[:da, :db] = m_old
    state = PureState((dim_a, dim_b), m_new.reshape(-1))
    return Strategy(state, _pad(strategy.alice, da, dim_a), _pad(strategy.bob, db, dim_b))


def povm_reduce(strategy: Strategy) -> PovmStrategy:
    """Compress a strategy to local spaces of dimension the Schmidt rank.

    The joint state becomes its Schmidt-coefficient vector; each projector
    is compressed onto the corresponding local Schmidt basis.  The result
    is a POVM strategy reproducing the same correlation.
    """
    spec = schmidt(strategy.state)
    r = spec.rank()
    u = spec.left[:, :r]
    w = spec.right[:, :r].conj()

    def _compress(measurements: dict, basis: np.ndarray) -> dict:
        out = {}
        for q, meas in measurements.items():
            els = tuple(dagger(basis) @ p @ basis for p in meas.projectors)
            out[q] = PovmMeasurement(q, meas.outcomes, els)
        return out

    coeffs = spec.coefficients[:r]
    m = np.diag(coeffs / np.linalg.norm(coeffs)).astype(np.complex128)
    state = PureState((r, r), m.reshape(-1))
    return PovmStrategy(state, _compress(strategy.alice, u), _compress(strategy.bob, w))
