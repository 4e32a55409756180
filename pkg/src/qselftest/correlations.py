"""Correlations: evaluation, the sup/L1 distance, lifts, coarse-graining,
the separating-correlation proxy, structural verifiers, and tilted-CHSH
block functionals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ValidationError
from .states import BlockParams, SchmidtState, block_params, tilt_parameters
from .strategies import (
    ALICE_TAGS,
    BOB_TAGS,
    MANY_ANSWERS,
    MANY_QUESTIONS,
    PERP,
    Strategy,
    family_of,
    tilted_chsh_ideal,
    truncated_separating_strategy,
)

ENTRY_SLACK = 1e-12
TABLE_SUM_TOL = 1e-10


@dataclass(frozen=True)
class Correlation:
    """Conditional probability tables p(a,b|x,y), one per question pair."""

    questions_a: tuple
    questions_b: tuple
    answers_a: tuple
    answers_b: tuple
    tables: dict

    def __post_init__(self):
        object.__setattr__(self, "questions_a", tuple(self.questions_a))
        object.__setattr__(self, "questions_b", tuple(self.questions_b))
        object.__setattr__(self, "answers_a", tuple(self.answers_a))
        object.__setattr__(self, "answers_b", tuple(self.answers_b))
        shape = (len(self.answers_a), len(self.answers_b))
        seen = {}
        for x in self.questions_a:
            for y in self.questions_b:
                if (x, y) not in self.tables:
                    raise ValidationError(f"missing table for question pair {(x, y)!r}")
        for key, raw in self.tables.items():
            t = np.asarray(raw, dtype=np.float64)
            if t.shape != shape:
                raise ValidationError(f"table {key!r} has shape {t.shape}, want {shape}")
            if t.min() < -ENTRY_SLACK or t.max() > 1 + ENTRY_SLACK:
                raise ValidationError(f"table {key!r} has entries outside [0, 1]")
            if abs(t.sum() - 1.0) > TABLE_SUM_TOL:
                raise ValidationError(f"table {key!r} sums to {t.sum()!r}, not 1")
            t.setflags(write=False)
            seen[key] = t
        object.__setattr__(self, "tables", seen)

    def table(self, x, y) -> np.ndarray:
        return self.tables[(x, y)]

    def index_a(self, a) -> int:
        return self.answers_a.index(a)

    def index_b(self, b) -> int:
        return self.answers_b.index(b)


def evaluate(strategy) -> Correlation:
    """Correlation of a (projective or POVM) strategy:
    p(a,b|x,y) = <psi| A^a_x (x) B^b_y |psi>."""
    m = strategy.state.as_matrix()
    a_stacks = {q: np.stack(meas.operators) for q, meas in strategy.alice.items()}
    b_stacks = {q: np.stack(meas.operators) for q, meas in strategy.bob.items()}
    tables = {}
    for x, a_ops in a_stacks.items():
        for y, b_ops in b_stacks.items():
            t = kernels.corr_table(m, a_ops, b_ops)
            tables[(x, y)] = np.clip(t, 0.0, None)
    return Correlation(
        tuple(strategy.alice),
        tuple(strategy.bob),
        strategy.answers_a,
        strategy.answers_b,
        tables,
    )


def marginals(strategy) -> tuple[dict, dict]:
    """Per-question outcome distributions for each party alone."""
    m = strategy.state.as_matrix()
    rho_a = m @ m.conj().T
    rho_b = m.T @ m.conj()
    alice = {
        q: np.array([float(np.real(np.sum(rho_a.T * p))) for p in meas.operators])
        for q, meas in strategy.alice.items()
    }
    bob = {
        q: np.array([float(np.real(np.sum(rho_b.T * p))) for p in meas.operators])
        for q, meas in strategy.bob.items()
    }
    return alice, bob


@dataclass(frozen=True)
class DistanceReport:
    """sup over question pairs of the answer-wise L1 difference."""

    value: float
    argmax: tuple
    per_pair: dict = field(repr=False)


def distance(p: Correlation, q: Correlation) -> DistanceReport:
    if (
        p.questions_a != q.questions_a
        or p.questions_b != q.questions_b
        or p.answers_a != q.answers_a
        or p.answers_b != q.answers_b
    ):
        raise ValidationError("correlations live on different question/answer sets")
    per_pair = {}
    best, arg = -1.0, None
    for key, tp in p.tables.items():
        val = float(np.abs(tp - q.tables[key]).sum())
        per_pair[key] = val
        if val > best:
            best, arg = val, key
    return DistanceReport(best, arg, per_pair)


# --- lifts and coarse graining ------------------------------------------------


def _int_answers(corr: Correlation) -> None:
    if not all(isinstance(a, int) for a in corr.answers_a + corr.answers_b):
        raise ValidationError("operation requires integer answer labels")


def lift_answers(p: Correlation, cutoff: int | None = None) -> Correlation:
    """Zero-pad answer sets up to {0..cutoff-1} on both sides.

    The lift to countably infinite answers is materialized only up to the
    working cutoff; everything beyond stays implicitly zero.
    """
    _int_answers(p)
    hi = 1 + max(p.answers_a + p.answers_b)
    if cutoff is None:
        cutoff = hi
    if cutoff < hi:
        raise ValidationError("cutoff below an existing answer label")
    rows = [p.answers_a.index(a) if a in p.answers_a else None for a in range(cutoff)]
    cols = [p.answers_b.index(b) if b in p.answers_b else None for b in range(cutoff)]
    tables = {}
    for key, t in p.tables.items():
        big = np.zeros((cutoff, cutoff))
        for i, ri in enumerate(rows):
            if ri is None:
                continue
            for j, cj in enumerate(cols):
                if cj is not None:
                    big[i, j] = t[ri, cj]
        tables[key] = big
    answers = tuple(range(cutoff))
    return Correlation(p.questions_a, p.questions_b, answers, answers, tables)


def restrict_answers(p: Correlation, answers_a, answers_b) -> Correlation:
    """Inverse of lift_answers: drop answers that carry no probability mass."""
    ia = [p.index_a(a) for a in answers_a]
    ib = [p.index_b(b) for b in answers_b]
    tables = {}
    for key, t in p.tables.items():
        sub = t[np.ix_(ia, ib)]
        if abs(sub.sum() - 1.0) > TABLE_SUM_TOL:
            raise ValidationError(f"mass outside the restricted sets in {key!r}")
        tables[key] = sub
    return Correlation(p.questions_a, p.questions_b, tuple(answers_a), tuple(answers_b), tables)


def question_sets(n: int) -> tuple[tuple, tuple]:
    """Question labels of the many-questions family at local dimension n."""
    xs = tuple((m, tag) for m in range(n // 2) for tag in ALICE_TAGS)
    ys = tuple((m, tag) for m in range(n // 2) for tag in BOB_TAGS)
    return xs, ys


def lift_questions(strategy: Strategy, family_n: int, target_n: int) -> Correlation:
    """Extend a many-questions strategy to the question sets of a larger
    truncation: out-of-range questions are answered perp with certainty."""
    if family_of(strategy) != MANY_QUESTIONS:
        raise ValidationError("question lift applies to the many-questions family")
    if target_n < family_n or target_n % 2 or family_n % 2:
        raise ValidationError("need even target_N >= family_N (even)")
    xs_small, ys_small = question_sets(family_n)
    if tuple(strategy.alice) != xs_small or tuple(strategy.bob) != ys_small:
        raise ValidationError("strategy labels do not match family_N")
    base = evaluate(strategy)
    marg_a, marg_b = marginals(strategy)
    xs, ys = question_sets(target_n)
    na, nb = len(base.answers_a), len(base.answers_b)
    ia_perp = base.answers_a.index(PERP)
    ib_perp = base.answers_b.index(PERP)
    both_perp = np.zeros((na, nb))
    both_perp[ia_perp, ib_perp] = 1.0
    tables = {}
    for x in xs:
        for y in ys:
            x_in, y_in = x in strategy.alice, y in strategy.bob
            if x_in and y_in:
                tables[(x, y)] = base.table(x, y)
            elif x_in:
                t = np.zeros((na, nb))
                t[:, ib_perp] = marg_a[x]
                tables[(x, y)] = t
            elif y_in:
                t = np.zeros((na, nb))
                t[ia_perp, :] = marg_b[y]
                tables[(x, y)] = t
            else:
                tables[(x, y)] = both_perp
    return Correlation(xs, ys, base.answers_a, base.answers_b, tables)


def coarse_grain(p: Correlation, n: int) -> Correlation:
    """Classical post-processing mapping answers outside {0..n-1} to 0,
    independently on each side."""
    _int_answers(p)
    for a in range(n):
        if a not in p.answers_a or a not in p.answers_b:
            raise ValidationError(f"answer sets must contain 0..{n - 1}")
    answers = tuple(range(n))
    row_to = [a if a < n else 0 for a in p.answers_a]
    col_to = [b if b < n else 0 for b in p.answers_b]
    tables = {}
    for key, t in p.tables.items():
        out = np.zeros((n, n))
        for i, ti in enumerate(row_to):
            for j, tj in enumerate(col_to):
                out[ti, tj] += t[i, j]
        tables[key] = out
    return Correlation(p.questions_a, p.questions_b, answers, answers, tables)


# --- separating correlation proxy ----------------------------------------------


def truncation_tail_budget(cutoff: int) -> float:
    """Certified envelope on the correlation distance between the cutoff
    truncation of the separating family and its pointwise limit.

    The truncations share all block angles with the limit, so the distance
    decomposes into block-mass renormalization (bounded by the raw squared
    coefficient tail), the boundary block, and the out-of-range mass; a
    conservative constant covers all three for both families.
    """
    k = float(cutoff)
    return 4.0 * (k**-15 / 15.0 + k**-16)


def p_star_infinity(family: str, cutoff: int) -> tuple[Correlation, float]:
    """Finite proxy of the separating correlation plus its tail budget."""
    proxy = evaluate(truncated_separating_strategy(family, cutoff))
    return proxy, truncation_tail_budget(cutoff)


# --- tilted CHSH tables and block functionals -----------------------------------


def _tilted_tables(theta: float) -> dict:
    """The four 2x2 ideal tilted-CHSH tables at block angle theta.

    Valid on [0, pi/2); at theta = 0 the block degenerates to the
    product-state tables, which the last primed block of the even-dimension
    family needs.
    """
    mu, _ = tilt_parameters(theta)
    c, s = math.cos(theta), math.sin(theta)
    cm, sm = math.cos(mu), math.sin(mu)
    tables = {}
    for x, a_obs in ((0, "z"), (1, "x")):
        for y, sign in ((0, +1), (1, -1)):
            t = np.zeros((2, 2))
            bz, bx = cm, sign * sm
            for a in range(2):
                for b in range(2):
                    # p = <psi| P_a (x) Q_b |psi> for the 2-qubit ideal block
                    pa = _qubit_proj(a_obs, a)
                    qb = (np.eye(2) + (-1) ** b * (bz * _PZ + bx * _PX)) / 2
                    vec = np.array([c, 0, 0, s])
                    op = np.kron(pa, qb)
                    t[a, b] = float(np.real(vec @ op @ vec))
            tables[(x, y)] = t
    return tables


_PZ = np.array([[1.0, 0.0], [0.0, -1.0]])
_PX = np.array([[0.0, 1.0], [1.0, 0.0]])


def _qubit_proj(obs: str, outcome: int) -> np.ndarray:
    base = _PZ if obs == "z" else _PX
    return (np.eye(2) + (-1) ** outcome * base) / 2


_TILTED_CACHE: dict = {}


def tilted_tables(theta: float) -> dict:
    key = round(theta, 15)
    if key not in _TILTED_CACHE:
        _TILTED_CACHE[key] = _tilted_tables(theta)
    return _TILTED_CACHE[key]


def bell_value(p: Correlation, block: BlockParams, qmap: dict) -> float:
    """Tilted-CHSH functional alpha<A0> + <A0B0> + <A0B1> + <A1B0> - <A1B1>
    evaluated on one coefficient block.

    qmap carries the four questions and the two answer labels per party
    forming the block; the tilt enters with the sign matching the block
    angle, so the ideal block attains sqrt(8 + 2 alpha^2) times its mass.
    """
    ap, am = (p.index_a(a) for a in qmap["alice_pair"])
    bp, bm = (p.index_b(b) for b in qmap["bob_pair"])

    def corr_term(qx, qy):
        t = p.table(qx, qy)
        return t[ap, bp] + t[am, bm] - t[ap, bm] - t[am, bp]

    t00 = p.table(qmap["A0"], qmap["B0"])
    marg_a0 = float(t00[ap, :].sum() - t00[am, :].sum())
    return (
        block.alpha_signed * marg_a0
        + corr_term(qmap["A0"], qmap["B0"])
        + corr_term(qmap["A0"], qmap["B1"])
        + corr_term(qmap["A1"], qmap["B0"])
        - corr_term(qmap["A1"], qmap["B1"])
    )


def block_question_map(family: str, m: int, primed: bool = False) -> dict:
    """Question/answer labels realizing the tilted functional on block m of
    an ideal-family correlation."""
    if family == MANY_ANSWERS:
        if primed:
            return {
                "A0": 0, "A1": 2, "B0": 2, "B1": 3,
                "alice_pair": (2 * m + 1, 2 * m + 2),
                "bob_pair": (2 * m + 1, 2 * m + 2),
            }
        return {
            "A0": 0, "A1": 1, "B0": 0, "B1": 1,
            "alice_pair": (2 * m, 2 * m + 1),
            "bob_pair": (2 * m, 2 * m + 1),
        }
    if family == MANY_QUESTIONS:
        if primed:
            return {
                "A0": (m, "Z"), "A1": (m, "X'"),
                "B0": (m, "Z'"), "B1": (m, "X'"),
                "alice_pair": (1, 2),
                "bob_pair": (0, 1),
            }
        return {
            "A0": (m, "Z"), "A1": (m, "X"),
            "B0": (m, "Z"), "B1": (m, "X"),
            "alice_pair": (0, 1),
            "bob_pair": (0, 1),
        }
    raise ValidationError(f"unknown family {family!r}")


# --- structural verifiers --------------------------------------------------------


@dataclass(frozen=True)
class VerifyReport:
    """Entrywise residuals of the defining correlation properties."""

    max_residual: float
    argmax: tuple
    first_violation: tuple | None
    n_checked: int

    def passed(self, tol: float) -> bool:
        return self.max_residual <= tol


class _ResidualTracker:
    def __init__(self, tol: float):
        self.tol = tol
        self.max_residual = 0.0
        self.argmax = None
        self.first_violation = None
        self.n = 0

    def check(self, location, actual: float, expected: float) -> None:
        r = abs(actual - expected)
        self.n += 1
        if r > self.max_residual:
            self.max_residual = r
            self.argmax = location
        if r > self.tol and self.first_violation is None:
            self.first_violation = location

    def report(self) -> VerifyReport:
        return VerifyReport(self.max_residual, self.argmax, self.first_violation, self.n)


def verify_many_answers(p: Correlation, state: SchmidtState, tol: float) -> VerifyReport:
    """Check the block structure of the odd-dimension family: unprimed
    tilted blocks with trailing corner for x,y in {0,1}, shifted primed
    blocks with leading corner for x in {0,2}, y in {2,3}."""
    d = state.d
    if p.answers_a != tuple(range(d)) or p.answers_b != tuple(range(d)):
        raise ValidationError("answer sets do not match the state dimension")
    c2 = state.c**2
    tr = _ResidualTracker(tol)
    n_blocks = (d - 1) // 2

    for x in (0, 1):
        for y in (0, 1):
            t = p.table(x, y)
            expected = np.zeros((d, d))
            for m in range(n_blocks):
                bp = block_params(state, m)
                mass = c2[2 * m] + c2[2 * m + 1]
                expected[2 * m : 2 * m + 2, 2 * m : 2 * m + 2] = (
                    mass * tilted_tables(bp.theta)[(x, y)]
                )
            expected[d - 1, d - 1] = c2[d - 1]
            for a in range(d):
                for b in range(d):
                    tr.check((x, y, a, b), t[a, b], expected[a, b])

    fmap, gmap = {0: 0, 2: 1}, {2: 0, 3: 1}
    for x in (0, 2):
        for y in (2, 3):
            t = p.table(x, y)
            expected = np.zeros((d, d))
            expected[0, 0] = c2[0]
            for m in range(n_blocks):
                bp = block_params(state, m, primed=True)
                mass = c2[2 * m + 1] + c2[2 * m + 2]
                expected[2 * m + 1 : 2 * m + 3, 2 * m + 1 : 2 * m + 3] = (
                    mass * tilted_tables(bp.theta)[(fmap[x], gmap[y])]
                )
            for a in range(d):
                for b in range(d):
                    tr.check((x, y, a, b), t[a, b], expected[a, b])
    return tr.report()


def verify_many_questions(p: Correlation, state: SchmidtState, tol: float) -> VerifyReport:
    """Check the even-dimension family: per-block tilted tables on the
    {Z,X} and {Z,X'}x{Z',X'} question pairs, the coefficient equalities
    linking consecutive blocks, and the cross-block zeros."""
    d = state.d
    if d % 2:
        raise ValidationError("state dimension must be even for this family")
    c2 = state.c**2
    c2_pad = np.append(c2, 0.0)
    c_pad = np.append(state.c, 0.0)
    tr = _ResidualTracker(tol)
    a_idx = {a: p.index_a(a) for a in p.answers_a}
    b_idx = {b: p.index_b(b) for b in p.answers_b}

    def theta_of(m, primed):
        lo = 2 * m + 1 if primed else 2 * m
        return math.atan2(c_pad[lo + 1], c_pad[lo])

    fmap = {"Z": 0, "X": 1, "X'": 1}
    gmap = {"Z": 0, "Z'": 0, "X": 1, "X'": 1}

    for m in range(d // 2):
        # unprimed pairs: answers {0,1} x {0,1} carry the tilted block,
        # the off-block entries except the perp/perp and (2, perp) stars vanish
        mass = c2[2 * m] + c2[2 * m + 1]
        tt = tilted_tables(theta_of(m, False))
        for xtag in ("Z", "X"):
            for ytag in ("Z", "X"):
                t = p.table((m, xtag), (m, ytag))
                block = mass * tt[(fmap[xtag], gmap[ytag])]
                for a in (0, 1):
                    for b in (0, 1):
                        tr.check(((m, xtag), (m, ytag), a, b), t[a_idx[a], b_idx[b]], block[a, b])
                for a in (0, 1):
                    tr.check(((m, xtag), (m, ytag), a, PERP), t[a_idx[a], b_idx[PERP]], 0.0)
                for b in (0, 1):
                    tr.check(((m, xtag), (m, ytag), 2, b), t[a_idx[2], b_idx[b]], 0.0)
                    tr.check(((m, xtag), (m, ytag), PERP, b), t[a_idx[PERP], b_idx[b]], 0.0)
        # primed pairs: answers {1,2} x {0,1}
        massp = c2_pad[2 * m + 1] + c2_pad[2 * m + 2]
        ttp = tilted_tables(theta_of(m, True))
        for xtag in ("Z", "X'"):
            for ytag in ("Z'", "X'"):
                t = p.table((m, xtag), (m, ytag))
                block = massp * ttp[(fmap[xtag], gmap[ytag])]
                for a in (1, 2):
                    for b in (0, 1):
                        tr.check(
                            ((m, xtag), (m, ytag), a, b),
                            t[a_idx[a], b_idx[b]],
                            block[a - 1, b],
                        )
                for b in (0, 1):
                    tr.check(((m, xtag), (m, ytag), 0, b), t[a_idx[0], b_idx[b]], 0.0)
                    tr.check(((m, xtag), (m, ytag), PERP, b), t[a_idx[PERP], b_idx[b]], 0.0)
                for a in (1, 2):
                    tr.check(((m, xtag), (m, ytag), a, PERP), t[a_idx[a], b_idx[PERP]], 0.0)

    # coefficient equalities linking block m to block m+1
    for m in range(d // 2 - 1):
        target = c2[2 * m + 2]
        for y in p.questions_b:
            t = p.table((m, "Z"), y)
            tr.check(((m, "Z"), y, 2, "marginal"), float(t[a_idx[2], :].sum()), target)
            t = p.table((m + 1, "Z"), y)
            tr.check(((m + 1, "Z"), y, 0, "marginal"), float(t[a_idx[0], :].sum()), target)
        for x in p.questions_a:
            t = p.table(x, (m + 1, "Aux"))
            tr.check((x, (m + 1, "Aux"), "marginal", 0), float(t[:, b_idx[0]].sum()), target)
        t = p.table((m, "Z"), (m + 1, "Aux"))
        tr.check(((m, "Z"), (m + 1, "Aux"), 2, 0), t[a_idx[2], b_idx[0]], target)
        t = p.table((m + 1, "Z"), (m + 1, "Aux"))
        tr.check(((m + 1, "Z"), (m + 1, "Aux"), 0, 0), t[a_idx[0], b_idx[0]], target)

    # cross-block zeros
    for m in range(d // 2):
        for mp in range(d // 2):
            if m == mp:
                continue
            t = p.table((m, "Z"), (mp, "Aux"))
            for a in (0, 1):
                for b in (0, 1):
                    tr.check(((m, "Z"), (mp, "Aux"), a, b), t[a_idx[a], b_idx[b]], 0.0)
    return tr.report()
