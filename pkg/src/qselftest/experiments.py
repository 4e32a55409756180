"""Reproducible experiment pipelines: truncation convergence, extraction
robustness, and the dimension-witness consistency checks.

Every run is a pure function of its config: per-cell seeds are derived by
hashing, reports carry the config hash and library version, and reruns are
byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .correlations import distance, evaluate, lift_answers, lift_questions, p_star_infinity
from .errors import ValidationError
from .extraction import build_kit, swap_isometry, yn_residuals
from .linalg import low_rank_distance
from .states import SchmidtState, make_state, psi_N
from .strategies import (
    MANY_ANSWERS,
    MANY_QUESTIONS,
    many_answers_ideal,
    many_questions_ideal,
    perturb,
    truncated_separating_strategy,
)

SLOPE_CONVERGENCE = (-16.0, 0.5)
SLOPE_WITNESS = (-16.0, 1.0)
ROBUSTNESS_MIN_SLOPE = 0.2


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    family: str = MANY_ANSWERS
    n_list: tuple = ()
    d_list: tuple = ()
    eps_grid: tuple = ()
    trials: int = 1
    seed: int = 0
    cutoff: int = 31
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "d_list", tuple(int(d) for d in self.d_list))
        object.__setattr__(self, "eps_grid", tuple(float(e) for e in self.eps_grid))
        if self.experiment not in ("convergence", "robustness", "witness"):
            raise ValidationError(f"unknown experiment {self.experiment!r}")
        if self.family not in (MANY_ANSWERS, MANY_QUESTIONS):
            raise ValidationError(f"unknown family {self.family!r}")

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ValidationError(f"unknown config fields {sorted(extra)}")
        return cls(**doc)

    def to_json(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def cell_seed(base: int, *parts) -> int:
    blob = repr((base,) + parts).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def _loglog_slope(xs, ys) -> float | None:
    pts = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(pts) < 2:
        return None
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])


def _report_skeleton(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": cfg.experiment,
        "family": cfg.family,
        "config": cfg.to_json(),
        "config_hash": cfg.digest(),
        "version": __version__,
    }


def run_convergence(cfg: ExperimentConfig) -> dict:
    """Distances from truncated ideal correlations to the separating-
    correlation proxy, with the fitted N^-16 bound and slope window."""
    family = cfg.family
    proxy, budget = p_star_infinity(family, cfg.cutoff)
    rows = []
    for n in cfg.n_list:
        strat = truncated_separating_strategy(family, n)
        if family == MANY_ANSWERS:
            lifted = lift_answers(evaluate(strat), cfg.cutoff)
            ref = lift_answers(proxy, cfg.cutoff)
        else:
            lifted = lift_questions(strat, n, cfg.cutoff)
            ref = proxy
        rows.append({"N": n, "distance": distance(lifted, ref).value})
    alpha = rows[0]["distance"] * float(rows[0]["N"]) ** 16
    for row in rows:
        row["bound"] = alpha * float(row["N"]) ** -16
        row["bound_ok"] = row["distance"] <= row["bound"] * (1 + 1e-12)
    slope = _loglog_slope([r["N"] for r in rows], [r["distance"] for r in rows])
    center, window = SLOPE_CONVERGENCE
    report = _report_skeleton(cfg)
    report.update(
        {
            "cutoff": cfg.cutoff,
            "tail_budget": budget,
            "alpha": alpha,
            "rows": rows,
            "slope": slope,
            "slope_ok": slope is not None and abs(slope - center) <= window,
            "bound_ok": all(r["bound_ok"] for r in rows),
        }
    )
    report["all_ok"] = bool(report["slope_ok"] and report["bound_ok"]) if slope is not None else all(
        r["bound_ok"] for r in rows
    )
    return report


def _random_family_state(family: str, d: int, seed: int) -> SchmidtState:
    # coefficients bounded away from 0 keep every block angle well inside
    # (0, pi/2), so flips never divide by a tiny sin(mu)
    rng = np.random.Generator(np.random.Philox(seed))
    return make_state(rng.uniform(0.3, 1.0, size=d))


def _family_ideal(family: str, state: SchmidtState):
    if family == MANY_ANSWERS:
        return many_answers_ideal(state)
    return many_questions_ideal(state)


def run_robustness(cfg: ExperimentConfig) -> dict:
    """Perturb ideal strategies, measure correlation distance delta and
    extraction error E, and fit E <= C d^3 delta^(1/4) plus the slope of
    E against delta."""
    family = cfg.family
    rows = []
    for d in cfg.d_list:
        if family == MANY_ANSWERS and d % 2 == 0:
            raise ValidationError("many_answers robustness needs odd d")
        if family == MANY_QUESTIONS and d % 2 == 1:
            raise ValidationError("many_questions robustness needs even d")
        for trial in range(cfg.trials):
            state = _random_family_state(family, d, cell_seed(cfg.seed, "state", d, trial))
            ideal = _family_ideal(family, state)
            p_ideal = evaluate(ideal)
            for eps in (0.0,) + cfg.eps_grid:
                pert_seed = cell_seed(cfg.seed, "pert", d, trial, "%.17g" % eps)
                pert = perturb(ideal, eps, pert_seed)
                delta = distance(evaluate(pert), p_ideal).value
                kit = build_kit(pert, family, state)
                res = yn_residuals(kit, pert.state, state)
                swap = swap_isometry(kit, pert.state, state)
                rows.append(
                    {
                        "family": family,
                        "d": d,
                        "eps": eps,
                        "trial": trial,
                        "seed": pert_seed,
                        "delta_corr": delta,
                        "yn": [res.eps1, res.eps2, res.eps3, res.eps4],
                        "extraction_error": swap.error,
                    }
                )
    fit_rows = [r for r in rows if r["delta_corr"] > 0]
    c_fit = max(
        (r["extraction_error"] / (r["d"] ** 3 * r["delta_corr"] ** 0.25) for r in fit_rows),
        default=0.0,
    )
    slope = _loglog_slope(
        [r["delta_corr"] for r in fit_rows],
        [r["extraction_error"] for r in fit_rows],
    )
    exact_ok = all(
        r["extraction_error"] <= 1e-8 for r in rows if r["eps"] == 0.0
    )
    report = _report_skeleton(cfg)
    report.update(
        {
            "rows": rows,
            "C_fit": c_fit,
            "slope": slope,
            "slope_ok": slope is not None and slope >= ROBUSTNESS_MIN_SLOPE,
            "exact_ok": exact_ok,
        }
    )
    report["all_ok"] = bool(report["slope_ok"] and exact_ok)
    return report


def run_witness(cfg: ExperimentConfig) -> dict:
    """Dimension-witness consistency: distances of rank-N' truncations to
    the separating proxy against the low-rank distance lower bound."""
    family = cfg.family
    proxy, budget = p_star_infinity(family, cfg.cutoff)
    rows = []
    for n_prime in cfg.n_list:
        strat = truncated_separating_strategy(family, n_prime)
        if family == MANY_ANSWERS:
            lifted = lift_answers(evaluate(strat), cfg.cutoff)
            ref = lift_answers(proxy, cfg.cutoff)
        else:
            lifted = lift_questions(strat, n_prime, cfg.cutoff)
            ref = proxy
        delta = distance(lifted, ref).value + budget
        rows.append({"N_prime": n_prime, "delta": delta})

    alpha = rows[0]["delta"] * float(rows[0]["N_prime"]) ** 16
    parity = 1 if family == MANY_ANSWERS else 0
    for row in rows:
        n_prime, delta = row["N_prime"], row["delta"]
        n_star = max(3, int(round(delta ** (-1 / 16.0))))
        if n_star % 2 != parity:
            n_star += 1
        psi_star = psi_N(n_star)
        lrd = low_rank_distance(psi_star.c, n_prime)
        # the rank bound forced by the witness: any realization this close
        # needs Schmidt rank at least delta^(-1/32)
        threshold = delta ** (-1 / 32.0)
        eq13_floor = float(psi_star.c[n_prime]) if n_prime < n_star else 0.0
        budget14 = n_star**3 * (alpha * float(n_star) ** -16 + delta) ** 0.25
        row.update(
            {
                "N_star": n_star,
                "low_rank_distance": lrd,
                "eq13_floor": eq13_floor,
                "eq13_ok": lrd >= eq13_floor - 1e-12,
                "rank_threshold": threshold,
                "lower_bound_ok": n_prime >= threshold,
                "budget14": budget14,
                "incompat_ok": n_prime >= threshold or lrd > budget14,
            }
        )
    deltas = [r["delta"] for r in rows]
    monotone_ok = all(a > b for a, b in zip(deltas, deltas[1:]))
    slope = _loglog_slope([r["N_prime"] for r in rows], deltas)
    center, window = SLOPE_WITNESS
    report = _report_skeleton(cfg)
    report.update(
        {
            "cutoff": cfg.cutoff,
            "tail_budget": budget,
            "alpha": alpha,
            "rows": rows,
            "monotone_ok": monotone_ok,
            "slope": slope,
            "slope_ok": slope is not None and abs(slope - center) <= window,
            "rows_ok": all(
                r["eq13_ok"] and r["lower_bound_ok"] and r["incompat_ok"] for r in rows
            ),
        }
    )
    report["all_ok"] = bool(report["rows_ok"] and monotone_ok and report["slope_ok"])
    return report


RUNNERS = {
    "convergence": run_convergence,
    "robustness": run_robustness,
    "witness": run_witness,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    return RUNNERS[cfg.experiment](cfg)


def report_to_json_text(report: dict) -> str:
    return json.dumps(report, indent=1) + "\n"


def report_to_csv_text(report: dict) -> str:
    """Row data only, fixed column order, floats at 17 significant digits."""
    rows = report["rows"]
    columns = list(rows[0])
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["config_hash", report["config_hash"], "version", report["version"]])
    writer.writerow(columns)
    for row in rows:
        out = []
        for col in columns:
            v = row[col]
            if isinstance(v, float):
                out.append("%.17g" % v)
            elif isinstance(v, list):
                out.append(json.dumps(["%.17g" % x if isinstance(x, float) else x for x in v]))
            else:
                out.append(v)
        writer.writerow(out)
    return buf.getvalue()


def write_report(report: dict, path: str, fmt: str = "json") -> None:
    """Write a report; warn when overwriting one with a different config."""
    import os

    if fmt == "json" and os.path.exists(path):
        try:
            with open(path) as fh:
                previous = json.load(fh)
            if previous.get("config_hash") not in (None, report["config_hash"]):
                print(
                    f"warning: {path} was produced by config {previous['config_hash']}, "
                    f"overwriting with {report['config_hash']}",
                    file=sys.stderr,
                )
        except (OSError, json.JSONDecodeError):
            pass
    text = report_to_json_text(report) if fmt == "json" else report_to_csv_text(report)
    with open(path, "w") as fh:
        fh.write(text)
