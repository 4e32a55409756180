"""Command-line interface.

Subcommands: build, evaluate, verify, distance, extract, experiment.
Exit codes: 0 success, 1 validation failure, 2 resource limit,
64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config import set_max_dim
from .correlations import distance, evaluate, verify_many_answers, verify_many_questions
from .errors import ResourceLimitError, ValidationError
from .experiments import ExperimentConfig, run_experiment, write_report
from .extraction import build_kit, swap_isometry, yn_residuals
from .io import (
    correlation_from_csv,
    correlation_from_json,
    correlation_to_csv,
    correlation_to_json,
    dump_json,
    kit_to_json,
    load_json,
    strategy_from_json,
    strategy_to_json,
)
from .states import SchmidtState, make_state, psi_N
from .strategies import (
    MANY_ANSWERS,
    family_of,
    many_answers_ideal,
    many_questions_ideal,
    truncated_separating_strategy,
)

COMMANDS = ("build", "evaluate", "verify", "distance", "extract", "experiment")

USAGE = """usage: qselftest <command> [options]

commands:
  build       emit an ideal-strategy JSON document
  evaluate    strategy JSON -> correlation JSON/CSV
  verify      correlation + state -> structural residual report
  distance    two correlations -> distance report
  extract     strategy -> extraction kit residuals and swap error
  experiment  run a config-driven experiment and write its report
"""


def _out_path(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get("QSELFTEST_OUT_DIR")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _emit(doc: dict, out: str | None) -> None:
    if out:
        dump_json(doc, out)
    else:
        json.dump(doc, sys.stdout, indent=1)
        sys.stdout.write("\n")


def _load_state(args) -> SchmidtState:
    if args.coeffs:
        return make_state([float(x) for x in args.coeffs.split(",")])
    if args.state:
        doc = load_json(args.state)
        return SchmidtState(np.asarray(doc["c"], dtype=np.float64))
    raise ValidationError("provide --coeffs or --state")


def _cmd_build(args) -> int:
    if args.coeffs:
        state = _load_state(args)
        strat = (
            many_answers_ideal(state)
            if state.d % 2 == 1
            else many_questions_ideal(state)
        )
    else:
        strat = truncated_separating_strategy(args.family, args.n)
    _emit(strategy_to_json(strat), _out_path(args.out))
    return 0


def _cmd_evaluate(args) -> int:
    strat = strategy_from_json(load_json(args.strategy))
    corr = evaluate(strat)
    out = _out_path(args.out)
    if args.format == "csv":
        text = correlation_to_csv(corr)
        if out:
            with open(out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        _emit(correlation_to_json(corr), out)
    return 0


def _load_correlation(path: str):
    if path.endswith(".csv"):
        with open(path) as fh:
            return correlation_from_csv(fh.read())
    return correlation_from_json(load_json(path))


def _cmd_verify(args) -> int:
    corr = _load_correlation(args.correlation)
    state = _load_state(args)
    if all(isinstance(x, int) for x in corr.questions_a):
        report = verify_many_answers(corr, state, args.tol)
    else:
        report = verify_many_questions(corr, state, args.tol)
    doc = {
        "max_residual": report.max_residual,
        "argmax": list(map(str, report.argmax)) if report.argmax else None,
        "first_violation": (
            list(map(str, report.first_violation)) if report.first_violation else None
        ),
        "n_checked": report.n_checked,
        "tol": args.tol,
        "passed": report.passed(args.tol),
    }
    _emit(doc, _out_path(args.out))
    return 0 if doc["passed"] else 1


def _cmd_distance(args) -> int:
    p = _load_correlation(args.p)
    q = _load_correlation(args.q)
    rep = distance(p, q)
    _emit(
        {"value": rep.value, "argmax": [str(v) for v in rep.argmax]},
        _out_path(args.out),
    )
    return 0


def _cmd_extract(args) -> int:
    strat = strategy_from_json(load_json(args.strategy))
    state = _load_state(args)
    family = family_of(strat)
    kit = build_kit(strat, family, state)
    res = yn_residuals(kit, strat.state, state)
    swap = swap_isometry(kit, strat.state, state)
    doc = {
        "d": kit.d,
        "family": family,
        "yn": [res.eps1, res.eps2, res.eps3, res.eps4],
        "yn_overall": res.overall,
        "extraction_error": swap.error,
        "output_norm": swap.output_norm,
    }
    if args.full_kit:
        doc["kit"] = kit_to_json(kit)
    _emit(doc, _out_path(args.out))
    return 0


def _cmd_experiment(args) -> int:
    doc = load_json(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = ExperimentConfig.from_json(doc)
    report = run_experiment(cfg)
    out = _out_path(args.out)
    if out:
        write_report(report, out, args.format)
    else:
        sys.stdout.write(
            report_to_text(report, args.format)
        )
    return 0 if report.get("all_ok", True) else 1


def report_to_text(report: dict, fmt: str) -> str:
    from .experiments import report_to_csv_text, report_to_json_text

    return report_to_csv_text(report) if fmt == "csv" else report_to_json_text(report)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qselftest", description=USAGE)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("build", help="emit an ideal strategy JSON")
    p.add_argument("--family", default=MANY_ANSWERS)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--coeffs", default=None, help="comma-separated raw coefficients")
    p.add_argument("--state", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("evaluate", help="strategy JSON -> correlation")
    p.add_argument("--strategy", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify", help="check the defining correlation properties")
    p.add_argument("--correlation", required=True)
    p.add_argument("--coeffs", default=None)
    p.add_argument("--state", default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", default=None)

    p = sub.add_parser("distance", help="sup/L1 distance between correlations")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("extract", help="build the extraction kit and swap error")
    p.add_argument("--strategy", required=True)
    p.add_argument("--coeffs", default=None)
    p.add_argument("--state", default=None)
    p.add_argument("--full-kit", action="store_true")
    p.add_argument("--out", default=None)

    p = sub.add_parser("experiment", help="run a config-driven experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)

    for sp in sub.choices.values():
        sp.add_argument("--max-dim", type=int, default=None)
    return parser


HANDLERS = {
    "build": _cmd_build,
    "evaluate": _cmd_evaluate,
    "verify": _cmd_verify,
    "distance": _cmd_distance,
    "extract": _cmd_extract,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        print(USAGE)
        return 0
    if argv[0] == "--version":
        print(__version__)
        return 0
    if argv[0] not in COMMANDS:
        print(USAGE, file=sys.stderr)
        return 64
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    if getattr(args, "max_dim", None):
        set_max_dim(args.max_dim)
    try:
        return HANDLERS[args.command](args)
    except ResourceLimitError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
