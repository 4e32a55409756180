"""JSON and CSV serialization: strategies, correlations, kits, reports.

Complex numbers are [re, im] pairs; question labels are ints (one family)
or [block, tag] pairs (the other); floats go through Python's shortest
round-trip repr in JSON and %.17g in CSV, so writing and re-reading is
exact.
"""

from __future__ import annotations

import csv
import io as _io
import json

import numpy as np

from .correlations import Correlation
from .errors import ValidationError
from .linalg import PureState
from .strategies import Measurement, Strategy

CSV_SUM_TOL = 1e-8


def _label_out(label):
    if isinstance(label, tuple):
        return list(label)
    return label


def _label_in(label):
    if isinstance(label, list):
        return (int(label[0]), str(label[1]))
    return label


def _matrix_out(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _matrix_in(data) -> np.ndarray:
    return np.array(
        [[complex(re, im) for re, im in row] for row in data], dtype=np.complex128
    )


def _vector_out(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v)]


def _vector_in(data) -> np.ndarray:
    return np.array([complex(re, im) for re, im in data], dtype=np.complex128)


def strategy_to_json(strategy: Strategy) -> dict:
    def party(measurements):
        return [
            {
                "question": _label_out(q),
                "outcomes": [_label_out(o) for o in meas.outcomes],
                "projectors": [_matrix_out(p) for p in meas.projectors],
            }
            for q, meas in measurements.items()
        ]

    return {
        "state": {
            "dims": list(strategy.state.dims),
            "amplitudes": _vector_out(strategy.state.amplitudes),
        },
        "alice": party(strategy.alice),
        "bob": party(strategy.bob),
    }


def strategy_from_json(doc: dict) -> Strategy:
    state = PureState(
        tuple(doc["state"]["dims"]), _vector_in(doc["state"]["amplitudes"])
    )

    def party(items):
        out = {}
        for item in items:
            q = _label_in(item["question"])
            outcomes = tuple(_label_in(o) for o in item["outcomes"])
            projs = tuple(_matrix_in(p) for p in item["projectors"])
            out[q] = Measurement(q, outcomes, projs)
        return out

    return Strategy(state, party(doc["alice"]), party(doc["bob"]))


def correlation_to_json(p: Correlation) -> dict:
    tables = {}
    for x in p.questions_a:
        for y in p.questions_b:
            key = json.dumps([_label_out(x), _label_out(y)], separators=(",", ":"))
            tables[key] = [float(v) for v in p.table(x, y).reshape(-1)]
    return {
        "X": [_label_out(x) for x in p.questions_a],
        "Y": [_label_out(y) for y in p.questions_b],
        "A": [_label_out(a) for a in p.answers_a],
        "B": [_label_out(b) for b in p.answers_b],
        "tables": tables,
    }


def correlation_from_json(doc: dict) -> Correlation:
    xs = tuple(_label_in(x) for x in doc["X"])
    ys = tuple(_label_in(y) for y in doc["Y"])
    answers_a = tuple(_label_in(a) for a in doc["A"])
    answers_b = tuple(_label_in(b) for b in doc["B"])
    shape = (len(answers_a), len(answers_b))
    tables = {}
    for key, flat in doc["tables"].items():
        x_raw, y_raw = json.loads(key)
        t = np.asarray(flat, dtype=np.float64).reshape(shape)
        if abs(t.sum() - 1.0) > CSV_SUM_TOL:
            raise ValidationError(f"table {key} sums to {t.sum()!r}; rejecting")
        tables[(_label_in(x_raw), _label_in(y_raw))] = t
    return Correlation(xs, ys, answers_a, answers_b, tables)


def correlation_to_csv(p: Correlation) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y", "a", "b", "p"])
    for x in p.questions_a:
        for y in p.questions_b:
            t = p.table(x, y)
            for i, a in enumerate(p.answers_a):
                for j, b in enumerate(p.answers_b):
                    writer.writerow(
                        [
                            json.dumps(_label_out(x), separators=(",", ":")),
                            json.dumps(_label_out(y), separators=(",", ":")),
                            json.dumps(_label_out(a), separators=(",", ":")),
                            json.dumps(_label_out(b), separators=(",", ":")),
                            "%.17g" % t[i, j],
                        ]
                    )
    return buf.getvalue()


def correlation_from_csv(text: str) -> Correlation:
    xs, ys, answers_a, answers_b = [], [], [], []
    entries = {}
    reader = csv.reader(_io.StringIO(text))
    header = next(reader)
    if header != ["x", "y", "a", "b", "p"]:
        raise ValidationError("unexpected CSV header")
    for row in reader:
        x = _label_in(json.loads(row[0]))
        y = _label_in(json.loads(row[1]))
        a = _label_in(json.loads(row[2]))
        b = _label_in(json.loads(row[3]))
        for seq, val in ((xs, x), (ys, y), (answers_a, a), (answers_b, b)):
            if val not in seq:
                seq.append(val)
        entries[(x, y, a, b)] = float(row[4])
    shape = (len(answers_a), len(answers_b))
    tables = {}
    for x in xs:
        for y in ys:
            t = np.zeros(shape)
            for i, a in enumerate(answers_a):
                for j, b in enumerate(answers_b):
                    t[i, j] = entries[(x, y, a, b)]
            if abs(t.sum() - 1.0) > CSV_SUM_TOL:
                raise ValidationError(f"table {(x, y)} sums to {t.sum()!r}; rejecting")
            tables[(x, y)] = t
    return Correlation(tuple(xs), tuple(ys), tuple(answers_a), tuple(answers_b), tables)


def kit_to_json(kit) -> dict:
    return {
        "d": kit.d,
        "family": kit.family,
        "omega": [kit.omega.real, kit.omega.imag],
        "P_A": [_matrix_out(p) for p in kit.P_A],
        "P_B": [_matrix_out(p) for p in kit.P_B],
        "Q_A": [_matrix_out(p) for p in kit.Q_A],
        "Q_B": [_matrix_out(p) for p in kit.Q_B],
        "chain_A": [_matrix_out(p) for p in kit.chain_A],
        "chain_B": [_matrix_out(p) for p in kit.chain_B],
        "Z_A": _matrix_out(kit.Z_A),
        "Z_B": _matrix_out(kit.Z_B),
    }


def dump_json(doc, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)
