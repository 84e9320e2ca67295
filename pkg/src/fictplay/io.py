"""Trace files (JSON Lines) and bound-report files (JSON).

A trace file starts with an optional ``{"meta": {...}}`` line holding the
matrix, dynamic, tie-break ranks and starting point; every other line is one
round ``{"t", "i", "j", "psi", "tie_x", "tie_y"}`` with 1-based actions and
optional ``p, q, u, v, w`` arrays when a snapshot exists for that round.
With the meta line the reader rebuilds the run exactly from the actions.
"""
from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .dynamics import DynamicKind, TieBreakRule, Trace, trace_from_actions
from .game import PayoffMatrix, matrix_from_json


def _num(v):
    """JSON-friendly number: int when integral, ``"a/b"`` for other Fractions."""
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _parse_num(v):
    if isinstance(v, str):
        return Fraction(v)
    return v


def _psi_column(trace: Trace) -> list:
    raw = trace.psi_raw
    if trace.exact:
        pu = int(trace.p_unit)
        return [int(r) // pu if r % pu == 0 else float(Fraction(int(r), pu)) for r in raw]
    return [float(r) for r in raw]


def trace_meta(trace: Trace) -> dict:
    meta = {
        "dynamic": trace.kind.value,
        "matrix": trace.matrix.to_json(),
        "sigma_x": [v + 1 for v in trace.rule.sigma_x],
        "sigma_y": [v + 1 for v in trace.rule.sigma_y],
        "mode": trace.mode,
        "rounds": trace.rounds,
    }
    if trace.start is not None:
        unit = trace.unit
        conv = (lambda r: _num(Fraction(int(r), int(unit)))) if trace.exact else float
        meta["start"] = {"x": [conv(v) for v in trace.start[0]], "y": [conv(v) for v in trace.start[1]]}
    if not trace.exact:
        meta["tol"] = trace.tol
    if trace.error:
        meta["error"] = trace.error
    return meta


def write_trace(trace: Trace, fh, meta: bool = True) -> None:
    """Write ``trace`` to an open text file."""
    if meta:
        fh.write(json.dumps({"meta": trace_meta(trace)}) + "\n")
    psi = _psi_column(trace)
    i1 = (trace.i + 1).tolist()
    j1 = (trace.j + 1).tolist()
    tx = trace.tie_x.tolist()
    ty = trace.tie_y.tolist()
    snaps = trace.snapshots
    for k in range(trace.rounds):
        t = k + 1
        line = (f'{{"t":{t},"i":{i1[k]},"j":{j1[k]},"psi":{json.dumps(psi[k])},'
                f'"tie_x":{"true" if tx[k] else "false"},"tie_y":{"true" if ty[k] else "false"}')
        if t in snaps:
            s = snaps[t]
            for name in ("p", "q", "u", "v", "w"):
                vec = getattr(s, name)
                if vec is not None:
                    line += f',"{name}":{json.dumps([float(c) for c in vec])}'
        fh.write(line + "}\n")


def save_trace(trace: Trace, path, meta: bool = True) -> None:
    with open(path, "w") as fh:
        write_trace(trace, fh, meta)


def read_trace(lines, matrix: PayoffMatrix | None = None) -> Trace:
    """Parse a trace from an iterable of JSONL lines.

    Without a meta line, ``matrix`` must be given and the trace can only
    serve round-level checks (there is no start to rebuild state from).
    """
    meta = None
    rows = []
    for ln, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValueError(f"line {ln}: {e}") from None
        if "meta" in obj:
            meta = obj["meta"]
            continue
        rows.append(obj)
    if not rows:
        raise ValueError("trace file has no rounds")
    ts = [r["t"] for r in rows]
    if ts != list(range(1, len(rows) + 1)):
        raise ValueError("round numbers must run 1, 2, ..., T without gaps")
    i = np.array([r["i"] for r in rows], dtype=np.int32) - 1
    j = np.array([r["j"] for r in rows], dtype=np.int32) - 1
    tie_x = np.array([bool(r.get("tie_x", False)) for r in rows])
    tie_y = np.array([bool(r.get("tie_y", False)) for r in rows])
    if meta is not None:
        A = matrix_from_json(meta["matrix"])
        if matrix is not None and matrix != A:
            raise ValueError("matrix given does not match the trace file")
        kind = DynamicKind(meta.get("dynamic", "fp"))
        rule = TieBreakRule.from_one_based(meta["sigma_x"], meta["sigma_y"])
        if "start" in meta:
            start = ([_parse_num(v) for v in meta["start"]["x"]],
                     [_parse_num(v) for v in meta["start"]["y"]])
            trace = trace_from_actions(kind, A, rule, start, i, j, tie_x, tie_y,
                                       mode=meta.get("mode", "auto"), tol=meta.get("tol"))
            _check_psi(trace, rows)
            trace.error = meta.get("error")
            return trace
    else:
        if matrix is None:
            raise ValueError("trace file has no meta line; pass the matrix")
        A, kind, rule = matrix, DynamicKind.FP, TieBreakRule.identity(matrix.n)
    psi = np.array([float(_parse_num(r["psi"])) for r in rows])
    return Trace(kind, A, rule, "float", 1, i, j, psi, tie_x, tie_y)


def _check_psi(trace: Trace, rows) -> None:
    got = np.array([float(_parse_num(r["psi"])) for r in rows])
    want = trace.psi
    if not np.allclose(got, want, rtol=1e-9, atol=1e-9):
        k = int(np.argmax(np.abs(got - want)))
        raise ValueError(f"gap column disagrees with the replayed run at t={k + 1}: "
                         f"file {got[k]}, replay {want[k]}")


def load_trace(path, matrix: PayoffMatrix | None = None) -> Trace:
    with open(path) as fh:
        return read_trace(fh, matrix)


def reports_to_json(reports) -> list:
    return [r.to_json() for r in reports]


def save_reports(reports, path) -> None:
    with open(path, "w") as fh:
        json.dump(reports_to_json(reports), fh, indent=1)
        fh.write("\n")
