"""Lower-bound checks for FP on the identity game from a vertex start."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..dynamics import DynamicKind
from .lemmas import PreconditionError
from .report import BoundReport, Check
from .segment import Segmentation, segment_phases


def _check_preconditions(trace, n):
    A = trace.matrix
    if not A.is_identity:
        raise PreconditionError("identity lower bound needs A = I_n")
    if n is not None and n != A.n:
        raise PreconditionError(f"n={n} does not match the matrix size {A.n}")
    if trace.kind is not DynamicKind.FP:
        raise PreconditionError("identity lower bound is stated for simultaneous FP")
    if not trace.exact:
        raise PreconditionError("identity lower bound needs an exact-mode trace")
    if trace.start is None:
        raise PreconditionError("trace has no recorded start")
    for v in trace.start:
        if np.count_nonzero(v) != 1:
            raise PreconditionError("identity lower bound needs a vertex start")


def verify_identity_lower(trace, n: int | None = None, seg: Segmentation | None = None) -> BoundReport:
    """Integrality and growth of the gap for FP on ``I_n``.

    Checks that the gap is an integer in every round, that
    ``psi(t) >= sqrt(t) / (7n) - 2n``, that it grows by at least 2 over every
    ``n`` consecutive pairs, that ``T_{s+1} <= 196 s^2``, that
    ``psi(T_s) >= sqrt(T_s) / (7n)`` at ``s = l n + 1``, and that each phase
    transition moves the gap by exactly 0 or 1 as the tie-break ranks dictate.
    """
    _check_preconditions(trace, n)
    n = trace.matrix.n
    seg = seg if seg is not None else segment_phases(trace)
    c = Check("identity_lower_bound", True)
    raw = trace.psi_raw_all
    pu = int(trace.p_unit)
    ts = np.arange(1, raw.size + 1)

    rem = raw % pu
    c.bulk(rem == 0, np.where(rem == 0, 0.0, -1.0), ts, "gap is integral")

    # psi >= sqrt(t)/(7n) - 2n  <=>  t <= 49 n^2 (psi + 2n)^2   (psi + 2n > 0)
    psi = raw.astype(object) // pu
    rhs = 49 * n * n * (psi + 2 * n) ** 2
    ok = np.asarray(ts.astype(object) <= rhs, dtype=bool)
    margin = raw.astype(float) / pu - (np.sqrt(ts) / (7 * n) - 2 * n)
    c.bulk(ok, margin, ts, "psi >= sqrt(t)/(7n) - 2n")
    c.details["min_margin_lower"] = float(margin.min())

    starts = seg.pair_starts
    gaps = [trace.psi_value(t) for t in starts]
    for s in range(1, len(starts) - n + 1):
        c.ge(gaps[s - 1 + n], gaps[s - 1] + 2, starts[s - 1], "gap +2 over n pairs", s=s)
    for s in range(1, len(starts)):
        c.le(starts[s], 196 * s * s, starts[s], "T_{s+1} <= 196 s^2", s=s)
    for s in range(n + 1, len(starts) + 1, n):
        c.root_le(Fraction(1, 7 * n), starts[s - 1], gaps[s - 1],
                  starts[s - 1], "psi(T_s) >= sqrt(T_s)/(7n)", s=s)

    sx, sy = trace.rule.sigma_x, trace.rule.sigma_y
    for a, b in zip(seg.phases, seg.phases[1:]):
        t = b.start_t
        eps = trace.psi_value(t) - trace.psi_value(t - 1)
        if a.is_sync and not b.is_sync and b.j == a.i:
            i, j = a.i, b.i
            expect = 0 if sx[i] > sx[j] else 1
        elif not a.is_sync and b.is_sync and b.i == a.i:
            j, i = a.i, a.j
            expect = 0 if sy[i] > sy[j] else 1
        else:
            c._record(False, -1.0, t, "unexpected phase succession",
                      {"prev": a.label(), "next": b.label()})
            continue
        c.eq(eps, expect, t, "transition increment", prev=a.label(), next=b.label())
    c.details["pairs"] = len(seg.pairs)
    c.details["final_gap"] = trace.psi_value(raw.size)
    return c.report()
