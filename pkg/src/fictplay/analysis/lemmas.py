"""Mechanical checks of the structural facts about FP on diagonal games.

Each ``verify_*`` takes a :class:`~fictplay.dynamics.Trace` and returns a
:class:`BoundReport`.  Pair- and phase-level checks rebuild the state at the
few rounds they need from the recorded actions, so traces do not need to
carry snapshots.  In exact mode every comparison is done on Fractions.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..dynamics import DynamicKind
from ..game import duality_gap, support_form_gap
from .report import LE_SLACK, BoundReport, Check, not_applicable
from .segment import Segmentation, segment_phases
from .weights import weight_from_gaps


class PreconditionError(ValueError):
    """The trace does not satisfy the hypotheses of a checker."""


class _Consts:
    """Diagonal, A_min, A_max and kappa in the trace's number type."""

    def __init__(self, trace):
        A = trace.matrix
        conv = (lambda v: v) if trace.exact else float
        self.d = [conv(v) for v in A.diag_exact]
        self.amin = conv(A.a_min)
        self.amax = conv(A.a_max)
        self.kappa = conv(A.kappa)
        self.n = A.n
        self.one = Fraction(1) if trace.exact else 1.0


def _diag_fp_only(trace, tid: str):
    if trace.kind is not DynamicKind.FP:
        return not_applicable(tid, f"stated for simultaneous FP, trace runs {trace.kind.value}")
    if not trace.matrix.is_diagonal:
        return not_applicable(tid, "stated for diagonal payoff matrices")
    return None


def _seg(trace, seg):
    return seg if seg is not None else segment_phases(trace)


def verify_gap_monotone(trace) -> BoundReport:
    """``0 <= psi(t+1) - psi(t) <= max(A) - min(A)`` (``= A_max`` for diagonal A),
    with equality to zero whenever rounds t and t+1 have the same type."""
    tid = "gap_monotone"
    if trace.kind is not DynamicKind.FP:
        return not_applicable(tid, f"stated for simultaneous FP, trace runs {trace.kind.value}")
    A = trace.matrix
    c = Check(tid, trace.exact)
    raw = trace.psi_raw_all
    d = np.diff(raw)
    ts = np.arange(1, d.size + 1)
    bound = A.a_max if A.is_diagonal and A.n > 1 else A.entry_range()
    pu = trace.p_unit
    if trace.exact:
        bound_raw = bound * pu
        assert bound_raw.denominator == 1
        bound_raw = int(bound_raw)
        lo_ok, hi_ok = d >= 0, d <= bound_raw
        lo_m = d / pu
        hi_m = (bound_raw - d) / pu
    else:
        # a tie tolerance can let the chosen response be off by up to tol
        slack = 2 * trace.tol + LE_SLACK
        lo_m = d + slack
        hi_m = float(bound) - d + slack
        lo_ok, hi_ok = lo_m >= 0, hi_m >= 0
    c.bulk(lo_ok, np.asarray(lo_m, dtype=float), ts, "increment >= 0")
    c.bulk(hi_ok, np.asarray(hi_m, dtype=float), ts, "increment <= bound")
    k = min(trace.rounds - 1, d.size)
    same = (trace.i[1:] == trace.i[:-1]) & (trace.j[1:] == trace.j[:-1])
    same = same[:k]
    ds = d[:k][same]
    if trace.exact:
        ok = ds == 0
        m = 0.0 - np.abs(ds) / pu
    else:
        m = 1e-9 * (1 + np.abs(raw[1:k + 1][same])) + 2 * trace.tol - np.abs(ds)
        ok = m >= 0
    c.bulk(ok, np.asarray(m, dtype=float), ts[:k][same], "same type => increment == 0")
    c.details["bound"] = bound
    return c.report()


def verify_alternation(trace, seg: Segmentation | None = None) -> BoundReport:
    """After the first round, sync(i) is followed by split(j, i) (j != i) and
    split(j, i) by sync(j)."""
    tid = "phase_alternation"
    na = _diag_fp_only(trace, tid)
    if na:
        return na
    seg = _seg(trace, seg)
    c = Check(tid, True)
    for a, b in zip(seg.phases, seg.phases[1:]):
        if a.is_sync:
            ok = (not b.is_sync) and b.j == a.i
        else:
            ok = b.is_sync and b.i == a.i
        c._record(ok, 0.0 if ok else -1.0, b.start_t, "alternation",
                  {"prev": a.label(), "next": b.label()})
    c.details["phases"] = len(seg.phases)
    c.details["pairs"] = len(seg.pairs)
    return c.report()


def _boundaries(seg: Segmentation, want_sync: bool):
    """(phase, next phase) for sync->split(., i) or split(j, .)->sync(j) successions."""
    out = []
    for a, b in zip(seg.phases, seg.phases[1:]):
        if want_sync and a.is_sync and not b.is_sync and b.j == a.i:
            out.append((a, b))
        if not want_sync and not a.is_sync and b.is_sync and b.i == a.i:
            out.append((a, b))
    return out


def verify_sync_phase(trace, seg: Segmentation | None = None) -> BoundReport:
    """A sync(i) phase of length s starting at t, followed by split(j, i):
    ``eps = s A_ii - u_j(t)`` lies in ``[0, A_ii]``, every weight moves by
    ``eps / A_ll`` and the gap moves by ``eps``."""
    tid = "sync_phase"
    na = _diag_fp_only(trace, tid)
    if na:
        return na
    seg = _seg(trace, seg)
    K = _Consts(trace)
    c = Check(tid, trace.exact)
    todo = _boundaries(seg, True)
    trace.prefetch([t for a, b in todo for t in (a.start_t, b.start_t)])
    for a, b in todo:
        t, t2 = a.start_t, b.start_t
        S0, S1 = trace.snapshot(t), trace.snapshot(t2)
        i, j = a.i, b.i
        eps = a.length * K.d[i] - S0.u[j]
        c.ge(eps, 0, t, "eps >= 0", i=i + 1, j=j + 1)
        c.le(eps, K.d[i], t, "eps <= A_ii", i=i + 1, j=j + 1)
        c.eq(S1.psi - S0.psi, eps, t, "gap increment == eps")
        for l in range(K.n):
            c.eq(S1.w[l], S0.w[l] + eps / K.d[l], t, "w_l += eps / A_ll", l=l + 1)
    c.details["phases_checked"] = len(todo)
    return c.report()


def verify_split_phase(trace, seg: Segmentation | None = None) -> BoundReport:
    """A split(j, i) phase of length s starting at t, followed by sync(j):
    ``eps = s A_jj - v_j(t)`` lies in ``[0, A_jj]``; weights off ``{i, j}``
    move by ``eps / A_ll``; ``w_i`` absorbs ``w_j`` plus
    ``(1/A_ii + 1/A_jj) eps`` and ``w_j`` drops to zero."""
    tid = "split_phase"
    na = _diag_fp_only(trace, tid)
    if na:
        return na
    seg = _seg(trace, seg)
    K = _Consts(trace)
    c = Check(tid, trace.exact)
    todo = _boundaries(seg, False)
    trace.prefetch([t for a, b in todo for t in (a.start_t, b.start_t)])
    for a, b in todo:
        t = a.start_t
        S0, S1 = trace.snapshot(t), trace.snapshot(b.start_t)
        j, i = a.i, a.j
        eps = a.length * K.d[j] - S0.v[j]
        c.ge(eps, 0, t, "eps >= 0", i=i + 1, j=j + 1)
        c.le(eps, K.d[j], t, "eps <= A_jj", i=i + 1, j=j + 1)
        c.eq(S1.psi - S0.psi, eps, t, "gap increment == eps")
        for l in range(K.n):
            if l in (i, j):
                continue
            c.eq(S1.w[l], S0.w[l] + eps / K.d[l], t, "w_l += eps / A_ll", l=l + 1)
        c.eq(S1.w[i], S0.w[i] + S0.w[j] + (K.one / K.d[i] + K.one / K.d[j]) * eps,
             t, "w_i absorbs w_j", i=i + 1, j=j + 1)
        c.eq(S1.w[j], 0, t, "w_j == 0", j=j + 1)
    c.details["phases_checked"] = len(todo)
    return c.report()


def verify_pair_conservation(trace, seg: Segmentation | None = None) -> BoundReport:
    """Over a sync-split pair ``i -> j`` from T_s to T_{s+1}, with
    ``eps = psi(T_{s+1}) - psi(T_s)``: ``0 <= eps <= 2 A_max``, ``w_i(T_s) = 0``,
    ``w_l += eps / A_ll`` off ``{i, j}``, ``w_i(T_{s+1}) = w_j(T_s) + (1/A_ii + 1/A_jj) eps``,
    ``w_j(T_{s+1}) = 0``, plus the sandwich bounds those identities imply."""
    tid = "pair_conservation"
    na = _diag_fp_only(trace, tid)
    if na:
        return na
    seg = _seg(trace, seg)
    K = _Consts(trace)
    c = Check(tid, trace.exact)
    trace.prefetch([t for p in seg.pairs for t in (p.T_s, p.next_start)])
    for p in seg.pairs:
        t = p.T_s
        S0, S1 = trace.snapshot(t), trace.snapshot(p.next_start)
        i, j = p.from_action, p.to_action
        eps = p.epsilon
        c.eq(S1.psi - S0.psi, eps, t, "pair gap increment")
        c.ge(eps, 0, t, "eps >= 0")
        c.le(eps, 2 * K.amax, t, "eps <= 2 A_max")
        c.eq(S0.w[i], 0, t, "w_i(T_s) == 0", i=i + 1)
        for l in range(K.n):
            if l in (i, j):
                continue
            dw = S1.w[l] - S0.w[l]
            c.eq(dw, eps / K.d[l], t, "w_l += eps / A_ll", l=l + 1)
            c.le(eps / K.amax, dw, t, "eps / A_max <= dw_l", l=l + 1)
            c.le(dw, eps / K.amin, t, "dw_l <= eps / A_min", l=l + 1)
        gain = S1.w[i] - S0.w[j]
        c.eq(gain, (K.one / K.d[i] + K.one / K.d[j]) * eps, t, "w_i(T_s+1) - w_j(T_s)", i=i + 1, j=j + 1)
        c.le(2 * eps / K.amax, gain, t, "2 eps / A_max <= w_i' - w_j")
        c.le(gain, 2 * eps / K.amin, t, "w_i' - w_j <= 2 eps / A_min")
        c.eq(S1.w[j], 0, t, "w_j(T_s+1) == 0", j=j + 1)
    c.details["pairs"] = len(seg.pairs)
    return c.report()


def verify_pair_length(trace, seg: Segmentation | None = None) -> BoundReport:
    """``w_j(T_s) <= T_{s+1} - T_s <= (kappa + 1) w_j(T_s) + kappa + 2`` with ``j = i_{s+1}``."""
    tid = "pair_length"
    na = _diag_fp_only(trace, tid)
    if na:
        return na
    seg = _seg(trace, seg)
    K = _Consts(trace)
    c = Check(tid, trace.exact)
    trace.prefetch([p.T_s for p in seg.pairs])
    for p in seg.pairs:
        w = trace.snapshot(p.T_s).w[p.to_action]
        c.le(w, p.length, p.T_s, "w_j <= length", j=p.to_action + 1)
        c.le(p.length, (K.kappa + 1) * w + K.kappa + 2, p.T_s, "length <= (k+1) w_j + k + 2",
             j=p.to_action + 1)
    c.details["pairs"] = len(seg.pairs)
    return c.report()


def verify_wpsi(trace, seg: Segmentation | None = None) -> BoundReport:
    """The first sync round satisfies ``T_1 <= kappa + 2`` and ``0 <= w(T_1) <= 3 kappa + 2``;
    at every later pair start and every ``i != i_s``,
    ``(psi(T_s) - psi(T_1)) / A_max <= w_i(T_s) <= 2 (psi(T_s) - psi(T_1)) / A_min + 3 kappa + 2``."""
    tid = "weight_gap_relation"
    na = _diag_fp_only(trace, tid)
    if na:
        return na
    seg = _seg(trace, seg)
    K = _Consts(trace)
    c = Check(tid, trace.exact)
    T1 = seg.T1
    if T1 is None:
        if trace.rounds >= int(K.kappa + 2):
            c._record(False, -1.0, trace.rounds, "no sync round by kappa + 2", {})
        c.details["T1"] = None
        return c.report()
    c.details["T1"] = T1
    c.le(T1, K.kappa + 2, T1, "T1 <= kappa + 2")
    starts = seg.pair_starts
    acts = seg.pair_actions()
    trace.prefetch(starts)
    S1 = trace.snapshot(T1)
    for l in range(K.n):
        c.ge(S1.w[l], 0, T1, "w(T1) >= 0", l=l + 1)
        c.le(S1.w[l], 3 * K.kappa + 2, T1, "w(T1) <= 3 kappa + 2", l=l + 1)
    for Ts, i_s in zip(starts, acts):
        S = trace.snapshot(Ts)
        g = S.psi - S1.psi
        lo = g / K.amax
        hi = 2 * g / K.amin + 3 * K.kappa + 2
        for l in range(K.n):
            if l == i_s:
                continue
            c.le(lo, S.w[l], Ts, "lower", l=l + 1)
            c.le(S.w[l], hi, Ts, "upper", l=l + 1)
    c.details["pair_starts"] = len(starts)
    return c.report()


def verify_upper_bound(trace) -> BoundReport:
    """``psi(t) <= 8 A_max sqrt(t)`` at every round ``1..T+1``.

    ``worst_margin`` is the smallest ``8 A_max sqrt(t) - psi(t)``.
    """
    tid = "upper_bound"
    na = _diag_fp_only(trace, tid)
    if na:
        return na
    A = trace.matrix
    c = Check(tid, trace.exact)
    raw = trace.psi_raw_all
    ts = np.arange(1, raw.size + 1)
    if trace.exact:
        a_raw = A.a_max * trace.p_unit
        assert a_raw.denominator == 1
        a_raw = int(a_raw)
        obj = raw.astype(object)
        ok = np.asarray(obj * obj <= (64 * a_raw * a_raw) * ts.astype(object), dtype=bool)
        margin = (8 * a_raw * np.sqrt(ts) - raw.astype(float)) / trace.p_unit
    else:
        margin = 8 * float(A.a_max) * np.sqrt(ts) - raw + LE_SLACK
        ok = margin >= 0
    c.bulk(ok, margin, ts, "psi <= 8 A_max sqrt(t)")
    ratio = raw.astype(float) / trace.p_unit / np.sqrt(ts)
    c.details["max_psi_over_sqrt_t"] = float(ratio.max())
    c.details["constant"] = 8 * float(A.a_max)
    return c.report()


def verify_pair_growth(trace, seg: Segmentation | None = None) -> BoundReport:
    """Two-sided growth of the gap across the pairs:

    ``A_min/2 ((T_{s+1}-T_1)/(s(kappa+1)) - (7 kappa + 4)) <= psi(T_s) - psi(T_1) <= 3 A_max sqrt(T_{s+1} - T_1)``

    and the same upper bound on ``psi(T_{s+1}) - psi(T_1)``.
    """
    tid = "pair_growth"
    na = _diag_fp_only(trace, tid)
    if na:
        return na
    K = _Consts(trace)
    c = Check(tid, trace.exact)
    seg = _seg(trace, seg)
    if seg.pairs:
        T1 = seg.pairs[0].T_s
        psi1 = trace.psi_value(T1)
        for p in seg.pairs:
            s = p.s
            dT = p.next_start - T1
            e_prev = trace.psi_value(p.T_s) - psi1
            e_next = trace.psi_value(p.next_start) - psi1
            lo = K.amin / 2 * (K.one * dT / (s * (K.kappa + 1)) - (7 * K.kappa + 4))
            c.le(lo, e_prev, p.T_s, "lower", s=s)
            c.le_root(e_prev, 3 * K.amax, dT, p.T_s, "upper", s=s)
            c.le_root(e_next, 3 * K.amax, dT, p.next_start, "upper at pair end", s=s)
    c.details["pairs"] = len(seg.pairs)
    return c.report()


def verify_state_identities(trace, times=None, max_times: int = 64, seg=None) -> BoundReport:
    """Consistency of the rebuilt state at selected rounds.

    The gap from the kernel, from the iterates directly and from the support
    form must agree; for diagonal A the weight vector must equal
    ``(u + v) / A_ii``, be nonnegative after the first sync round and vanish
    on the sync action at every pair start.
    """
    tid = "state_identities"
    A = trace.matrix
    c = Check(tid, trace.exact)
    seg = _seg(trace, seg) if A.is_diagonal and trace.kind is DynamicKind.FP else seg
    zero_at = {}
    if seg is not None and trace.kind is DynamicKind.FP and A.is_diagonal:
        zero_at = dict(zip(seg.pair_starts, seg.pair_actions()))
    if times is None:
        cand = sorted({1, trace.rounds + 1, *zero_at})
        if len(cand) > max_times:
            idx = np.unique(np.linspace(0, len(cand) - 1, max_times).round().astype(int))
            cand = [cand[k] for k in idx]
        times = cand
    if trace.final is None:
        times = [t for t in times if t <= trace.rounds]
    trace.prefetch(times)
    T1 = seg.T1 if seg is not None else None
    for t in times:
        S = trace.snapshot(t)
        kern = trace.psi_value(t)
        x, y = list(S.x), list(S.y)
        c.eq(duality_gap(x, y, A), kern, t, "direct gap == kernel gap")
        c.eq(support_form_gap(x, y, A), kern, t, "support form gap == kernel gap")
        if S.w is not None:
            alt = weight_from_gaps(S.u, S.v, A)
            for l in range(A.n):
                c.eq(S.w[l], alt[l], t, "w == (u + v) / A_ii", l=l + 1)
                if T1 is not None and t >= T1 and trace.kind is DynamicKind.FP:
                    c.ge(S.w[l], 0, t, "w >= 0", l=l + 1)
            if t in zero_at:
                c.eq(S.w[zero_at[t]], 0, t, "w_{i_s} == 0", i=zero_at[t] + 1)
    if trace.final is not None:
        ok = trace.final.audit()
        c._record(ok, 0.0 if ok else -1.0, trace.rounds + 1, "cached p, q match x, y", {})
    c.details["times"] = len(times)
    return c.report()
