"""Run every applicable checker over one trace or many."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .identity import verify_identity_lower
from .lemmas import (verify_alternation, verify_gap_monotone, verify_pair_conservation,
                     verify_pair_growth, verify_pair_length, verify_split_phase, verify_state_identities,
                     verify_sync_phase, verify_upper_bound, verify_wpsi)
from .report import not_applicable
from .segment import segment_phases

LEMMA_CHECKS = {
    "gap_monotone": lambda tr, seg: verify_gap_monotone(tr),
    "phase_alternation": verify_alternation,
    "sync_phase": verify_sync_phase,
    "split_phase": verify_split_phase,
    "pair_conservation": verify_pair_conservation,
    "pair_length": verify_pair_length,
    "weight_gap_relation": verify_wpsi,
}


def _identity_ok(trace) -> bool:
    return (trace.matrix.is_identity and trace.exact and trace.kind.value == "fp"
            and trace.start is not None and all(np.count_nonzero(v) == 1 for v in trace.start))


def verify_all(trace, include=None, state_times: int = 64) -> list:
    """All reports for one trace, in a fixed order.

    ``include`` restricts to a subset of theorem ids.
    """
    seg = segment_phases(trace)
    checks = dict(LEMMA_CHECKS)
    checks["upper_bound"] = lambda tr, sg: verify_upper_bound(tr)
    checks["pair_growth"] = verify_pair_growth
    checks["state_identities"] = lambda tr, sg: verify_state_identities(tr, max_times=state_times, seg=sg)
    if _identity_ok(trace):
        checks["identity_lower_bound"] = lambda tr, sg: verify_identity_lower(tr, seg=sg)
    else:
        checks["identity_lower_bound"] = lambda tr, sg: not_applicable(
            "identity_lower_bound", "needs exact FP on I_n from a vertex start")
    out = []
    for name, fn in checks.items():
        if include is not None and name not in include:
            continue
        out.append(fn(trace, seg))
    return out


def _verify_job(args):
    trace, include, state_times = args
    return verify_all(trace, include, state_times)


def verify_many(traces, include=None, workers: int = 1, state_times: int = 64) -> list:
    """``verify_all`` over many traces, fanned out over processes; order is preserved."""
    jobs = [(tr, include, state_times) for tr in traces]
    if workers <= 1 or len(jobs) <= 1:
        return [_verify_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_verify_job, jobs))
