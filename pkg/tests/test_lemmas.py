from fractions import Fraction

import numpy as np
import pytest

from fictplay.analysis import (segment_phases, verify_all, verify_alternation, verify_gap_monotone,
                               verify_pair_conservation, verify_pair_growth, verify_pair_length,
                               verify_split_phase, verify_state_identities, verify_sync_phase,
                               verify_upper_bound, verify_wpsi)
from fictplay.dynamics import InsufficientDataError, TieBreakRule, Trace, run, trace_from_actions
from fictplay.experiments import random_diagonal_instance, run_stream
from fictplay.game import PayoffMatrix

F = Fraction
I2 = PayoffMatrix.identity(2)
DIAG_CHECKS = [verify_alternation, verify_sync_phase, verify_split_phase, verify_pair_conservation,
               verify_pair_length, verify_wpsi, verify_pair_growth]


def test_identity2_reports():
    tr = run("fp", I2, rounds=10)
    reps = verify_all(tr)
    assert all(r.holds and r.applicable for r in reps)
    ub = verify_upper_bound(tr)
    # psi(10) = 2 <= 8 sqrt(10); the tightest round is t=1 with margin 8 - 1
    assert ub.worst_margin == pytest.approx(7.0) and ub.worst_t == 1
    assert ub.checks == 11
    js = ub.to_json()
    assert set(js) >= {"theorem", "holds", "worst_margin", "worst_t", "checks", "failures"}


def test_identity2_phase_values():
    tr = run("fp", I2, rounds=10)
    # sync(2) on rounds 3-5: eps = 3*1 - u_1(3) = 0; split(1,2) on 6-9: eps = 4 - v_1(6) = 0
    assert list(tr.snapshot(3).u) == [3, 0]
    assert tr.snapshot(6).v[0] == 4
    assert verify_sync_phase(tr).checks == 5
    assert verify_pair_length(tr).worst_margin == 3  # 4 <= 7 <= 11


def test_gap_increment_bounds_on_fixture():
    tr = run("fp", I2, rounds=10)
    d = np.diff(tr.psi_raw_all)
    assert d[0] == 0 and d[1] == 1


def test_n1_trace_is_vacuous():
    tr = run("fp", PayoffMatrix.diagonal([2]), rounds=5)
    for r in verify_all(tr):
        assert r.holds
    assert verify_gap_monotone(tr).worst_margin == 0


def _instances(count, rounds, seed=0):
    for k in range(count):
        A, rule, start = random_diagonal_instance(run_stream(seed, k), 2, 6)
        yield run("fp", A, rule, start, rounds)


def test_random_diagonal_all_hold():
    for tr in _instances(15, 20_000):
        for r in verify_all(tr):
            assert r.holds, (r.theorem_id, r.failures[:3])


def test_diag123_pairs_from_random_start():
    A = PayoffMatrix.diagonal([1, 2, 3])
    rng = np.random.default_rng(8)
    for _ in range(5):
        tr = run("fp", A, TieBreakRule.random(3, rng), (int(rng.integers(3)), int(rng.integers(3))), 10_000)
        assert verify_pair_conservation(tr).holds
        assert verify_wpsi(tr).holds


def test_float_mode_checkers_hold():
    A = PayoffMatrix.diagonal([1.0, 1.7320508075688772, 0.7071067811865476])
    tr = run("fp", A, rounds=5000)
    assert tr.mode == "float"
    for r in verify_all(tr):
        assert r.holds, (r.theorem_id, r.failures[:3])


def test_general_matrix_not_applicable():
    A = PayoffMatrix([[0, 1, -1], [-1, 0, 1], [1, -1, 0]])
    tr = run("fp", A, rounds=2000)
    assert verify_gap_monotone(tr).holds and verify_gap_monotone(tr).applicable
    for fn in DIAG_CHECKS:
        assert not fn(tr).applicable
    assert not verify_upper_bound(tr).applicable


def test_other_dynamics_not_applicable():
    for kind in ("afp", "ofp"):
        tr = run(kind, I2, rounds=100)
        assert not verify_gap_monotone(tr).applicable
        assert not verify_upper_bound(tr).applicable


# --- the checkers must catch violations -------------------------------------------------


def test_linear_growth_breaks_upper_bound():
    # both players stuck on action 1: psi(t) = t, which exceeds 8 sqrt(t) for large t
    T = 200
    tr = trace_from_actions("fp", I2, TieBreakRule.identity(2), (0, 0), np.zeros(T, int), np.zeros(T, int))
    rep = verify_upper_bound(tr)
    assert not rep.holds and rep.failures[0]["t"] == 65
    assert rep.details["failed"] == T + 1 - 64


def test_decreasing_gap_caught():
    tr = run("fp", I2, rounds=10)
    tr.psi_raw = tr.psi_raw.copy()
    tr.psi_raw[5] -= 1
    rep = verify_gap_monotone(tr)
    assert not rep.holds
    assert {f["t"] for f in rep.failures} >= {5}


def test_same_type_increment_caught():
    tr = run("fp", I2, rounds=10)
    tr.psi_raw = tr.psi_raw.copy()
    tr.psi_raw[3:] += 1  # rounds 3 and 4 share a type, now with increment 1
    rep = verify_gap_monotone(tr)
    assert not rep.holds and any("same type" in f["check"] for f in rep.failures)


def test_broken_alternation_caught():
    A = PayoffMatrix.diagonal([1, 2, 3])
    i = np.array([0, 0, 1, 1, 2])
    j = np.array([0, 0, 1, 1, 2])  # sync(1) -> sync(2) -> sync(3)
    tr = trace_from_actions("fp", A, TieBreakRule.identity(3), (0, 0), i, j)
    rep = verify_alternation(tr)
    assert not rep.holds and rep.details["failed"] == 2


def test_tampered_actions_break_phase_lemmas():
    # take an honest run and keep one phase too long: the phase increments leave their ranges
    A = PayoffMatrix.diagonal([1, F(3, 2), 2])
    tr = run("fp", A, rounds=400)
    seg = segment_phases(tr)
    ph = next(p for p in seg.phases[2:] if p.is_sync)
    i, j = tr.i.copy(), tr.j.copy()
    stretch = slice(ph.end_t, ph.end_t + 6)  # overwrite the next rounds with the sync action
    i[stretch] = ph.i
    j[stretch] = ph.j
    bad = trace_from_actions("fp", A, tr.rule, (0, 0), i, j)
    assert not verify_sync_phase(bad).holds or not verify_gap_monotone(bad).holds


def test_wrong_rule_breaks_identity_transitions():
    from fictplay.analysis import verify_identity_lower

    tr = run("fp", PayoffMatrix.identity(3), TieBreakRule((2, 1, 0), (0, 2, 1)), rounds=3000)
    assert verify_identity_lower(tr).holds
    tr.rule = TieBreakRule.identity(3)
    assert not verify_identity_lower(tr).holds


def test_state_identities_detect_stale_cache():
    tr = run("fp", I2, rounds=50)
    assert verify_state_identities(tr).holds
    tr.final.p = tr.final.p + 1
    assert not verify_state_identities(tr).holds


def test_checkers_need_a_start():
    tr = run("fp", I2, rounds=10)
    bare = Trace(tr.kind, tr.matrix, tr.rule, tr.mode, tr.scale, tr.i, tr.j, tr.psi_raw,
                 tr.tie_x, tr.tie_y)
    assert verify_gap_monotone(bare).holds  # round-level only
    with pytest.raises(InsufficientDataError):
        verify_sync_phase(bare)


def test_report_json_roundtrip():
    import json

    for r in verify_all(run("fp", PayoffMatrix.identity(3), rounds=1000)):
        obj = json.loads(r.dumps())
        assert obj["theorem"] == r.theorem_id and obj["holds"] is True
