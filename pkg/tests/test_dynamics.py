from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fictplay import _backend
from fictplay.dynamics import (DynamicKind, EngineState, SnapshotPolicy, TieBreakRule,
                               best_response_max, best_response_min, run, step_afp, step_fp,
                               step_ofp, trace_from_actions, _advance)
from fictplay.game import DimensionError, PayoffMatrix

import oracle

F = Fraction
I2 = PayoffMatrix.identity(2)
KERNELS = _backend.available()

# I_2 from (e1, e1), identity ranks; values from the brute-force oracle
FP_TYPES = [(2, 1), (2, 1), (2, 2), (2, 2), (2, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 1)]
FP_PSI = [1, 1, 2, 2, 2, 2, 2, 2, 2, 2]
AFP_TYPES = [(2, 1), (2, 2), (2, 2), (1, 2), (1, 1), (1, 1), (2, 1), (2, 2), (2, 2), (1, 2)]
AFP_PSI = [1, 1, 1, 1, 1, 0, 1, 1, 1, 1]
OFP_TYPES = [(2, 1), (2, 1), (2, 2), (1, 2), (1, 1), (2, 1), (2, 2), (1, 2), (1, 1), (2, 1)]
OFP_PSI = [1, 1, 2, 1, 1, 2, 2, 1, 1, 2]


def one_based(trace):
    return [(i + 1, j + 1) for i, j in trace.round_types()]


def test_best_response_examples():
    ident = [0, 1, 2]
    assert best_response_min([1, 0], ident) == 1
    assert best_response_min([3, 3], ident) == 0
    assert best_response_min([5, 2, 2], [2, 1, 0]) == 2
    assert best_response_max([1, 1], ident) == 0
    assert best_response_max([1, 2], ident) == 1
    assert best_response_max([4, 4, 1], [1, 0, 2]) == 1
    with pytest.raises(ValueError):
        best_response_min([], [])
    # float tolerance widens the tie set
    assert best_response_min([1.0, 1.0 + 1e-12], [1, 0], tol=1e-9) == 1


def test_tiebreak_rule_validation():
    with pytest.raises(ValueError):
        TieBreakRule((0, 0), (0, 1))
    with pytest.raises(DimensionError):
        TieBreakRule((0, 1), (0, 1, 2))
    r = TieBreakRule.from_one_based([2, 1], [1, 2])
    assert r.sigma_x == (1, 0) and r.to_json() == {"sigma_x": [2, 1], "sigma_y": [1, 2]}


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("kind,types,psi", [("fp", FP_TYPES, FP_PSI), ("afp", AFP_TYPES, AFP_PSI),
                                            ("ofp", OFP_TYPES, OFP_PSI)])
def test_identity2_fixture(kernel, kind, types, psi):
    tr = run(kind, I2, rounds=10, kernel=kernel)
    assert tr.mode == "exact"
    assert one_based(tr) == types
    assert [tr.psi_value(t) for t in range(1, 11)] == psi


def test_stepper_matches_run():
    rule = TieBreakRule.identity(2)
    for kind, step in ((DynamicKind.FP, step_fp), (DynamicKind.AFP, step_afp), (DynamicKind.OFP, step_ofp)):
        st_ = EngineState.start(kind, I2)
        recs = [step(st_, I2, rule) for _ in range(10)]
        tr = run(kind, I2, rounds=10)
        assert [r.type for r in recs] == tr.round_types()
        assert [r.psi for r in recs] == [tr.psi_value(t) for t in range(1, 11)]
        assert st_.audit()


def test_step_rejects_wrong_kind():
    st_ = EngineState.start("fp", I2)
    with pytest.raises(ValueError):
        step_afp(st_, I2, TieBreakRule.identity(2))


def test_single_action_is_fixed():
    A = PayoffMatrix.diagonal([2])
    for kind in ("fp", "afp", "ofp"):
        tr = run(kind, A, rounds=5)
        assert tr.round_types() == [(0, 0)] * 5
        assert set(tr.psi.tolist()) == {0.0}


def _random_case(rng, exact=True):
    n = int(rng.integers(1, 6))
    if exact:
        if rng.random() < 0.5:
            M = np.diag(rng.integers(1, 5, size=n)).tolist()
        else:
            M = rng.integers(-3, 4, size=(n, n)).tolist()
    else:
        M = rng.normal(size=(n, n)).tolist()
    rule = TieBreakRule.random(n, rng)
    start = (int(rng.integers(n)), int(rng.integers(n)))
    return M, rule, start


@pytest.mark.parametrize("kind", ["fp", "afp", "ofp"])
def test_matches_bruteforce_oracle(kind):
    rng = np.random.default_rng(7)
    for _ in range(60):
        M, rule, (a, b) = _random_case(rng)
        n = len(M)
        ref = oracle.simulate(M, 40, list(rule.sigma_x), list(rule.sigma_y),
                              oracle.vertex(n, a), oracle.vertex(n, b), kind=kind)
        tr = run(kind, PayoffMatrix(M), rule, (a, b), 40, snapshots="full")
        assert tr.round_types() == [(r["i"], r["j"]) for r in ref[:-1]]
        assert [tr.psi_value(t) for t in range(1, 42)] == [r["psi"] for r in ref]
        for t in (1, 17, 40):
            s = tr.snapshot(t)
            assert list(s.x) == ref[t - 1]["x"] and list(s.p) == ref[t - 1]["p"]
            assert list(s.q) == ref[t - 1]["q"]
        assert tr.final.audit()


def test_fractional_start_is_exact():
    A = PayoffMatrix.diagonal([1, F(1, 3), F(5, 2)])
    x1, y1 = [F(1, 2), F(1, 4), F(1, 4)], [F(0), F(2, 3), F(1, 3)]
    tr = run("fp", A, TieBreakRule((2, 0, 1), (1, 2, 0)), (x1, y1), 60)
    assert tr.mode == "exact" and tr.scale == 12
    ref = oracle.simulate(A.exact, 60, [2, 0, 1], [1, 2, 0], x1, y1)
    assert [tr.psi_value(t) for t in range(1, 62)] == [r["psi"] for r in ref]


def test_float_mode_matches_oracle_on_gaussian():
    rng = np.random.default_rng(2)
    for _ in range(20):
        M, rule, (a, b) = _random_case(rng, exact=False)
        n = len(M)
        tr = run("fp", PayoffMatrix(M), rule, (a, b), 200)
        assert tr.mode == "float"
        # ties have probability zero, so the exact oracle on the same floats agrees
        ref = oracle.simulate([[F(v) for v in r] for r in M], 200, list(rule.sigma_x), list(rule.sigma_y),
                              oracle.vertex(n, a), oracle.vertex(n, b))
        assert tr.round_types() == [(r["i"], r["j"]) for r in ref[:-1]]
        np.testing.assert_allclose(tr.psi, [float(r["psi"]) for r in ref[:-1]], rtol=1e-9, atol=1e-9)


@pytest.mark.skipif(len(KERNELS) < 2, reason="compiled kernel not built")
@pytest.mark.parametrize("kind", ["fp", "afp", "ofp"])
def test_kernels_agree(kind):
    rng = np.random.default_rng(5)
    for exact in (True, False):
        for _ in range(10):
            M, rule, start = _random_case(rng, exact)
            A = PayoffMatrix(M)
            a = run(kind, A, rule, start, 3000, kernel="cython")
            b = run(kind, A, rule, start, 3000, kernel="python")
            assert np.array_equal(a.i, b.i) and np.array_equal(a.j, b.j)
            assert np.array_equal(a.psi_raw, b.psi_raw)
            assert np.array_equal(a.tie_x, b.tie_x) and np.array_equal(a.tie_y, b.tie_y)
            assert np.array_equal(a.final.p, b.final.p)


def test_mass_conservation_and_exact_argmin():
    rng = np.random.default_rng(9)
    A = PayoffMatrix.diagonal([1, F(3, 2), 2, F(1, 2)])
    tr = run("fp", A, TieBreakRule.random(4, rng), (1, 3), 500)
    raw = tr.raw_states(range(1, 502))
    k = tr.scale
    assert (raw["x"].sum(axis=1) == k * np.arange(1, 502)).all()
    assert (raw["y"].sum(axis=1) == k * np.arange(1, 502)).all()
    p = raw["p"][:-1]
    chosen = p[np.arange(500), tr.i]
    assert (chosen == p.min(axis=1)).all()
    sx = np.asarray(tr.rule.sigma_x)
    for t in range(500):
        ties = np.nonzero(p[t] == p[t].min())[0]
        assert sx[tr.i[t]] == sx[ties].min()
        assert tr.tie_x[t] == (ties.size > 1)


def test_ofp_state_telescopes():
    # with a plain first round, x(t) = x(1) + sum_{r=2}^{t-1} e_{i_r} + e_{i_{t-1}}:
    # never negative, total mass t
    rng = np.random.default_rng(0)
    for _ in range(30):
        M = rng.normal(size=(3, 3)).tolist()
        tr = run("ofp", PayoffMatrix(M), rounds=50, snapshots="full")
        for t, s in tr.snapshots.items():
            assert (s.x >= 0).all() and (s.y >= 0).all()
            assert abs(s.x.sum() - t) < 1e-9 and abs(s.y.sum() - t) < 1e-9


def test_snapshot_policy():
    assert SnapshotPolicy.parse("none").stride == 0
    assert SnapshotPolicy.parse("full").stride == 1
    assert list(SnapshotPolicy.parse("strided:4").times(10)) == [1, 5, 9]
    for bad in ("strided:0", "sometimes"):
        with pytest.raises(ValueError):
            SnapshotPolicy.parse(bad)
    tr = run("fp", I2, rounds=10, snapshots="strided:3")
    assert sorted(tr.snapshots) == [1, 4, 7, 10]
    s = tr.snapshot(3)
    assert list(s.p) == [3, 0] and list(s.q) == [1, 2]
    assert list(s.u) == [3, 0] and list(s.v) == [1, 0]


def test_exact_overflow_is_reported():
    A = PayoffMatrix.diagonal([2**30, 1])
    st_ = EngineState.start("fp", A)
    room = st_.headroom()
    assert 0 < room < 10**12
    with pytest.raises(OverflowError):
        _advance(st_, TieBreakRule.identity(2), room + 1)
    assert st_.t == 1 and st_.audit()


def test_partial_run_carries_error():
    # K = 2^20 and a scaled entry of 2^31 leave room for only a few hundred rounds
    A = PayoffMatrix.diagonal([2**11, F(1, 2**20)])
    tr = run("fp", A, rounds=10_000, mode="exact")
    assert tr.exact and tr.scale == 2**20
    assert tr.error and "overflow" in tr.error
    assert 0 < tr.rounds < 10_000
    assert tr.final.audit()


def test_float_mode_forced_and_auto_fallback():
    tr = run("fp", I2, rounds=10, mode="float")
    assert tr.mode == "float" and tr.psi.tolist() == [float(v) for v in FP_PSI]
    A = PayoffMatrix([[0.1234567891, 0], [0, 1]])
    assert run("fp", A, rounds=5).mode == "float"
    with pytest.raises(ValueError):
        run("fp", A, rounds=5, mode="exact")


def test_deterministic_rerun():
    rng = np.random.default_rng(4)
    M, rule, start = _random_case(rng, exact=False)
    a = run("fp", PayoffMatrix(M), rule, start, 5000)
    b = run("fp", PayoffMatrix(M), rule, start, 5000)
    assert a.psi_raw.tobytes() == b.psi_raw.tobytes() and a.i.tobytes() == b.i.tobytes()


@pytest.mark.parametrize("kind", ["fp", "afp", "ofp"])
def test_trace_from_actions_roundtrip(kind):
    rng = np.random.default_rng(12)
    for _ in range(10):
        M, rule, start = _random_case(rng)
        A = PayoffMatrix(M)
        tr = run(kind, A, rule, start, 300)
        back = trace_from_actions(kind, A, rule, start, tr.i, tr.j, tr.tie_x, tr.tie_y)
        assert np.array_equal(back.psi_raw, tr.psi_raw)
        assert np.array_equal(back.final.q, tr.final.q)
        assert back.final.prev_i == tr.final.prev_i


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.sampled_from(["fp", "afp", "ofp"]))
def test_cache_audit_property(n, seed, kind):
    rng = np.random.default_rng(seed)
    M = rng.integers(-4, 5, size=(n, n)).tolist()
    rule = TieBreakRule.random(n, rng)
    st_ = EngineState.start(kind, PayoffMatrix(M), (int(rng.integers(n)), int(rng.integers(n))))
    stepper = {"fp": step_fp, "afp": step_afp, "ofp": step_ofp}[kind]
    for _ in range(int(rng.integers(1, 60))):
        stepper(st_, st_.matrix, rule)
    assert st_.audit()


def test_fp_gap_nondecreasing_identity3():
    tr = run("fp", PayoffMatrix.identity(3), rounds=100_000)
    assert (np.diff(tr.psi_raw_all) >= 0).all()


def test_speed_one_step_is_cheap():
    import time

    A = PayoffMatrix.diagonal([F(k, 16) for k in range(8, 18)])
    t0 = time.perf_counter()
    run("fp", A, rounds=100_000)
    assert time.perf_counter() - t0 < 1.0 or _backend.BACKEND == "python"
