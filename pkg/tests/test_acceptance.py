"""End-to-end acceptance criteria; each test records one PASS/FAIL line."""
import itertools
import json
import math
import time
import timeit
from fractions import Fraction

import numpy as np
import pytest

import conftest
from fictplay.analysis import (segment_phases, sum_inequality_oracle, verify_alternation, verify_gap_monotone,
                               verify_identity_lower, verify_pair_conservation, verify_pair_length,
                               verify_split_phase, verify_sync_phase, verify_upper_bound, verify_wpsi)
from fictplay.dynamics import TieBreakRule, run
from fictplay.experiments import ExperimentConfig, probe_conjectures, random_diagonal_instance, run_batch, run_stream
from fictplay.game import PayoffMatrix, duality_gap, support_form_gap

F = Fraction
SEED = 2024
LEMMAS = [verify_gap_monotone, verify_alternation, verify_sync_phase, verify_split_phase,
          verify_pair_conservation, verify_pair_length, verify_wpsi]


def record(k, ok, text):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {text}"
    conftest.ACCEPTANCE[k] = line
    print(line)
    return ok


def test_c1_hand_trace_fixture():
    I2 = PayoffMatrix.identity(2)
    tr = run("fp", I2, rounds=10)
    seg = segment_phases(tr)
    got = (
        [(a + 1, b + 1) for a, b in tr.round_types()],
        [tr.psi_value(t) for t in range(1, 11)],
        seg.pair_starts[:2],
        list(tr.snapshot(3).w),
        list(tr.snapshot(10).w),
    )
    want = (
        [(2, 1), (2, 1), (2, 2), (2, 2), (2, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 1)],
        [1, 1, 2, 2, 2, 2, 2, 2, 2, 2],
        [3, 10],
        [4, 0],
        [0, 4],
    )
    secs = min(timeit.repeat(lambda: run("fp", I2, rounds=10), number=1, repeat=50))
    ok = tr.exact and got == want and secs < 1e-3
    assert record(1, ok, f"I_2 fixture exact, run {secs * 1e3:.3f} ms")
    assert got == want and tr.exact
    assert secs < 1e-3


@pytest.fixture(scope="module")
def diagonal_batch():
    """200 random exact diagonal instances, 1e5 rounds each; keeps reports, not traces."""
    out = []
    sim_secs = 0.0
    for k in range(200):
        A, rule, start = random_diagonal_instance(run_stream(SEED, k), 2, 10, 0.5, 2.0, "1/16")
        t0 = time.perf_counter()
        tr = run("fp", A, rule, start, 100_000)
        ub = verify_upper_bound(tr)
        sim_secs += time.perf_counter() - t0
        lemmas = [fn(tr) for fn in LEMMAS]
        out.append((A.n, tr.mode, tr.error, ub, lemmas))
    return out, sim_secs


@pytest.mark.slow
def test_c2_upper_bound(diagonal_batch):
    batch, secs = diagonal_batch
    ns = {n for n, *_ in batch}
    exact = all(mode == "exact" and err is None for _, mode, err, _, _ in batch)
    fails = sum(len(ub.failures) for *_, ub, _ in batch)
    checks = sum(ub.checks for *_, ub, _ in batch)
    # constant = 8 A_max, so this is max psi / (A_max sqrt t)
    worst = max(8 * ub.details["max_psi_over_sqrt_t"] / ub.details["constant"] for *_, ub, _ in batch)
    ok = exact and fails == 0 and all(ub.holds for *_, ub, _ in batch) and secs < 120
    assert record(2, ok, f"200 instances, n in {min(ns)}..{max(ns)}, {checks} checks, {fails} failures, "
                         f"max psi/(A_max sqrt t) = {worst:.3f} (bound 8), {secs:.1f} s")
    assert exact and fails == 0
    assert secs < 120


@pytest.mark.slow
def test_c3_identity_lower_bound():
    fails, checks, runs = 0, 0, 0
    rng = run_stream(SEED, 10_000)
    for n in (2, 3, 5, 10):
        perms = list(itertools.permutations(range(n))) if n <= 5 else None
        if perms is not None and len(perms) ** 2 <= 50:
            pairs = list(itertools.product(perms, perms))
        elif perms is not None:
            idx = rng.choice(len(perms) ** 2, size=50, replace=False)
            pairs = [(perms[k // len(perms)], perms[k % len(perms)]) for k in idx]
        else:
            pairs = [(tuple(rng.permutation(n)), tuple(rng.permutation(n))) for _ in range(50)]
        for sx, sy in pairs:
            start = (int(rng.integers(n)), int(rng.integers(n)))
            tr = run("fp", PayoffMatrix.identity(n), TieBreakRule(sx, sy), start, 100_000)
            rep = verify_identity_lower(tr, n)
            runs += 1
            checks += rep.checks
            fails += len(rep.failures) + (0 if rep.holds else 1)
    ok = fails == 0
    assert record(3, ok, f"{runs} identity runs (n = 2, 3, 5, 10), {checks} checks, {fails} failures")
    assert ok


@pytest.mark.slow
def test_c4_lemma_suite(diagonal_batch):
    batch, _ = diagonal_batch
    bad = [(k, r.theorem_id) for k, (*_, lemmas) in enumerate(batch) for r in lemmas
           if not (r.holds and r.applicable)]
    checks = sum(r.checks for *_, lemmas in batch for r in lemmas)
    ok = not bad
    assert record(4, ok, f"{len(LEMMAS)} checkers x 200 instances, {checks} checks, {len(bad)} failing reports")
    assert not bad, bad[:5]


def test_c5_support_form_equivalence():
    rng = run_stream(SEED, 20_000)
    worst = 0.0
    for k in range(10_000):
        n = int(rng.integers(1, 21))
        if k % 4 == 0:
            A = PayoffMatrix.diagonal(rng.uniform(0.1, 5.0, size=n).tolist())
        else:
            A = PayoffMatrix(rng.normal(size=(n, n)).tolist())
        x = rng.exponential(size=n)
        y = rng.exponential(size=n)
        x, y = x / x.sum(), y / y.sum()
        a, b = support_form_gap(x, y, A), duality_gap(x, y, A)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    ok = worst <= 1e-9
    assert record(5, ok, f"10^4 triples n <= 20, max relative diff {worst:.2e} (tol 1e-9)")
    assert ok


def test_c6_sum_inequality():
    rng = run_stream(SEED, 30_000)
    bad = 0
    for k in range(10_000):
        m = [0.1, 1.0, 10.0][k % 3]
        s = int(rng.integers(1, 51))
        eps = rng.uniform(0, m, size=s)
        if k % 5 == 0:  # boundary-heavy vectors
            eps = np.where(rng.random(s) < 0.5, 0.0, m)
        if k % 7 == 0:  # exact arithmetic on a grid
            eps = [F(int(c), 8) * F(m) for c in rng.integers(0, 9, size=s)]
            m = F(m)
        *_, ok = sum_inequality_oracle(list(eps), m)
        bad += not ok
    assert record(6, bad == 0, f"10^4 increment vectors (s <= 50, eps_max in 0.1/1/10), {bad} violations")
    assert bad == 0


@pytest.fixture(scope="module")
def gaussian_batch():
    cfg = ExperimentConfig(n=10, runs=100, rounds=10_000, family="gaussian", seed=SEED)
    t0 = time.perf_counter()
    res = run_batch(cfg, workers=1)
    return cfg, res, time.perf_counter() - t0


def test_c7_gaussian_max_gap_curve(gaussian_batch, tmp_path):
    cfg, res, secs = gaussian_batch
    res.write_csv(tmp_path / "max_gap.csv")
    rows = (tmp_path / "max_gap.csv").read_text().splitlines()
    c = res.ratio_constant(100, 10_000)
    ok = math.isfinite(c) and not res.failed and len(rows) == res.t.size + 1 and secs < 60
    assert record(7, ok, f"100 runs 10x10 Gaussian, 10^4 rounds, max psi/sqrt(t) on [1e2,1e4] = {c:.3f}, "
                         f"{secs:.1f} s")
    assert math.isfinite(c) and not res.failed
    assert secs < 60


def test_c8_conjecture_probes(tmp_path):
    out = probe_conjectures(instances=20, rounds=10_000, seed=SEED)
    path = tmp_path / "probes.json"
    path.write_text(json.dumps(out, indent=1))
    a, o = out["afp_summary"], out["ofp_summary"]
    k = out["instances"]
    record(8, True, f"reported only: AFP max psi/sqrt(t) {a['max_psi_over_sqrt_t']:.3f}, "
                    f"{a['second_half_not_above_first']}/{k} not growing; OFP max psi {o['max_psi']:.3f}, "
                    f"{o['second_half_not_above_first']}/{k} not growing")


def test_c9_parallel_determinism(gaussian_batch):
    cfg, res, _ = gaussian_batch
    par = run_batch(cfg, workers=4)
    ok = par.csv().encode() == res.csv().encode()
    assert record(9, ok, "criterion-7 CSV byte-identical for workers=1 and workers=4")
    assert ok
