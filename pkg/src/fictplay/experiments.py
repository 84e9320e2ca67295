"""Batch experiments: random instances, max-gap curves and conjecture probes.

Every run draws from its own counter-based stream seeded by
``(seed, run_index)``, and curves are reduced in run order, so outputs do not
depend on how many workers ran the batch.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import DynamicKind, TieBreakRule, run
from .game import PayoffMatrix

FAMILIES = ("gaussian", "diagonal_uniform", "identity")
DENSE_UNTIL = 1000
SPARSE_STRIDE = 10


def run_stream(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream for run ``index`` of a batch seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def generate_matrix(family: str, n: int, rng: np.random.Generator, mean=0.0, std=1.0,
                    lo=0.5, hi=2.0, quantum=None) -> PayoffMatrix:
    """Draw one payoff matrix.

    ``gaussian`` has i.i.d. normal entries; ``diagonal_uniform`` has a
    uniform diagonal on ``[lo, hi]`` (uniform on the grid of multiples of
    ``quantum`` inside ``[lo, hi]`` when a quantum is given, keeping the
    matrix exact); ``identity`` is ``I_n``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if family == "identity":
        return PayoffMatrix.identity(n)
    if family == "gaussian":
        if std < 0:
            raise ValueError("std must be >= 0")
        return PayoffMatrix(rng.normal(mean, std, size=(n, n)).tolist())
    if family == "diagonal_uniform":
        if not 0 < lo <= hi:
            raise ValueError("need 0 < lo <= hi")
        if quantum is None:
            return PayoffMatrix.diagonal(rng.uniform(lo, hi, size=n).tolist())
        q = Fraction(quantum) if isinstance(quantum, str) else Fraction(quantum).limit_denominator(10**6)
        if q <= 0:
            raise ValueError("quantum must be positive")
        k_lo = math.ceil(Fraction(lo) / q)
        k_hi = math.floor(Fraction(hi) / q)
        if k_lo > k_hi:
            raise ValueError("no multiple of the quantum lies in [lo, hi]")
        ks = rng.integers(k_lo, k_hi + 1, size=n)
        return PayoffMatrix.diagonal([int(k) * q for k in ks])
    raise ValueError(f"unknown matrix family {family!r}; have {FAMILIES}")


def random_rule(spec, n: int, rng: np.random.Generator) -> TieBreakRule:
    if spec in (None, "identity"):
        return TieBreakRule.identity(n)
    if spec == "random":
        return TieBreakRule.random(n, rng)
    if isinstance(spec, dict):
        return TieBreakRule.from_one_based(spec["sigma_x"], spec["sigma_y"])
    raise ValueError(f"bad tiebreak spec {spec!r}")


def random_start(spec, n: int, rng: np.random.Generator):
    """``"e1e1"``, ``"random"`` (uniform vertex pair) or a 1-based pair ``[i, j]``."""
    if spec in (None, "e1e1"):
        return (0, 0)
    if spec == "random":
        return (int(rng.integers(n)), int(rng.integers(n)))
    if isinstance(spec, (list, tuple)) and len(spec) == 2:
        a, b = int(spec[0]) - 1, int(spec[1]) - 1
        if not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"start {spec} out of range for n={n}")
        return (a, b)
    raise ValueError(f"bad start spec {spec!r}")


def random_diagonal_instance(rng: np.random.Generator, n_min=2, n_max=10, lo=0.5, hi=2.0,
                             quantum="1/16"):
    """Random exact diagonal instance with random tie-breaking and a random vertex start."""
    n = int(rng.integers(n_min, n_max + 1))
    A = generate_matrix("diagonal_uniform", n, rng, lo=lo, hi=hi, quantum=quantum)
    return A, TieBreakRule.random(n, rng), random_start("random", n, rng)


def record_times(rounds: int, dense_until: int = DENSE_UNTIL, stride: int = SPARSE_STRIDE) -> np.ndarray:
    """Every round up to ``dense_until``, then every ``stride``-th round."""
    head = np.arange(1, min(rounds, dense_until) + 1)
    tail = np.arange(dense_until + stride, rounds + 1, stride)
    return np.concatenate([head, tail]).astype(np.int64)


@dataclass
class ExperimentConfig:
    n: int = 10
    runs: int = 100
    rounds: int = 10_000
    family: str = "gaussian"
    mean: float = 0.0
    std: float = 1.0
    lo: float = 0.5
    hi: float = 2.0
    quantum: object = None
    seed: int = 0
    dynamic: str = "fp"
    tiebreak: object = "identity"
    start: object = "e1e1"
    mode: str = "auto"
    output_path: str | None = None
    ratio_from: int = 100

    def __post_init__(self):
        if self.runs < 1 or self.rounds < 1 or self.n < 1:
            raise ValueError("n, runs and rounds must be >= 1")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown matrix family {self.family!r}")
        DynamicKind(self.dynamic)
        if self.mode not in ("auto", "exact", "float"):
            raise ValueError(f"bad mode {self.mode!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        fam = obj.pop("matrix_family", None)
        if isinstance(fam, dict):
            obj["family"] = fam.pop("kind")
            obj.update(fam)
        elif fam is not None:
            obj["family"] = fam
        known = set(cls.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        return asdict(self)

    def instance(self, index: int):
        """Matrix, tie-break rule and start of run ``index``."""
        rng = run_stream(self.seed, index)
        A = generate_matrix(self.family, self.n, rng, mean=self.mean, std=self.std,
                            lo=self.lo, hi=self.hi, quantum=self.quantum)
        rule = random_rule(self.tiebreak, self.n, rng)
        start = random_start(self.start, self.n, rng)
        return A, rule, start


@dataclass
class RunSummary:
    index: int
    rounds: int
    final_gap: float
    max_gap_over_sqrt_t: float | None
    error: str | None = None


@dataclass
class BatchResult:
    config: ExperimentConfig
    summaries: list
    t: np.ndarray
    max_gap: np.ndarray
    failed: list = field(default_factory=list)

    @property
    def max_gap_sq_over_t(self) -> np.ndarray:
        return self.max_gap**2 / self.t

    def ratio_constant(self, t_min: int | None = None, t_max: int | None = None) -> float:
        """``max_t max_gap(t) / sqrt(t)`` over ``t_min <= t <= t_max``."""
        t_min = self.config.ratio_from if t_min is None else t_min
        t_max = self.t[-1] if t_max is None else t_max
        sel = (self.t >= t_min) & (self.t <= t_max)
        if not sel.any():
            return math.nan
        return float((self.max_gap[sel] / np.sqrt(self.t[sel])).max())

    def csv(self) -> str:
        lines = ["t,max_gap,max_gap_sq_over_t"]
        for t, g, r in zip(self.t.tolist(), self.max_gap.tolist(), self.max_gap_sq_over_t.tolist()):
            lines.append(f"{t},{g!r},{r!r}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv())


def _one_run(args):
    cfg, index = args
    times = record_times(cfg.rounds)
    try:
        A, rule, start = cfg.instance(index)
        tr = run(cfg.dynamic, A, rule, start, cfg.rounds, mode=cfg.mode)
        psi = tr.psi[times[times <= tr.rounds] - 1]
        sel = times[: psi.size] >= cfg.ratio_from
        ratio = float((psi[sel] / np.sqrt(times[: psi.size][sel])).max()) if sel.any() else None
        err = tr.error
        summary = RunSummary(index, tr.rounds, float(tr.psi_value(tr.rounds + 1)), ratio, err)
        return summary, psi
    except Exception as e:  # a failing run is recorded, the batch goes on
        return RunSummary(index, 0, math.nan, None, f"{type(e).__name__}: {e}"), None


def run_batch(config: ExperimentConfig, workers: int = 1) -> BatchResult:
    """Run all ``config.runs`` runs and reduce the pointwise max gap in run order."""
    jobs = [(config, k) for k in range(config.runs)]
    if workers > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_run, jobs, chunksize=max(1, config.runs // (4 * workers))))
    else:
        results = [_one_run(j) for j in jobs]
    times = record_times(config.rounds)
    best = np.full(times.size, -np.inf)
    summaries, failed = [], []
    for summary, psi in results:
        summaries.append(summary)
        if psi is None or psi.size < times.size:
            failed.append(summary.index)
            if psi is None:
                continue
        best[: psi.size] = np.maximum(best[: psi.size], psi)
    keep = np.isfinite(best)
    result = BatchResult(config, summaries, times[keep], best[keep], failed)
    if config.output_path:
        result.write_csv(config.output_path)
    return result


def _probe_stats(t: np.ndarray, values: np.ndarray) -> dict:
    half = t.size // 2
    return {
        "max": float(values.max()),
        "max_first_half": float(values[:half].max()) if half else float(values.max()),
        "max_second_half": float(values[half:].max()),
    }


def probe_conjectures(instances: int = 20, rounds: int = 10_000, seed: int = 0,
                      n_min: int = 2, n_max: int = 10, t_from: int = 100) -> dict:
    """Empirical behaviour of AFP and OFP on random diagonal instances.

    For AFP reports ``psi(x^, y^) sqrt(t) = psi / sqrt(t)`` (bounded if AFP
    converges at rate 1/sqrt(t)); for OFP reports the unscaled gap ``psi``
    (bounded if OFP converges at rate 1/t).  Nothing is asserted.
    """
    out = {"instances": instances, "rounds": rounds, "seed": seed, "t_from": t_from,
           "afp": [], "ofp": []}
    for k in range(instances):
        rng = run_stream(seed, k)
        A, rule, start = random_diagonal_instance(rng, n_min, n_max)
        for kind in ("afp", "ofp"):
            tr = run(kind, A, rule, start, rounds)
            t = np.arange(1, tr.rounds + 2)
            psi = tr.psi_raw_all.astype(float) / tr.p_unit
            sel = t >= t_from
            if kind == "afp":
                stats = _probe_stats(t[sel], psi[sel] / np.sqrt(t[sel]))
            else:
                stats = _probe_stats(t[sel], psi[sel])
            stats.update({"index": k, "n": A.n, "a_max": float(A.a_max)})
            out[kind].append(stats)
    for kind, label in (("afp", "max_psi_over_sqrt_t"), ("ofp", "max_psi")):
        rows = out[kind]
        out[f"{kind}_summary"] = {
            label: max(r["max"] for r in rows),
            "second_half_not_above_first": sum(r["max_second_half"] <= r["max_first_half"] * (1 + 1e-12)
                                               for r in rows),
        }
    return out
