"""Fictitious Play and its alternating / optimistic variants.

State is kept in one of two numeric backends:

* exact: every quantity is an int64 scaled by a common integer ``K``.  Iterates
  ``x, y`` are stored as ``K*x``; the cached payoff vectors ``p = A y`` and
  ``q = A^T x`` as ``K^2 * p``.  Ties are detected with zero tolerance.
* float: plain float64 with an explicit tie tolerance.

Actions are 0-based everywhere in the Python API.  Files and CLI output use
1-based actions.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from . import _backend
from .game import DimensionError, PayoffMatrix, SimplexPoint, to_fraction

# headroom below int64 so that max(q) - min(p) cannot overflow either
INT_LIMIT = 2**62
MAX_EXACT_SCALE = 2**20


class DynamicKind(enum.Enum):
    FP = "fp"
    AFP = "afp"
    OFP = "ofp"

    @property
    def code(self) -> int:
        return {"fp": _backend.FP, "afp": _backend.AFP, "ofp": _backend.OFP}[self.value]


class InsufficientDataError(RuntimeError):
    """A checker needs state the trace cannot provide."""


@dataclass(frozen=True)
class TieBreakRule:
    """Lexicographic tie-breaking: ``sigma[a]`` is the priority rank of action ``a``.

    Ranks are 0-based and lower ranks win ties.
    """

    sigma_x: tuple
    sigma_y: tuple

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y"):
            s = tuple(int(v) for v in getattr(self, name))
            if sorted(s) != list(range(len(s))):
                raise ValueError(f"{name} is not a permutation of 0..{len(s) - 1}: {s}")
            object.__setattr__(self, name, s)
        if len(self.sigma_x) != len(self.sigma_y):
            raise DimensionError("sigma_x and sigma_y have different sizes")

    @classmethod
    def identity(cls, n: int):
        return cls(tuple(range(n)), tuple(range(n)))

    @classmethod
    def from_one_based(cls, sigma_x, sigma_y):
        """Build from ranks written 1..n, as on the command line."""
        return cls(tuple(v - 1 for v in sigma_x), tuple(v - 1 for v in sigma_y))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator):
        return cls(tuple(rng.permutation(n)), tuple(rng.permutation(n)))

    @property
    def n(self) -> int:
        return len(self.sigma_x)

    def ranks(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self.sigma_x, dtype=np.int64),
                np.asarray(self.sigma_y, dtype=np.int64))

    def to_json(self) -> dict:
        return {"sigma_x": [v + 1 for v in self.sigma_x], "sigma_y": [v + 1 for v in self.sigma_y]}


def _tie_set_min(p, tol):
    lo = min(p)
    return [a for a, v in enumerate(p) if v <= lo + tol]


def best_response_min(p, sigma, tol=0) -> int:
    """Row player's response: the minimiser of ``p`` with the best rank."""
    if len(p) == 0:
        raise ValueError("empty payoff vector")
    return min(_tie_set_min(p, tol), key=lambda a: sigma[a])


def best_response_max(q, sigma, tol=0) -> int:
    """Column player's response: the maximiser of ``q`` with the best rank."""
    if len(q) == 0:
        raise ValueError("empty payoff vector")
    hi = max(q)
    return min((a for a, v in enumerate(q) if v >= hi - tol), key=lambda a: sigma[a])


@dataclass(frozen=True)
class RoundRecord:
    t: int
    i: int
    j: int
    psi: object  # gap at round start; int/Fraction in exact mode, float otherwise
    tie_x: bool
    tie_y: bool

    @property
    def type(self) -> tuple[int, int]:
        return (self.i, self.j)

    @property
    def is_sync(self) -> bool:
        return self.i == self.j


def _exact(raw, unit):
    f = Fraction(int(raw), int(unit))
    return f.numerator if f.denominator == 1 else f


@dataclass
class EngineState:
    """Mutable state of one dynamic; owned by a single thread.

    ``x, y`` hold the unscaled iterates times ``unit`` and ``p, q`` the cached
    payoff vectors times ``p_unit`` (``unit = K``, ``p_unit = K^2`` in exact
    mode, both 1 in float mode).
    """

    kind: DynamicKind
    matrix: PayoffMatrix
    t: int
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    q: np.ndarray
    mode: str
    scale: int = 1
    tol: float = 0.0
    prev_i: int = -1
    prev_j: int = -1

    @classmethod
    def start(cls, kind, A: PayoffMatrix, start=None, mode: str = "auto", tol=None):
        kind = DynamicKind(kind)
        x1, y1 = normalize_start(A.n, start)
        mode, k = resolve_mode(A, x1, y1, mode)
        if mode == "exact":
            Ak = A.integer_form(k)
            x = np.array([int(c * k) for c in x1], dtype=np.int64)
            y = np.array([int(c * k) for c in y1], dtype=np.int64)
            state = cls(kind, A, 1, x, y, Ak @ y, x @ Ak, "exact", k, 0)
        else:
            M = A.entries
            x = np.array(x1, dtype=float)
            y = np.array(y1, dtype=float)
            if tol is None:
                tol = 1e-9 * (1.0 + float(np.abs(M).max()))
            state = cls(kind, A, 1, x, y, M @ y, x @ M, "float", 1, float(tol))
        return state

    @property
    def unit(self):
        return self.scale if self.mode == "exact" else 1.0

    @property
    def p_unit(self):
        return self.scale**2 if self.mode == "exact" else 1.0

    @property
    def raw_matrix(self) -> np.ndarray:
        if self.mode == "exact":
            return self.matrix.integer_form(self.scale)
        return np.ascontiguousarray(self.matrix.entries)

    def copy(self) -> "EngineState":
        return EngineState(self.kind, self.matrix, self.t, self.x.copy(), self.y.copy(),
                           self.p.copy(), self.q.copy(), self.mode, self.scale, self.tol,
                           self.prev_i, self.prev_j)

    def value(self, raw, which: str = "p"):
        """Convert a raw scalar to its true value (Fraction/int or float)."""
        unit = self.p_unit if which == "p" else self.unit
        if self.mode == "exact":
            return _exact(raw, unit)
        return float(raw) / unit

    @property
    def psi_raw(self):
        return self.q.max() - self.p.min()

    @property
    def psi(self):
        return self.value(self.psi_raw)

    def iterates(self):
        """``(x, y)`` in true units, as Fractions (exact) or floats."""
        if self.mode == "exact":
            k = self.scale
            return ([_exact(v, k) for v in self.x], [_exact(v, k) for v in self.y])
        return self.x.copy(), self.y.copy()

    def audit(self) -> bool:
        """Recompute ``p``, ``q`` from ``x``, ``y`` and compare with the caches."""
        M = self.raw_matrix
        p, q = M @ self.y, self.x @ M
        if self.mode == "exact":
            return bool(np.array_equal(p, self.p) and np.array_equal(q, self.q))
        scale = 1.0 + max(np.abs(p).max(), np.abs(q).max())
        return bool(np.allclose(p, self.p, rtol=0, atol=1e-9 * scale)
                    and np.allclose(q, self.q, rtol=0, atol=1e-9 * scale))

    def headroom(self) -> int:
        """Rounds that can run before exact arithmetic could leave int64."""
        if self.mode != "exact":
            return 2**62
        M = self.raw_matrix
        step = 3 * self.scale * max(1, int(np.abs(M).max()))
        bound = max(int(np.abs(v).max()) for v in (self.x, self.y, self.p, self.q))
        return max(0, (INT_LIMIT - bound) // step)


def normalize_start(n: int, start):
    """Starting pair as two coordinate tuples (Fractions when exact).

    Accepts ``None`` (``(e_1, e_1)``), a pair of 0-based vertex indices, or a
    pair of simplex vectors.
    """
    if start is None:
        start = (0, 0)
    a, b = start
    out = []
    for s in (a, b):
        if isinstance(s, (int, np.integer)):
            s = SimplexPoint.vertex(n, int(s))
        elif not isinstance(s, SimplexPoint):
            s = SimplexPoint(s)
        if s.n != n:
            raise DimensionError(f"start vector has length {s.n}, matrix has n={n}")
        out.append(s.coords)
    return out[0], out[1]


def resolve_mode(A: PayoffMatrix, x1, y1, mode: str):
    if mode not in ("auto", "exact", "float"):
        raise ValueError(f"unknown numeric mode {mode!r}")
    if mode == "float":
        return "float", 1
    k = A.scale_factor()
    for c in (*x1, *y1):
        k = math.lcm(k, to_fraction(c).denominator)
    ok = k <= MAX_EXACT_SCALE
    if ok:
        try:
            ok = int(np.abs(A.integer_form(k)).max()) <= 2**31
        except OverflowError:
            ok = False
    if ok:
        return "exact", k
    if mode == "exact":
        raise ValueError(f"exact mode needs a common scale <= {MAX_EXACT_SCALE}, got {k}")
    return "float", 1


def _advance(state: EngineState, rule: TieBreakRule, rounds: int, kernel=None):
    """Run ``rounds`` rounds through the kernel; returns the raw output buffers."""
    if rule.n != state.matrix.n:
        raise DimensionError("tie-break rule size does not match the matrix")
    if rounds > state.headroom():
        raise OverflowError(f"exact state would overflow int64 within {rounds} rounds")
    kern = _backend.get_kernel(kernel)
    dtype = np.int64 if state.mode == "exact" else np.float64
    out_i = np.empty(rounds, dtype=np.int32)
    out_j = np.empty(rounds, dtype=np.int32)
    out_psi = np.empty(rounds, dtype=dtype)
    out_tx = np.empty(rounds, dtype=np.uint8)
    out_ty = np.empty(rounds, dtype=np.uint8)
    rx, ry = rule.ranks()
    unit = dtype(state.unit)
    tol = dtype(state.tol)
    state.prev_i, state.prev_j = kern.run_rounds(
        state.kind.code, state.raw_matrix, state.x, state.y, state.p, state.q,
        rx, ry, unit, tol, rounds, state.prev_i, state.prev_j,
        out_i, out_j, out_psi, out_tx, out_ty)
    state.t += rounds
    return out_i, out_j, out_psi, out_tx.astype(bool), out_ty.astype(bool)


def _step(kind, state, A, rule, kernel=None) -> RoundRecord:
    if state.kind is not kind:
        raise ValueError(f"state runs {state.kind.value}, not {kind.value}")
    if A is not state.matrix and A != state.matrix:
        raise ValueError("state was built for a different payoff matrix")
    t = state.t
    i, j, psi, tx, ty = _advance(state, rule, 1, kernel)
    return RoundRecord(t, int(i[0]), int(j[0]), state.value(psi[0]), bool(tx[0]), bool(ty[0]))


def step_fp(state: EngineState, A: PayoffMatrix, rule: TieBreakRule, kernel=None) -> RoundRecord:
    """One simultaneous FP round: both players respond to the round-t state."""
    return _step(DynamicKind.FP, state, A, rule, kernel)


def step_afp(state: EngineState, A: PayoffMatrix, rule: TieBreakRule, kernel=None) -> RoundRecord:
    """One alternating round: row moves first, column answers the updated history."""
    return _step(DynamicKind.AFP, state, A, rule, kernel)


def step_ofp(state: EngineState, A: PayoffMatrix, rule: TieBreakRule, kernel=None) -> RoundRecord:
    """One optimistic round: ``x += 2 e_i - e_prev_i`` (plain FP update in round 1)."""
    return _step(DynamicKind.OFP, state, A, rule, kernel)


STEPPERS = {DynamicKind.FP: step_fp, DynamicKind.AFP: step_afp, DynamicKind.OFP: step_ofp}


@dataclass(frozen=True)
class SnapshotPolicy:
    """Which rounds carry full p, q, u, v, w snapshots: stride 0 = none, 1 = all."""

    stride: int = 0

    @classmethod
    def parse(cls, spec) -> "SnapshotPolicy":
        if isinstance(spec, SnapshotPolicy):
            return spec
        if spec is None:
            return cls(0)
        spec = str(spec).strip().lower()
        if spec == "none":
            return cls(0)
        if spec == "full":
            return cls(1)
        if spec.startswith("strided:"):
            k = int(spec.split(":", 1)[1])
            if k < 1:
                raise ValueError("stride must be >= 1")
            return cls(k)
        raise ValueError(f"bad snapshot policy {spec!r}; use none|full|strided:k")

    def times(self, rounds: int) -> range:
        if self.stride == 0:
            return range(0)
        return range(1, rounds + 1, self.stride)


@dataclass
class Snapshot:
    """True-valued state at the start of round ``t``.

    Vectors are object arrays of Fractions in exact mode, float arrays
    otherwise; ``w`` is only present for diagonal matrices.
    """

    t: int
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    q: np.ndarray
    psi: object
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray | None = None


def _to_values(raw: np.ndarray, unit, exact: bool) -> np.ndarray:
    if exact:
        unit = int(unit)
        return np.array([Fraction(int(v), unit) for v in raw], dtype=object)
    return np.asarray(raw, dtype=float) / unit


class Trace:
    """Columnar record of one run.

    Round ``t`` (1-based) is stored at index ``t - 1`` of ``i``, ``j``,
    ``psi_raw``, ``tie_x``, ``tie_y``.  ``final`` is the state after the last
    round, i.e. at round ``rounds + 1``.
    """

    def __init__(self, kind, matrix, rule, mode, scale, i, j, psi_raw, tie_x, tie_y,
                 start=None, final=None, error=None, snapshots=None, tol=0.0):
        self.kind = DynamicKind(kind)
        self.matrix = matrix
        self.rule = rule
        self.mode = mode
        self.scale = scale
        self.tol = tol
        self.i = np.asarray(i, dtype=np.int32)
        self.j = np.asarray(j, dtype=np.int32)
        self.psi_raw = np.asarray(psi_raw)
        self.tie_x = np.asarray(tie_x, dtype=bool)
        self.tie_y = np.asarray(tie_y, dtype=bool)
        self.start = start  # raw (x1, y1) or None when unknown
        self.final = final
        self.error = error
        self.snapshots = dict(snapshots or {})
        self._snap_cache: dict[int, Snapshot] = {}

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    @property
    def rounds(self) -> int:
        return len(self.i)

    def __len__(self):
        return self.rounds

    @property
    def unit(self):
        return self.scale if self.exact else 1.0

    @property
    def p_unit(self):
        return self.scale**2 if self.exact else 1.0

    @property
    def psi_raw_all(self) -> np.ndarray:
        """Raw gaps for rounds 1..T+1 (the last entry is the final state)."""
        if self.final is None:
            return self.psi_raw
        return np.append(self.psi_raw, self.final.psi_raw)

    @property
    def psi(self) -> np.ndarray:
        """Gap at the start of each round as floats."""
        return self.psi_raw.astype(float) / self.p_unit

    def psi_value(self, t: int):
        """Exact (or float) gap at the start of round ``t``, ``1 <= t <= T+1``."""
        raw = self.psi_raw_all[t - 1]
        return _exact(raw, self.p_unit) if self.exact else float(raw)

    def value(self, raw):
        return _exact(raw, self.p_unit) if self.exact else float(raw) / self.p_unit

    def record(self, t: int) -> RoundRecord:
        k = t - 1
        return RoundRecord(t, int(self.i[k]), int(self.j[k]), self.psi_value(t),
                           bool(self.tie_x[k]), bool(self.tie_y[k]))

    def records(self) -> Iterator[RoundRecord]:
        for t in range(1, self.rounds + 1):
            yield self.record(t)

    def round_types(self) -> list[tuple[int, int]]:
        return list(zip(self.i.tolist(), self.j.tolist()))

    def raw_states(self, times) -> dict[str, np.ndarray]:
        """Raw ``x, y, p, q`` at the start of each round in ``times``.

        Rebuilt from the recorded actions (a second pass over the trace), so
        snapshots never need to be stored during the run.
        """
        if self.start is None:
            raise InsufficientDataError("trace has no starting state to rebuild snapshots from")
        ts = np.asarray(list(times), dtype=np.int64)
        if ts.size and (ts.min() < 1 or ts.max() > self.rounds + 1):
            raise IndexError("snapshot time outside 1..T+1")
        n = self.matrix.n
        x1, y1 = self.start
        cx = _play_counts(self.i, ts, n)
        cy = _play_counts(self.j, ts, n)
        if self.kind is DynamicKind.OFP:
            # x^(t) = x^(1) + sum_{r=2}^{t-1} e_{i_r} + e_{i_{t-1}}  for t >= 2
            late = ts >= 2
            if late.any():
                rows = np.nonzero(late)[0]
                cx[rows, self.i[0]] -= 1
                cy[rows, self.j[0]] -= 1
                cx[rows, self.i[ts[late] - 2]] += 1
                cy[rows, self.j[ts[late] - 2]] += 1
        unit = self.scale if self.exact else 1.0
        if self.exact:
            x = x1[None, :] + cx * np.int64(unit)
            y = y1[None, :] + cy * np.int64(unit)
            M = self.matrix.integer_form(self.scale)
        else:
            x = x1[None, :] + cx
            y = y1[None, :] + cy
            M = self.matrix.entries
        return {"t": ts, "x": x, "y": y, "p": y @ M.T, "q": x @ M}

    def snapshot(self, t: int) -> Snapshot:
        if t in self.snapshots:
            return self.snapshots[t]
        if t not in self._snap_cache:
            self.prefetch([t])
        return self._snap_cache[t]

    def prefetch(self, times) -> None:
        """Build and cache snapshots for many rounds in one pass."""
        need = sorted({int(t) for t in times} - self._snap_cache.keys() - self.snapshots.keys())
        if not need:
            return
        raw = self.raw_states(need)
        for k, t in enumerate(need):
            self._snap_cache[t] = self._make_snapshot(
                t, raw["x"][k], raw["y"][k], raw["p"][k], raw["q"][k])

    def _make_snapshot(self, t, x, y, p, q) -> Snapshot:
        ex = self.exact
        X = _to_values(x, self.unit, ex)
        Y = _to_values(y, self.unit, ex)
        P = _to_values(p, self.p_unit, ex)
        Q = _to_values(q, self.p_unit, ex)
        psi = Q.max() - P.min()
        u = P - P.min()
        v = Q.max() - Q
        w = None
        if self.matrix.is_diagonal:
            d = np.array(self.matrix.diag_exact, dtype=object) if ex else self.matrix.diag
            w = psi / d + Y - X
        return Snapshot(t, X, Y, P, Q, psi, u, v, w)


def _play_counts(actions: np.ndarray, ts: np.ndarray, n: int) -> np.ndarray:
    """``counts[k, a]`` = plays of ``a`` in rounds ``1..ts[k]-1``."""
    out = np.zeros((len(ts), n), dtype=np.int64)
    order = np.argsort(actions, kind="stable")
    sorted_actions = actions[order]
    for a in range(n):
        lo, hi = np.searchsorted(sorted_actions, [a, a + 1])
        pos = order[lo:hi]  # already increasing thanks to the stable sort
        out[:, a] = np.searchsorted(pos, ts - 1)
    return out


def run(kind, A: PayoffMatrix, rule: TieBreakRule | None = None, start=None, rounds: int = 1,
        snapshots="none", mode: str = "auto", tol=None, kernel: str | None = None) -> Trace:
    """Run a dynamic for ``rounds`` rounds and return its trace.

    If exact arithmetic would overflow part-way, the rounds that fit are run
    and the trace carries an ``error`` annotation.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    rule = rule or TieBreakRule.identity(A.n)
    policy = SnapshotPolicy.parse(snapshots)
    state = EngineState.start(kind, A, start, mode=mode, tol=tol)
    x1, y1 = state.x.copy(), state.y.copy()
    todo = min(rounds, state.headroom())
    error = None
    if todo < rounds:
        error = f"overflow: exact state leaves int64 after {todo} of {rounds} rounds"
    if todo == 0:
        raise OverflowError(error)
    i, j, psi, tx, ty = _advance(state, rule, todo, kernel)
    trace = Trace(state.kind, A, rule, state.mode, state.scale, i, j, psi, tx, ty,
                  start=(x1, y1), final=state, error=error, tol=state.tol)
    times = list(policy.times(trace.rounds))
    if times:
        trace.prefetch(times)
        trace.snapshots = {t: trace._snap_cache[t] for t in times}
    return trace


def trace_from_actions(kind, A: PayoffMatrix, rule: TieBreakRule, start, i, j,
                       tie_x=None, tie_y=None, mode: str = "auto", tol=None) -> Trace:
    """Rebuild a full trace (gaps and final state) from the recorded actions.

    Used when reading trace files: the gap column is recomputed exactly from
    the starting state instead of trusting printed numbers.
    """
    state = EngineState.start(kind, A, start, mode=mode, tol=tol)
    i = np.asarray(i, dtype=np.int32)
    j = np.asarray(j, dtype=np.int32)
    if i.shape != j.shape or i.ndim != 1 or i.size == 0:
        raise ValueError("action columns must be equal-length nonempty 1-D arrays")
    if i.min() < 0 or j.min() < 0 or i.max() >= A.n or j.max() >= A.n:
        raise ValueError("action index out of range")
    T = i.size
    tie_x = np.zeros(T, bool) if tie_x is None else tie_x
    tie_y = np.zeros(T, bool) if tie_y is None else tie_y
    trace = Trace(state.kind, A, rule, state.mode, state.scale, i, j, np.zeros(T, dtype=state.p.dtype),
                  tie_x, tie_y, start=(state.x.copy(), state.y.copy()), tol=state.tol)
    raw = trace.raw_states(range(1, T + 2))
    trace.psi_raw = raw["q"].max(axis=1) - raw["p"].min(axis=1)
    trace.psi_raw, last = trace.psi_raw[:T], trace.psi_raw[T]
    state.x, state.y, state.p, state.q = raw["x"][T], raw["y"][T], raw["p"][T], raw["q"][T]
    state.t = T + 1
    if state.kind is DynamicKind.OFP:
        state.prev_i, state.prev_j = int(i[-1]), int(j[-1])
    trace.final = state
    return trace
