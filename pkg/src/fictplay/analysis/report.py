"""Bound reports and the accumulator the checkers feed.

Every check is either ``lhs <= rhs`` or ``lhs == rhs``.  Its margin is
``rhs - lhs`` (plus slack) for inequalities and ``tol - |lhs - rhs|`` for
equalities, so a report holds exactly when its worst margin is >= 0.
In exact mode comparisons are done on Fractions with zero tolerance.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

EQ_TOL = 1e-9
LE_SLACK = 1e-9
MAX_FAILURES = 25


@dataclass
class BoundReport:
    theorem_id: str
    holds: bool
    worst_margin: float
    worst_t: int | None
    checks: int = 0
    failures: list = field(default_factory=list)
    applicable: bool = True
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "theorem": self.theorem_id,
            "holds": self.holds,
            "worst_margin": _json_float(self.worst_margin),
            "worst_t": self.worst_t,
            "checks": self.checks,
            "failures": self.failures,
        }
        if not self.applicable:
            out["applicable"] = False
        if self.details:
            out["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    def line(self) -> str:
        if not self.applicable:
            return f"{self.theorem_id:<24} n/a    {self.details.get('reason', '')}"
        status = "PASS" if self.holds else "FAIL"
        return (f"{self.theorem_id:<24} {status}  checks={self.checks:<8d} "
                f"worst_margin={self.worst_margin:.6g} at t={self.worst_t}")


def not_applicable(theorem_id: str, reason: str) -> BoundReport:
    return BoundReport(theorem_id, True, math.inf, None, 0, [], applicable=False,
                       details={"reason": reason})


def _json_float(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return None
    return float(v)


def _jsonable(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _no_float(*vals):
    for v in vals:
        if isinstance(v, (float, np.floating)):
            raise TypeError(f"float {v!r} in an exact comparison")


def _sqrt_floor_margin(a, r, rhs) -> float:
    return float(rhs) - float(a) * math.sqrt(float(r))


class Check:
    """Collects individual comparisons into one BoundReport."""

    def __init__(self, theorem_id: str, exact: bool):
        self.theorem_id = theorem_id
        self.exact = exact
        self.count = 0
        self.worst = math.inf
        self.worst_t = None
        self.failures: list = []
        self.n_failed = 0
        self.details: dict = {}

    def _record(self, ok: bool, margin: float, t, what: str, info: dict):
        self.count += 1
        if margin < self.worst:
            self.worst = margin
            self.worst_t = None if t is None else int(t)
        if not ok:
            self.n_failed += 1
            if len(self.failures) < MAX_FAILURES:
                rec = {"t": None if t is None else int(t), "check": what, "margin": _json_float(margin)}
                rec.update({k: _jsonable(v) for k, v in info.items()})
                self.failures.append(rec)

    def le(self, lhs, rhs, t, what: str, **info) -> bool:
        if self.exact:
            _no_float(lhs, rhs)
            ok = lhs <= rhs
            margin = float(rhs - lhs)
        else:
            margin = float(rhs) - float(lhs) + LE_SLACK
            ok = margin >= 0
        self._record(ok, margin, t, what, info)
        return ok

    def ge(self, lhs, rhs, t, what: str, **info) -> bool:
        return self.le(rhs, lhs, t, what, **info)

    def eq(self, lhs, rhs, t, what: str, **info) -> bool:
        if self.exact:
            _no_float(lhs, rhs)
            ok = lhs == rhs
            margin = 0.0 - abs(float(lhs - rhs))
        else:
            diff = abs(float(lhs) - float(rhs))
            margin = EQ_TOL * (1.0 + abs(float(rhs))) - diff
            ok = margin >= 0
        self._record(ok, margin, t, what, info)
        return ok

    def le_root(self, lhs, a, r, t, what: str, **info) -> bool:
        """``lhs <= a * sqrt(r)`` with ``a, r >= 0``; exact by squaring."""
        margin = -_sqrt_floor_margin(a, r, lhs)
        if self.exact:
            _no_float(lhs, a, r)
            ok = lhs <= 0 or lhs * lhs <= a * a * r
        else:
            margin += LE_SLACK
            ok = margin >= 0
        self._record(ok, margin, t, what, info)
        return ok

    def root_le(self, a, r, rhs, t, what: str, **info) -> bool:
        """``a * sqrt(r) <= rhs`` with ``a, r >= 0``; exact by squaring."""
        margin = _sqrt_floor_margin(a, r, rhs)
        if self.exact:
            _no_float(a, r, rhs)
            ok = rhs >= 0 and a * a * r <= rhs * rhs
        else:
            margin += LE_SLACK
            ok = margin >= 0
        self._record(ok, margin, t, what, info)
        return ok

    def bulk(self, ok: np.ndarray, margin: np.ndarray, ts: np.ndarray, what: str) -> None:
        """Register many precomputed checks at once."""
        if ok.size == 0:
            return
        self.count += int(ok.size)
        k = int(np.argmin(margin))
        if margin[k] < self.worst:
            self.worst = float(margin[k])
            self.worst_t = int(ts[k])
        bad = np.nonzero(~ok)[0]
        self.n_failed += int(bad.size)
        for b in bad[: max(0, MAX_FAILURES - len(self.failures))]:
            self.failures.append({"t": int(ts[b]), "check": what, "margin": _json_float(margin[b])})

    def report(self) -> BoundReport:
        holds = self.n_failed == 0
        details = dict(self.details)
        if self.n_failed:
            details["failed"] = self.n_failed
        worst = self.worst if self.count else math.inf
        return BoundReport(self.theorem_id, holds, worst, self.worst_t, self.count,
                           self.failures, True, details)
