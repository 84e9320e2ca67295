"""Weighted-sum inequality used to turn per-pair increments into a sqrt bound."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SumCheck:
    weighted_sum: float
    upper: float
    lower: float | None  # None when E < 2 eps_max and the lower side does not apply
    ok: bool

    def __iter__(self):
        return iter((self.weighted_sum, self.upper, self.lower, self.ok))


def sum_inequality_oracle(eps, eps_max) -> SumCheck:
    """For ``0 <= eps_r <= eps_max`` and ``E = sum(eps)``:

    ``sum_r (s - r + 1) eps_r <= s (E + eps_max)`` always, and
    ``sum_r (s - r + 1) eps_r >= E^2 / (4 eps_max)`` when ``E >= 2 eps_max``.

    Works with floats or Fractions; with floats the comparisons allow a
    relative slack of 1e-12 for rounding in the sums.
    """
    eps = list(eps)
    if eps_max <= 0:
        raise ValueError("eps_max must be positive")
    for e in eps:
        if e < 0 or e > eps_max:
            raise ValueError(f"increment {e} outside [0, {eps_max}]")
    s = len(eps)
    E = sum(eps)
    weighted = sum((s - r) * e for r, e in enumerate(eps))
    upper = s * (E + eps_max)
    exact = not any(isinstance(v, float) for v in (*eps, eps_max))
    slack = 0 if exact else 1e-12 * (1 + abs(upper))
    ok = weighted <= upper + slack
    lower = None
    if E >= 2 * eps_max:
        lower = E * E / (4 * eps_max)
        ok = ok and weighted + slack >= lower
    return SumCheck(weighted, upper, lower, bool(ok))
