"""Gap vectors (per-action regrets) and the weight vector of diagonal games."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..game import DimensionError, PayoffMatrix, UnsupportedStructureError


@dataclass
class WeightVector:
    t: int | None
    w: np.ndarray


def _vec(v):
    arr = np.asarray(v, dtype=object if _has_fraction(v) else float)
    return arr


def _has_fraction(v) -> bool:
    from fractions import Fraction

    return any(isinstance(c, (Fraction, int)) and not isinstance(c, bool) for c in v) and not any(
        isinstance(c, float) for c in v)


def gap_vectors(p, q):
    """``u = p - min(p)`` (row regrets) and ``v = max(q) - q`` (column regrets)."""
    if len(p) != len(q):
        raise DimensionError("p and q must have equal length")
    p, q = _vec(p), _vec(q)
    return p - p.min(), q.max() - q


def weight_vector(x, y, psi, A: PayoffMatrix, t: int | None = None) -> WeightVector:
    """``w_i = psi / A_ii + y_i - x_i``; each entry is the summed regret of action i over A_ii."""
    if not A.is_diagonal:
        raise UnsupportedStructureError("weight vector is defined for diagonal matrices")
    x, y = _vec(x), _vec(y)
    if len(x) != A.n or len(y) != A.n:
        raise DimensionError(f"expected vectors of length {A.n}")
    if x.dtype == object and y.dtype == object and not isinstance(psi, float):
        d = np.array(A.diag_exact, dtype=object)
    else:
        x, y, d = x.astype(float), y.astype(float), A.diag
        psi = float(psi)
    return WeightVector(t, psi / d + y - x)


def weight_from_gaps(u, v, A: PayoffMatrix) -> np.ndarray:
    """The same weight vector written as ``(u_i + v_i) / A_ii``."""
    if not A.is_diagonal:
        raise UnsupportedStructureError("weight vector is defined for diagonal matrices")
    u, v = _vec(u), _vec(v)
    d = np.array(A.diag_exact, dtype=object) if u.dtype == object and v.dtype == object else A.diag
    return (u + v) / d
