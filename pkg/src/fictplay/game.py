"""Payoff matrices, the duality gap and minimax utilities.

Every matrix keeps an exact rational copy of its entries next to the float
array.  The exact copy is what lets the dynamics run on scaled integers, so
that ties are detected exactly rather than up to rounding.
"""
from __future__ import annotations

import enum
import json
import math
from fractions import Fraction
from numbers import Rational
from pathlib import Path

import numpy as np


class DimensionError(ValueError):
    """Vector or matrix sizes do not agree."""


class UnsupportedStructureError(ValueError):
    """Operation needs a diagonal (or identity) payoff matrix."""


class Structure(enum.Enum):
    GENERAL = "general"
    DIAGONAL = "diagonal"
    IDENTITY = "identity"


def to_fraction(v) -> Fraction:
    """Exact rational for a scalar.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10`` and
    not the binary expansion.
    """
    if isinstance(v, Fraction):
        return v
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, bool):
        raise TypeError("booleans are not payoffs")
    if isinstance(v, (int, Rational)):
        return Fraction(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r}")
        return Fraction(repr(v))
    if isinstance(v, str):
        return Fraction(v.strip())
    raise TypeError(f"cannot interpret {v!r} as a number")


def _lcm_of_denominators(values) -> int:
    k = 1
    for f in values:
        k = math.lcm(k, f.denominator)
    return k


class PayoffMatrix:
    """Square payoff matrix ``A``; row player pays ``A[i, j]`` to column player.

    Treat instances as immutable.  ``structure`` is detected from the entries:
    a matrix is DIAGONAL when every off-diagonal entry is exactly zero and
    every diagonal entry is strictly positive, IDENTITY when additionally all
    diagonal entries equal one.
    """

    def __init__(self, entries):
        rows = [[to_fraction(v) for v in row] for row in entries]
        n = len(rows)
        if n < 1 or any(len(r) != n for r in rows):
            raise DimensionError("payoff matrix must be square with n >= 1")
        self.n = n
        self.exact = tuple(tuple(r) for r in rows)
        arr = np.array([[float(v) for v in r] for r in rows], dtype=float)
        arr.setflags(write=False)
        self.entries = arr

        off_zero = all(rows[a][b] == 0 for a in range(n) for b in range(n) if a != b)
        diag = [rows[a][a] for a in range(n)]
        if off_zero and all(d > 0 for d in diag):
            self.structure = Structure.IDENTITY if all(d == 1 for d in diag) else Structure.DIAGONAL
            self.diag_exact = tuple(diag)
            d = np.array([float(v) for v in diag])
            d.setflags(write=False)
            self.diag = d
            self.a_min = min(diag)
            self.a_max = max(diag)
            self.kappa = self.a_max / self.a_min
        else:
            self.structure = Structure.GENERAL
            self.diag_exact = None
            self.diag = None
            self.a_min = self.a_max = self.kappa = None
        self._scaled = {}

    @classmethod
    def diagonal(cls, values):
        n = len(values)
        return cls([[values[a] if a == b else 0 for b in range(n)] for a in range(n)])

    @classmethod
    def identity(cls, n: int):
        if n < 1:
            raise DimensionError("identity size must be >= 1")
        return cls.diagonal([1] * n)

    @property
    def is_diagonal(self) -> bool:
        return self.structure is not Structure.GENERAL

    @property
    def is_identity(self) -> bool:
        return self.structure is Structure.IDENTITY

    def exact_array(self) -> np.ndarray:
        """Entries as an object array of Fractions."""
        out = np.empty((self.n, self.n), dtype=object)
        for a, row in enumerate(self.exact):
            out[a, :] = row
        return out

    def scale_factor(self) -> int:
        """Smallest K with K*A integral."""
        return _lcm_of_denominators(v for row in self.exact for v in row)

    def integer_form(self, k: int) -> np.ndarray:
        """``k * A`` as int64; ``k`` must clear every denominator."""
        if k not in self._scaled:
            vals = [[v * k for v in row] for row in self.exact]
            if any(v.denominator != 1 for row in vals for v in row):
                raise ValueError(f"scale {k} does not clear the denominators of A")
            if any(abs(v) >= 2**62 for row in vals for v in row):
                raise OverflowError("scaled payoff entries exceed int64 range")
            arr = np.array([[int(v) for v in row] for row in vals], dtype=np.int64)
            arr.setflags(write=False)
            self._scaled[k] = arr
        return self._scaled[k]

    def entry_range(self) -> Fraction:
        """max(A) - min(A); bounds the one-round change of the duality gap."""
        flat = [v for row in self.exact for v in row]
        return max(flat) - min(flat)

    def to_json(self) -> dict:
        if self.is_identity:
            return {"identity": self.n}
        if self.is_diagonal:
            return {"diag": [_json_number(v) for v in self.diag_exact]}
        return {"n": self.n, "entries": [[_json_number(v) for v in row] for row in self.exact]}

    def __eq__(self, other):
        return isinstance(other, PayoffMatrix) and self.exact == other.exact

    def __hash__(self):
        return hash(self.exact)

    def __repr__(self):
        if self.is_identity:
            return f"PayoffMatrix.identity({self.n})"
        if self.is_diagonal:
            return f"PayoffMatrix.diagonal({[str(v) for v in self.diag_exact]})"
        return f"PayoffMatrix(n={self.n}, structure={self.structure.value})"


def _json_number(v: Fraction):
    """int when integral, float when the float reads back exactly, else ``"a/b"``."""
    if v.denominator == 1:
        return int(v)
    f = float(v)
    return f if to_fraction(f) == v else f"{v.numerator}/{v.denominator}"


def matrix_from_json(obj) -> PayoffMatrix:
    """Parse ``{"n", "entries"}``, ``{"diag"}`` or ``{"identity"}``."""
    if not isinstance(obj, dict):
        raise ValueError("matrix JSON must be an object")
    if "identity" in obj:
        return PayoffMatrix.identity(int(obj["identity"]))
    if "diag" in obj:
        return PayoffMatrix.diagonal(list(obj["diag"]))
    if "entries" in obj:
        m = PayoffMatrix(obj["entries"])
        if "n" in obj and int(obj["n"]) != m.n:
            raise DimensionError(f"declared n={obj['n']} but entries are {m.n}x{m.n}")
        return m
    raise ValueError("matrix JSON needs one of 'entries', 'diag', 'identity'")


def load_matrix(path) -> PayoffMatrix:
    return matrix_from_json(json.loads(Path(path).read_text()))


class SimplexPoint:
    """A point of the probability simplex; coords may be Fractions or floats."""

    __slots__ = ("coords",)

    def __init__(self, coords, tol: float = 1e-12):
        coords = tuple(coords)
        if not coords:
            raise DimensionError("empty simplex point")
        exact = all(isinstance(c, (int, Fraction)) for c in coords)
        if exact:
            coords = tuple(Fraction(c) for c in coords)
            if any(c < 0 for c in coords) or sum(coords) != 1:
                raise ValueError(f"not on the simplex: {coords}")
        else:
            coords = tuple(float(c) for c in coords)
            if any(c < 0 for c in coords) or abs(math.fsum(coords) - 1.0) > tol:
                raise ValueError(f"not on the simplex: {coords}")
        self.coords = coords

    @classmethod
    def vertex(cls, n: int, i: int):
        """``e_i`` with a 0-based index."""
        if not 0 <= i < n:
            raise IndexError(f"vertex {i} out of range for n={n}")
        return cls(Fraction(int(a == i)) for a in range(n))

    @property
    def n(self) -> int:
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.array([float(c) for c in self.coords], dtype=dtype or float)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __eq__(self, other):
        return isinstance(other, SimplexPoint) and self.coords == other.coords

    def __repr__(self):
        return f"SimplexPoint({[str(c) for c in self.coords]})"


def _is_exact(v) -> bool:
    return all(isinstance(c, (int, Fraction, np.integer)) and not isinstance(c, bool) for c in v)


def _operands(x, y, A: PayoffMatrix):
    x = list(x.coords) if isinstance(x, SimplexPoint) else list(np.asarray(x, dtype=object).ravel())
    y = list(y.coords) if isinstance(y, SimplexPoint) else list(np.asarray(y, dtype=object).ravel())
    if len(x) != A.n or len(y) != A.n:
        raise DimensionError(f"expected vectors of length {A.n}, got {len(x)} and {len(y)}")
    if _is_exact(x) and _is_exact(y):
        xs = np.array([Fraction(int(c)) if isinstance(c, np.integer) else Fraction(c) for c in x], dtype=object)
        ys = np.array([Fraction(int(c)) if isinstance(c, np.integer) else Fraction(c) for c in y], dtype=object)
        return xs, ys, A.exact_array()
    return np.array(x, dtype=float), np.array(y, dtype=float), A.entries


def duality_gap(x, y, A: PayoffMatrix):
    """``max_j (x^T A)_j - min_i (A y)_i``.

    Exact (a Fraction) when both vectors hold only ints/Fractions, float
    otherwise.  Nonnegative on the simplex, zero exactly at minimax points.
    """
    xs, ys, M = _operands(x, y, A)
    q = xs @ M
    p = M @ ys
    return max(q) - min(p)


def duality_gap_from_state(p, q):
    """Gap from cached state vectors: ``max(q) - min(p)``."""
    if len(p) != len(q):
        raise DimensionError("p and q must have equal length")
    if len(p) == 0:
        raise DimensionError("empty state vectors")
    return max(q) - min(p)


def skew_matrix(A: PayoffMatrix, exact: bool = False) -> np.ndarray:
    """``S = [[0, -A], [A^T, 0]]``."""
    n = A.n
    M = A.exact_array() if exact else A.entries
    S = np.zeros((2 * n, 2 * n), dtype=object if exact else float)
    if exact:
        S[:, :] = Fraction(0)
    S[:n, n:] = -M
    S[n:, :n] = M.T
    return S


def support_form_gap(x, y, A: PayoffMatrix):
    """Duality gap as the support function of the product simplex at ``S z``.

    The support function of a product of simplices separates, and on each
    factor the maximum sits at a vertex, so it is enough to scan the ``2n``
    vertices ``(e_a, .)`` and ``(., e_b)``.
    """
    xs, ys, _ = _operands(x, y, A)
    exact = xs.dtype == object
    n = A.n
    S = skew_matrix(A, exact=exact)
    z = np.concatenate([xs, ys])
    theta = S @ z
    best_x = max(theta[a] for a in range(n))
    best_y = max(theta[n + b] for b in range(n))
    return best_x + best_y


def minimax_diagonal(A: PayoffMatrix):
    """Unique equilibrium of a diagonal game: ``x* = y*`` with ``x*_i ∝ 1/A_ii``."""
    if not A.is_diagonal:
        raise UnsupportedStructureError("closed-form minimax needs a diagonal matrix with positive diagonal")
    inv = [1 / d for d in A.diag_exact]
    total = sum(inv)
    point = SimplexPoint(v / total for v in inv)
    return point, point
