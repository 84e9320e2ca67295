"""Independent brute-force reference for the dynamics.

Plain Python with Fractions.  p and q are recomputed from x and y every
round; nothing here imports the package under test.
"""
from fractions import Fraction


def payoffs(A, x, y):
    n = len(A)
    p = [sum(A[a][b] * y[b] for b in range(n)) for a in range(n)]
    q = [sum(x[a] * A[a][b] for a in range(n)) for b in range(n)]
    return p, q


def gap(A, x, y):
    p, q = payoffs(A, x, y)
    return max(q) - min(p)


def argmin_ranked(v, sigma):
    lo = min(v)
    return min((a for a in range(len(v)) if v[a] == lo), key=lambda a: sigma[a])


def argmax_ranked(v, sigma):
    hi = max(v)
    return min((a for a in range(len(v)) if v[a] == hi), key=lambda a: sigma[a])


def vertex(n, a):
    return [Fraction(int(b == a)) for b in range(n)]


def simulate(A, rounds, sigma_x=None, sigma_y=None, x1=None, y1=None, kind="fp"):
    """Rounds as dicts ``t, i, j, psi, x, y, p, q`` (0-based actions, state at round start)."""
    A = [[Fraction(v) for v in row] for row in A]
    n = len(A)
    sigma_x = sigma_x or list(range(n))
    sigma_y = sigma_y or list(range(n))
    x = [Fraction(v) for v in (x1 or vertex(n, 0))]
    y = [Fraction(v) for v in (y1 or vertex(n, 0))]
    prev = None
    out = []
    for t in range(1, rounds + 1):
        p, q = payoffs(A, x, y)
        rec = {"t": t, "x": list(x), "y": list(y), "p": p, "q": q, "psi": max(q) - min(p)}
        i = argmin_ranked(p, sigma_x)
        if kind == "afp":
            x[i] += 1
            _, q2 = payoffs(A, x, y)
            j = argmax_ranked(q2, sigma_y)
            y[j] += 1
        else:
            j = argmax_ranked(q, sigma_y)
            if kind == "ofp" and prev is not None:
                x[i] += 2
                x[prev[0]] -= 1
                y[j] += 2
                y[prev[1]] -= 1
            else:
                x[i] += 1
                y[j] += 1
            prev = (i, j)
        rec["i"], rec["j"] = i, j
        out.append(rec)
    p, q = payoffs(A, x, y)
    out.append({"t": rounds + 1, "x": x, "y": y, "p": p, "q": q, "psi": max(q) - min(p)})
    return out


def weights(diag, rec):
    """``w_i = psi / A_ii + y_i - x_i`` from a state record."""
    return [rec["psi"] / Fraction(d) + rec["y"][a] - rec["x"][a] for a, d in enumerate(diag)]


def phases(types):
    """Maximal runs of equal round types: list of ``(start_t, length, (i, j))``."""
    out = []
    for t, ty in enumerate(types, 1):
        if out and out[-1][2] == ty:
            s, ln, _ = out[-1]
            out[-1] = (s, ln + 1, ty)
        else:
            out.append((t, 1, ty))
    return out
