"""Pure-Python round kernel; same contract as the compiled ``_kernel``.

``run_rounds`` advances an FP/AFP/OFP state in place for ``rounds`` rounds
and fills the per-round output buffers.  Exact mode passes int64 arrays
(scaled so all data is integral) and ``tol=0``; float mode passes float64.
"""

FP, AFP, OFP = 0, 1, 2


def _argmin(p, rank, tol):
    lo = min(p)
    thr = lo + tol
    best = -1
    count = 0
    for a, v in enumerate(p):
        if v <= thr:
            count += 1
            if best < 0 or rank[a] < rank[best]:
                best = a
    return best, count > 1, lo


def _argmax(q, rank, tol):
    hi = max(q)
    thr = hi - tol
    best = -1
    count = 0
    for a, v in enumerate(q):
        if v >= thr:
            count += 1
            if best < 0 or rank[a] < rank[best]:
                best = a
    return best, count > 1, hi


def run_rounds(kind, A, x, y, p, q, rank_x, rank_y, unit, tol, rounds,
               prev_i, prev_j, out_i, out_j, out_psi, out_tx, out_ty):
    n = len(p)
    conv = int if A.dtype.kind == "i" else float
    rows = [[conv(v) for v in r] for r in A]
    cols = [list(c) for c in zip(*rows)]
    xs, ys, ps, qs = (
        [conv(v) for v in x], [conv(v) for v in y], [conv(v) for v in p], [conv(v) for v in q]
    )
    rx, ry = [int(v) for v in rank_x], [int(v) for v in rank_y]
    unit = conv(unit)
    tol = conv(tol)
    rng = range(n)

    for r in range(rounds):
        i, tx, lo = _argmin(ps, rx, tol)
        if kind == AFP:
            hi = max(qs)
            out_psi[r] = hi - lo
            xs[i] += unit
            row = rows[i]
            for k in rng:
                qs[k] += unit * row[k]
            j, ty, _ = _argmax(qs, ry, tol)
            ys[j] += unit
            col = cols[j]
            for k in rng:
                ps[k] += unit * col[k]
        else:
            j, ty, hi = _argmax(qs, ry, tol)
            out_psi[r] = hi - lo
            if kind == OFP and prev_i >= 0:
                xs[i] += 2 * unit
                xs[prev_i] -= unit
                ys[j] += 2 * unit
                ys[prev_j] -= unit
                row, prow = rows[i], rows[prev_i]
                col, pcol = cols[j], cols[prev_j]
                for k in rng:
                    qs[k] += unit * (2 * row[k] - prow[k])
                    ps[k] += unit * (2 * col[k] - pcol[k])
            else:
                xs[i] += unit
                ys[j] += unit
                row, col = rows[i], cols[j]
                for k in rng:
                    qs[k] += unit * row[k]
                    ps[k] += unit * col[k]
            if kind == OFP:
                prev_i, prev_j = i, j
        out_i[r] = i
        out_j[r] = j
        out_tx[r] = tx
        out_ty[r] = ty

    x[:] = xs
    y[:] = ys
    p[:] = ps
    q[:] = qs
    return prev_i, prev_j
