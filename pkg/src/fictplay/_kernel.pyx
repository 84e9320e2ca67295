# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled round kernel.  Mirrors ``_kernel_py.run_rounds`` exactly."""

ctypedef fused num:
    long long
    double

cdef enum:
    FP = 0
    AFP = 1
    OFP = 2


cdef inline Py_ssize_t _argmin(num[::1] p, const long long[::1] rank, num tol,
                               Py_ssize_t n, bint* tie, num* lo) noexcept nogil:
    cdef Py_ssize_t a, best = -1, count = 0
    cdef num m = p[0]
    for a in range(1, n):
        if p[a] < m:
            m = p[a]
    cdef num thr = m + tol
    for a in range(n):
        if p[a] <= thr:
            count += 1
            if best < 0 or rank[a] < rank[best]:
                best = a
    tie[0] = count > 1
    lo[0] = m
    return best


cdef inline Py_ssize_t _argmax(num[::1] q, const long long[::1] rank, num tol,
                               Py_ssize_t n, bint* tie, num* hi) noexcept nogil:
    cdef Py_ssize_t a, best = -1, count = 0
    cdef num m = q[0]
    for a in range(1, n):
        if q[a] > m:
            m = q[a]
    cdef num thr = m - tol
    for a in range(n):
        if q[a] >= thr:
            count += 1
            if best < 0 or rank[a] < rank[best]:
                best = a
    tie[0] = count > 1
    hi[0] = m
    return best


def run_rounds(int kind, const num[:, ::1] A, num[::1] x, num[::1] y, num[::1] p, num[::1] q,
               const long long[::1] rank_x, const long long[::1] rank_y, num unit, num tol,
               Py_ssize_t rounds, Py_ssize_t prev_i, Py_ssize_t prev_j,
               int[::1] out_i, int[::1] out_j, num[::1] out_psi,
               unsigned char[::1] out_tx, unsigned char[::1] out_ty):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t r, k, i, j
    cdef bint tx, ty
    cdef num lo, hi
    with nogil:
        for r in range(rounds):
            i = _argmin(p, rank_x, tol, n, &tx, &lo)
            if kind == AFP:
                hi = q[0]
                for k in range(1, n):
                    if q[k] > hi:
                        hi = q[k]
                out_psi[r] = hi - lo
                x[i] += unit
                for k in range(n):
                    q[k] += unit * A[i, k]
                j = _argmax(q, rank_y, tol, n, &ty, &hi)
                y[j] += unit
                for k in range(n):
                    p[k] += unit * A[k, j]
            else:
                j = _argmax(q, rank_y, tol, n, &ty, &hi)
                out_psi[r] = hi - lo
                if kind == OFP and prev_i >= 0:
                    x[i] += 2 * unit
                    x[prev_i] -= unit
                    y[j] += 2 * unit
                    y[prev_j] -= unit
                    for k in range(n):
                        q[k] += unit * (2 * A[i, k] - A[prev_i, k])
                        p[k] += unit * (2 * A[k, j] - A[k, prev_j])
                else:
                    x[i] += unit
                    y[j] += unit
                    for k in range(n):
                        q[k] += unit * A[i, k]
                        p[k] += unit * A[k, j]
                if kind == OFP:
                    prev_i = i
                    prev_j = j
            out_i[r] = <int>i
            out_j[r] = <int>j
            out_tx[r] = tx
            out_ty[r] = ty
    return prev_i, prev_j
