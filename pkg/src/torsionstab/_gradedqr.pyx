# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled graded QR kernel. Same contract as ``_gradedqr_py.graded_qr_logdiag``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, sqrt, INFINITY, isfinite

cnp.import_array()

cdef double MAX_EXP = 700.0


cdef inline void _normalize_row(double[:, ::1] M, double[::1] g, Py_ssize_t i,
                                Py_ssize_t c0, Py_ssize_t k) noexcept nogil:
    cdef double s = 0.0, a
    cdef Py_ssize_t c
    for c in range(c0, k):
        a = fabs(M[i, c])
        if a > s:
            s = a
    if s == 0.0 or not isfinite(g[i]):
        g[i] = -INFINITY
        for c in range(k):
            M[i, c] = 0.0
        return
    for c in range(c0, k):
        M[i, c] /= s
    g[i] += log(s)


cdef void _one(double[:, ::1] M, double[::1] g, double[::1] out,
               double[::1] h, double[::1] hc, double tol) noexcept nogil:
    cdef Py_ssize_t n = M.shape[0], k = M.shape[1]
    cdef Py_ssize_t i, j, c, p
    cdef double best, e, tmp, gj, scale, norm, hj, vj, beta, s, f, old, upd, new, a, d

    for i in range(n):
        _normalize_row(M, g, i, 0, k)
    for j in range(k):
        out[j] = -INFINITY
    for j in range(k):
        if j >= n:
            return
        p = -1
        best = -INFINITY
        for i in range(j, n):
            if M[i, j] != 0.0 and isfinite(g[i]):
                e = g[i] + log(fabs(M[i, j]))
                if e > best:
                    best = e
                    p = i
        if p < 0:
            return
        if p != j:
            for c in range(k):
                tmp = M[j, c]
                M[j, c] = M[p, c]
                M[p, c] = tmp
            tmp = g[j]
            g[j] = g[p]
            g[p] = tmp

        gj = g[j]
        hj = M[j, j]
        scale = fabs(hj)
        for i in range(j + 1, n):
            if isfinite(g[i]):
                d = g[i] - gj
                if d > MAX_EXP:
                    d = MAX_EXP
                h[i] = M[i, j] * exp(d)
                hc[i] = M[i, j] * exp(2.0 * d if 2.0 * d < MAX_EXP else MAX_EXP)
            else:
                h[i] = 0.0
                hc[i] = 0.0
            a = fabs(h[i])
            if a > scale:
                scale = a
        norm = (hj / scale) * (hj / scale)
        for i in range(j + 1, n):
            norm += (h[i] / scale) * (h[i] / scale)
        norm = scale * sqrt(norm)
        out[j] = gj + log(norm)

        vj = hj + norm if hj >= 0.0 else hj - norm
        beta = 2.0 / (2.0 * norm * (norm + fabs(hj)))
        for c in range(j + 1, k):
            s = vj * M[j, c]
            for i in range(j + 1, n):
                s += hc[i] * M[i, c]
            f = beta * s
            M[j, c] -= f * vj
            for i in range(j + 1, n):
                old = M[i, c]
                upd = f * M[i, j]
                new = old - upd
                if fabs(new) <= tol * (fabs(old) if fabs(old) > fabs(upd) else fabs(upd)):
                    new = 0.0
                M[i, c] = new
        for i in range(j + 1, n):
            M[i, j] = 0.0
            if j + 1 < k:
                _normalize_row(M, g, i, j + 1, k)


def graded_qr_logdiag(mantissa, grades, double tol=1e-12):
    """Log-magnitudes of the R diagonal for a batch of row-graded matrices."""
    cdef cnp.ndarray[cnp.float64_t, ndim=3] Mall = np.array(mantissa, dtype=np.float64, order="C", copy=True)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gall = np.array(grades, dtype=np.float64, order="C", copy=True)
    if Mall.shape[0] != gall.shape[0] or Mall.shape[1] != gall.shape[1]:
        raise ValueError("mantissa must be (B, n, k) and grades (B, n)")
    cdef Py_ssize_t B = Mall.shape[0], n = Mall.shape[1], k = Mall.shape[2]
    cdef Py_ssize_t b, j
    out_arr = np.full((B, k), -np.inf)
    cdef double[:, ::1] out = out_arr
    cdef double[:, :, ::1] Mv = Mall
    cdef double[:, ::1] gv = gall
    cdef double[::1] h = np.zeros(max(n, 1))
    cdef double[::1] hc = np.zeros(max(n, 1))
    cdef bint zero
    with nogil:
        for b in range(B):
            _one(Mv[b], gv[b], out[b], h, hc, tol)
            zero = False
            for j in range(k):
                if not isfinite(out[b, j]):
                    zero = True
                if zero:
                    out[b, j] = -INFINITY
    return out_arr
