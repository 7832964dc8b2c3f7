# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled branch-and-lift step for the counting oracle."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF MAXVARS = 8
DEF MAXDEG = 64


def expand_level(cnp.int64_t[:, ::1] pts, long long p, long long pl, long long mod,
                 cnp.int64_t[:, ::1] exps, cnp.int64_t[::1] coeffs):
    """Return the lifts r + pl*d (d in [0,p)^n) of the rows r of ``pts`` on
    which the polynomial vanishes modulo ``mod``.  Requires mod < 2**31."""
    cdef Py_ssize_t npts = pts.shape[0]
    cdef Py_ssize_t n = pts.shape[1]
    cdef Py_ssize_t nt = exps.shape[0]
    cdef Py_ssize_t ndig = 1
    cdef Py_ssize_t i, r, k, t, kk, m = 0
    cdef long long val, term, xi
    cdef long long x[MAXVARS]
    cdef long long pw[MAXVARS][MAXDEG + 1]
    cdef int maxdeg = 0
    if n > MAXVARS:
        raise ValueError("too many variables for the compiled kernel")
    for t in range(nt):
        for i in range(n):
            if exps[t, i] > maxdeg:
                maxdeg = exps[t, i]
    if maxdeg > MAXDEG:
        raise ValueError("degree too large for the compiled kernel")
    for i in range(n):
        ndig *= p
    out = np.empty((npts * ndig, n), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    for r in range(npts):
        for k in range(ndig):
            kk = k
            for i in range(n):
                xi = (pts[r, i] + pl * (kk % p)) % mod
                kk //= p
                x[i] = xi
                pw[i][0] = 1
                for t in range(1, maxdeg + 1):
                    pw[i][t] = pw[i][t - 1] * xi % mod
            val = 0
            for t in range(nt):
                term = coeffs[t]
                for i in range(n):
                    if exps[t, i]:
                        term = term * pw[i][exps[t, i]] % mod
                val = (val + term) % mod
            if val == 0:
                kk = k
                for i in range(n):
                    o[m, i] = pts[r, i] + pl * (kk % p)
                    kk //= p
                m += 1
    return out[:m]
