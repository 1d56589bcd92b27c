# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled assembly kernels.

Arithmetic mirrors the scalar element functions in ``moire_spectra.models``
operation by operation, so both routes agree to the last bit on platforms
where the C library ``exp`` is the one Python's ``math.exp`` calls.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, ceil, floor

cnp.import_array()


def reduced_coupling_matrix(const cnp.int64_t[::1] ns, double theta, double b,
                            double A, double B, double Lz, double radius):
    cdef Py_ssize_t N = ns.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((N, N), dtype=np.float64)
    cdef double[:, ::1] M = out
    cdef double c = 1.0 - theta
    cdef double Lz2 = Lz * Lz
    cdef Py_ssize_t r, s
    cdef long long n, m, lo_site, hi_site, lo, hi, k
    cdef double total, p, e1, e2
    if A == 0.0:
        return out
    with nogil:
        for r in range(N):
            for s in range(r, N):
                n = ns[r]
                m = ns[s]
                if n <= m:
                    lo_site = n
                    hi_site = m
                else:
                    lo_site = m
                    hi_site = n
                lo = <long long>ceil((hi_site - radius - b) / c)
                hi = <long long>floor((lo_site + radius - b) / c)
                total = 0.0
                k = lo
                while k <= hi:
                    p = c * k
                    e1 = (n - p) - b
                    e2 = (m - p) - b
                    total += (A * exp(-B * sqrt(e1 * e1 + Lz2))) * (A * exp(-B * sqrt(e2 * e2 + Lz2)))
                    k += 1
                M[r, s] = total
                M[s, r] = total
    return out


def interlayer_block(const cnp.int64_t[::1] n1s, const cnp.int64_t[::1] n2s,
                     double theta, double b, double A, double B, double Lz):
    cdef Py_ssize_t N1 = n1s.shape[0], N2 = n2s.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((N1, N2), dtype=np.float64)
    cdef double[:, ::1] M = out
    cdef double c = 1.0 - theta
    cdef double Lz2 = Lz * Lz
    cdef double eta
    cdef Py_ssize_t r, s
    with nogil:
        for r in range(N1):
            for s in range(N2):
                eta = (n1s[r] - c * n2s[s]) - b
                M[r, s] = A * exp(-B * sqrt(eta * eta + Lz2))
    return out
