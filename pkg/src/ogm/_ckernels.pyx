# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror :mod:`ogm._pykernels`."""
import numpy as np
cimport numpy as cnp

ctypedef unsigned long long u64

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def cover_matrix(const u64[::1] tx, const u64[::1] tz, const u64[::1] bx, const u64[::1] bz):
    cdef Py_ssize_t m = tx.shape[0], s = bx.shape[0], j, k
    out = np.zeros((m, s), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] o = out
    cdef u64 supp
    with nogil:
        for j in range(m):
            supp = tx[j] | tz[j]
            for k in range(s):
                if (((tx[j] ^ bx[k]) | (tz[j] ^ bz[k])) & supp) == 0:
                    o[j, k] = 1
    return out


def parity_sums(const u64[::1] outcomes, const cnp.int64_t[::1] counts, const u64[::1] supps):
    cdef Py_ssize_t K = outcomes.shape[0], m = supps.shape[0], i, j
    out = np.zeros(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef cnp.int64_t acc
    with nogil:
        for j in range(m):
            acc = 0
            for i in range(K):
                if __builtin_popcountll(outcomes[i] & supps[j]) & 1:
                    acc -= counts[i]
                else:
                    acc += counts[i]
            o[j] = <double>acc
    return out


cdef inline double complex _iphase(int ny) nogil:
    ny = ny & 3
    if ny == 0:
        return 1.0
    elif ny == 1:
        return 1j
    elif ny == 2:
        return -1.0
    return -1j


def pauli_expectation(const double complex[::1] psi, u64 x, u64 z):
    cdef Py_ssize_t D = psi.shape[0]
    cdef u64 k
    cdef double complex acc = 0
    cdef double complex a, b
    with nogil:
        for k in range(<u64>D):
            a = psi[<Py_ssize_t>(k ^ x)]
            b = psi[<Py_ssize_t>k]
            if __builtin_popcountll(k & z) & 1:
                acc -= a.conjugate() * b
            else:
                acc += a.conjugate() * b
        acc = acc * _iphase(__builtin_popcountll(x & z))
    return acc


def apply_pauli_sum(const double complex[::1] psi, const u64[::1] xs, const u64[::1] zs,
                    const double[::1] coeffs):
    cdef Py_ssize_t D = psi.shape[0], m = xs.shape[0], j
    cdef u64 k
    out = np.zeros(D, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef double complex c
    cdef u64 x, z
    with nogil:
        for j in range(m):
            x = xs[j]
            z = zs[j]
            c = coeffs[j] * _iphase(__builtin_popcountll(x & z))
            for k in range(<u64>D):
                if __builtin_popcountll(k & z) & 1:
                    o[<Py_ssize_t>(k ^ x)] -= c * psi[<Py_ssize_t>k]
                else:
                    o[<Py_ssize_t>(k ^ x)] += c * psi[<Py_ssize_t>k]
    return out
