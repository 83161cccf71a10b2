# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see _pykernels for the reference semantics."""
import numpy as np


def tv_dual_sorted(const double[:, ::1] P, const long[::1] order, const double[::1] v, double sigma):
    cdef Py_ssize_t m = P.shape[0], S = P.shape[1]
    cdef Py_ssize_t r, j
    cdef double[::1] tail = np.empty(S)
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    cdef double acc, best, obj, vmin = v[0]
    for r in range(m):
        acc = 0.0
        tail[S - 1] = 0.0
        for j in range(S - 1, 0, -1):
            acc += P[r, order[j]]
            tail[j - 1] = acc
        acc = 0.0
        best = -1e308
        for j in range(S):
            acc += P[r, order[j]] * v[j]
            obj = acc + v[j] * tail[j] - sigma * (v[j] - vmin)
            if obj > best:
                best = obj
        out[r] = best
    return out_arr


cdef inline Py_ssize_t _inv_cdf(const double[:] c, Py_ssize_t length, double u) nogil:
    cdef Py_ssize_t x = 0
    while x < length and c[x] <= u:
        x += 1
    return x


def sample_cells(const double[:, :, :, ::1] U, const double[:, :, ::1] pol_cdf,
                 const long[::1] actions, Py_ssize_t i, const double[:, :, ::1] ker_cdf):
    cdef Py_ssize_t S = U.shape[0], A_i = U.shape[1], N = U.shape[2]
    cdef Py_ssize_t n = actions.shape[0], J = ker_cdf.shape[1]
    cdef Py_ssize_t s, a, t, j, aj, joint, nxt
    next_arr = np.zeros((S, A_i, S), dtype=np.int64)
    joint_arr = np.zeros((S, A_i, J), dtype=np.int64)
    cdef long long[:, :, ::1] next_counts = next_arr
    cdef long long[:, :, ::1] joint_counts = joint_arr
    with nogil:
        for s in range(S):
            for a in range(A_i):
                for t in range(N):
                    joint = 0
                    for j in range(n):
                        if j == i:
                            aj = a
                        else:
                            aj = _inv_cdf(pol_cdf[j, s, :], actions[j], U[s, a, t, j])
                        joint = joint * actions[j] + aj
                    nxt = _inv_cdf(ker_cdf[s, joint, :], S, U[s, a, t, n])
                    next_counts[s, a, nxt] += 1
                    joint_counts[s, a, joint] += 1
    return next_arr, joint_arr
