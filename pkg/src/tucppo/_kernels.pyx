# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lattice kernels.

Every routine here has a pure-Python twin in :mod:`tucppo._fallback` that
must produce bitwise-identical output; keep the floating point operation
order of both in sync.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def coop_neighbor_counts(const signed char[:, ::1] grid):
    cdef Py_ssize_t L = grid.shape[0]
    cdef Py_ssize_t i, j
    out = np.empty((L, L), dtype=np.int64)
    cdef long long[:, ::1] n = out
    for i in range(L):
        for j in range(L):
            n[i, j] = (grid[(i - 1 + L) % L, j] + grid[(i + 1) % L, j]
                       + grid[i, (j - 1 + L) % L] + grid[i, (j + 1) % L])
    return out


def total_payoffs(const signed char[:, ::1] grid, double r):
    cdef Py_ssize_t L = grid.shape[0]
    cdef Py_ssize_t i, j, up, dn, lf, rt
    share_arr = np.empty((L, L), dtype=np.float64)
    out = np.empty((L, L), dtype=np.float64)
    cdef double[:, ::1] share = share_arr
    cdef double[:, ::1] pay = out
    cdef long long nc
    for i in range(L):
        up = (i - 1 + L) % L
        dn = (i + 1) % L
        for j in range(L):
            lf = (j - 1 + L) % L
            rt = (j + 1) % L
            nc = grid[i, j] + grid[up, j] + grid[dn, j] + grid[i, lf] + grid[i, rt]
            share[i, j] = r * <double>nc / 5.0
    for i in range(L):
        up = (i - 1 + L) % L
        dn = (i + 1) % L
        for j in range(L):
            lf = (j - 1 + L) % L
            rt = (j + 1) % L
            pay[i, j] = (share[i, j] + share[up, j] + share[dn, j]
                         + share[i, lf] + share[i, rt]) - 5.0 * grid[i, j]
    return out


def team_rewards(const signed char[:, ::1] grid, double r):
    cdef Py_ssize_t L = grid.shape[0]
    cdef Py_ssize_t i, j
    cdef long long n
    out = np.zeros((L, L), dtype=np.float64)
    cdef double[:, ::1] team = out
    for i in range(L):
        for j in range(L):
            if grid[i, j]:
                n = (grid[(i - 1 + L) % L, j] + grid[(i + 1) % L, j]
                     + grid[i, (j - 1 + L) % L] + grid[i, (j + 1) % L])
                team[i, j] = (r / 5.0) * <double>(n + 1) - 1.0
    return out


def fermi_apply(const signed char[:, ::1] grid, const double[:, ::1] payoffs,
                const signed char[:, ::1] choice, const double[:, ::1] u,
                double K):
    """Synchronous imitation; ``choice`` is 0..3 for up, down, left, right."""
    cdef Py_ssize_t L = grid.shape[0]
    cdef Py_ssize_t i, j, ni, nj
    cdef double p
    out = np.empty((L, L), dtype=np.int8)
    cdef signed char[:, ::1] new = out
    for i in range(L):
        for j in range(L):
            ni = i
            nj = j
            if choice[i, j] == 0:
                ni = (i - 1 + L) % L
            elif choice[i, j] == 1:
                ni = (i + 1) % L
            elif choice[i, j] == 2:
                nj = (j - 1 + L) % L
            else:
                nj = (j + 1) % L
            p = 1.0 / (1.0 + exp((payoffs[i, j] - payoffs[ni, nj]) / K))
            if u[i, j] < p:
                new[i, j] = grid[ni, nj]
            else:
                new[i, j] = grid[i, j]
    return out


def q_sequential_update(double[:, :, ::1] Q,
                        const long long[::1] sx, const long long[::1] sn,
                        const long long[::1] act, const double[::1] reward,
                        const long long[::1] nx, const long long[::1] nn,
                        double alpha, double gamma):
    """In-place TD(0) updates applied one agent at a time, in index order."""
    cdef Py_ssize_t k
    cdef double best, target
    for k in range(sx.shape[0]):
        best = Q[nx[k], nn[k], 0]
        if Q[nx[k], nn[k], 1] > best:
            best = Q[nx[k], nn[k], 1]
        target = reward[k] + gamma * best
        Q[sx[k], sn[k], act[k]] = Q[sx[k], sn[k], act[k]] + alpha * (target - Q[sx[k], sn[k], act[k]])
