"""Pure-Python/numpy twins of the compiled kernels in ``_kernels.pyx``.

Operation order matches the compiled versions so both backends agree
bitwise.
"""

import numpy as np


def _shifts(a):
    # up, down, left, right neighbour values at every site
    return (np.roll(a, 1, axis=0), np.roll(a, -1, axis=0),
            np.roll(a, 1, axis=1), np.roll(a, -1, axis=1))


def coop_neighbor_counts(grid):
    g = grid.astype(np.int64)
    up, dn, lf, rt = _shifts(g)
    return up + dn + lf + rt


def total_payoffs(grid, r):
    g = grid.astype(np.int64)
    up, dn, lf, rt = _shifts(g)
    nc = g + up + dn + lf + rt
    share = r * nc.astype(np.float64) / 5.0
    s_up, s_dn, s_lf, s_rt = _shifts(share)
    return (share + s_up + s_dn + s_lf + s_rt) - 5.0 * g.astype(np.float64)


def team_rewards(grid, r):
    n = coop_neighbor_counts(grid)
    team = (r / 5.0) * (n + 1).astype(np.float64) - 1.0
    return np.where(grid == 1, team, 0.0)


def fermi_apply(grid, payoffs, choice, u, K):
    L = grid.shape[0]
    ii, jj = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    di = np.array([-1, 1, 0, 0])[choice]
    dj = np.array([0, 0, -1, 1])[choice]
    ni = (ii + di) % L
    nj = (jj + dj) % L
    with np.errstate(over="ignore"):
        p = 1.0 / (1.0 + np.exp((payoffs - payoffs[ni, nj]) / K))
    return np.where(u < p, grid[ni, nj], grid).astype(np.int8)


def q_sequential_update(Q, sx, sn, act, reward, nx, nn, alpha, gamma):
    for k in range(len(sx)):
        a0 = Q[nx[k], nn[k], 0]
        a1 = Q[nx[k], nn[k], 1]
        best = a1 if a1 > a0 else a0
        target = reward[k] + gamma * best
        q = Q[sx[k], sn[k], act[k]]
        Q[sx[k], sn[k], act[k]] = q + alpha * (target - q)
