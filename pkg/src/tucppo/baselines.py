"""Non-TUC engines on the same lattice: Fermi imitation and tabular Q-learning.

Plain PPO lives in :mod:`tucppo.trainer` because it shares the whole update
path with the constrained variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, lattice
from .trainer import vanilla_ppo_epoch  # noqa: F401  re-exported for engine lookup


def fermi_probability(payoff_self: float, payoff_other: float, K: float = 0.5) -> float:
    """Probability of copying a neighbour, ``1 / (1 + exp((P_self - P_other) / K))``."""
    if K <= 0:
        raise ValueError(f"Fermi noise K must be positive, got {K}")
    x = (payoff_self - payoff_other) / K
    if x > 0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def fermi_step(grid: np.ndarray, r: float, K: float, rng: np.random.Generator) -> np.ndarray:
    """Synchronous Fermi imitation against one random von Neumann neighbour per agent.

    Draws, in order: the neighbour choice for every site, then one uniform per site.
    """
    if K <= 0:
        raise ValueError(f"Fermi noise K must be positive, got {K}")
    grid = lattice.check_grid(grid)
    L = grid.shape[0]
    payoffs = kernels.total_payoffs(grid, float(r))
    choice = rng.integers(0, 4, size=(L, L)).astype(np.int8)
    u = rng.random((L, L))
    return kernels.fermi_apply(grid, payoffs, choice, u, float(K))


@dataclass
class QTable:
    """Shared action values indexed ``[own strategy, cooperating neighbours, action]``."""

    alpha: float = 0.1
    gamma: float = 0.9
    eps: float = 0.02
    values: np.ndarray = field(default_factory=lambda: np.zeros((2, 5, 2)))

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (2, 5, 2):
            raise ValueError(f"Q table must have shape (2, 5, 2), got {self.values.shape}")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"exploration rate must lie in [0, 1], got {self.eps}")
        if not 0.0 < self.alpha <= 1.0 or not 0.0 <= self.gamma < 1.0:
            raise ValueError("need alpha in (0, 1] and gamma in [0, 1)")

    def copy(self) -> "QTable":
        return QTable(self.alpha, self.gamma, self.eps, self.values.copy())


def td_update(q: float, reward: float, next_max: float, alpha: float, gamma: float) -> float:
    return q + alpha * (reward + gamma * next_max - q)


def qlearning_step(grid: np.ndarray, qtable: QTable, r: float,
                   rng: np.random.Generator) -> np.ndarray:
    """One synchronous epsilon-greedy move of every agent, then per-agent TD updates.

    The table is updated in place, one agent at a time in row-major order.
    Greedy ties are broken uniformly at random. Draws, in order: exploration
    uniforms, random actions, tie-break bits (all of size L*L).
    """
    grid = lattice.check_grid(grid)
    N = grid.size
    sx = grid.ravel().astype(np.int64)
    sn = kernels.coop_neighbor_counts(grid).ravel()
    explore = rng.random(N) < qtable.eps
    random_act = rng.integers(0, 2, size=N)
    tie_act = rng.integers(0, 2, size=N)

    q = qtable.values[sx, sn]
    greedy = np.where(q[:, 1] > q[:, 0], 1, 0)
    greedy = np.where(q[:, 1] == q[:, 0], tie_act, greedy)
    act = np.where(explore, random_act, greedy).astype(np.int64)

    new_grid = act.astype(np.int8).reshape(grid.shape)
    reward = kernels.total_payoffs(new_grid, float(r)).ravel()
    nx = act
    nn_ = kernels.coop_neighbor_counts(new_grid).ravel()
    kernels.q_sequential_update(qtable.values, sx, sn, act, reward, nx, nn_,
                                float(qtable.alpha), float(qtable.gamma))
    return new_grid
