"""Periodic L x L public goods lattice.

Strategies are stored as ``int8`` with 1 = cooperate and 0 = defect. Every
agent sits in five overlapping groups (its own and those centred on its four
von Neumann neighbours); a cooperator pays 1 into each of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

COOPERATE = 1
DEFECT = 0
K_NEIGHBORS = 4
GROUP_SIZE = K_NEIGHBORS + 1

# (di, dj) of the von Neumann neighbourhood, in kernel order: up, down, left, right
NEIGHBOR_OFFSETS = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass(frozen=True)
class InitScheme:
    """Initial strategy layout: ``half_half``, ``bernoulli``, ``all_defect`` or ``all_cooperate``."""

    kind: str = "half_half"
    p: float = 0.5

    KINDS = ("half_half", "bernoulli", "all_defect", "all_cooperate")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown init scheme {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"bernoulli p must lie in [0, 1], got {self.p}")


def init_grid(L: int, scheme: InitScheme | str = "half_half",
              rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Build the initial strategy grid.

    ``half_half`` puts defectors in rows ``[0, L//2)`` and cooperators below.
    Only ``bernoulli`` consumes randomness (one uniform per cell, row-major).
    """
    if isinstance(scheme, str):
        scheme = InitScheme(scheme)
    if int(L) != L or L < 2:
        raise ValueError(f"lattice side must be an integer >= 2, got {L}")
    L = int(L)
    if scheme.kind == "all_defect":
        return np.zeros((L, L), dtype=np.int8)
    if scheme.kind == "all_cooperate":
        return np.ones((L, L), dtype=np.int8)
    if scheme.kind == "half_half":
        grid = np.zeros((L, L), dtype=np.int8)
        grid[L // 2:, :] = COOPERATE
        return grid
    rng = np.random.default_rng(rng)
    return (rng.random((L, L)) < scheme.p).astype(np.int8)


def check_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1] or grid.shape[0] < 2:
        raise ValueError(f"grid must be square with side >= 2, got shape {grid.shape}")
    if not np.isin(grid, (0, 1)).all():
        raise ValueError("grid cells must be 0 (defect) or 1 (cooperate)")
    return np.ascontiguousarray(grid, dtype=np.int8)


def group_payoff(strategy: int, n_coop: int, r: float, k: int = K_NEIGHBORS) -> float:
    """Payoff of one member of a single group holding ``n_coop`` cooperators."""
    if k != K_NEIGHBORS:
        raise ValueError(f"only the von Neumann neighbourhood (k=4) is supported, got k={k}")
    if strategy not in (COOPERATE, DEFECT):
        raise ValueError(f"strategy must be 0 or 1, got {strategy}")
    if not 0 <= n_coop <= k + 1:
        raise ValueError(f"n_coop must lie in [0, {k + 1}], got {n_coop}")
    if strategy == COOPERATE and n_coop < 1:
        raise ValueError("a cooperating member implies n_coop >= 1")
    if strategy == DEFECT and n_coop > k:
        raise ValueError(f"a defecting member implies n_coop <= {k}")
    if r <= 1:
        raise ValueError(f"enhancement factor must exceed 1, got {r}")
    share = r * n_coop / (k + 1)
    return share - 1.0 if strategy == COOPERATE else share


def coop_neighbor_counts(grid: np.ndarray) -> np.ndarray:
    return kernels.coop_neighbor_counts(check_grid(grid))


def group_cooperators(grid: np.ndarray) -> np.ndarray:
    """Cooperator count of the group centred on each site."""
    grid = check_grid(grid)
    return kernels.coop_neighbor_counts(grid) + grid


def total_payoffs(grid: np.ndarray, r: float) -> np.ndarray:
    """Accumulated payoff of every agent over its five groups."""
    return kernels.total_payoffs(check_grid(grid), float(r))


def team_rewards(grid: np.ndarray, r: float) -> np.ndarray:
    """Team utility of every agent: local pool return minus cost for cooperators, 0 for defectors."""
    return kernels.team_rewards(check_grid(grid), float(r))


def team_reward(grid: np.ndarray, agent: tuple[int, int], r: float) -> float:
    grid = check_grid(grid)
    L = grid.shape[0]
    i, j = agent
    if not (0 <= i < L and 0 <= j < L):
        raise IndexError(f"agent {agent} outside {L}x{L} lattice")
    if grid[i, j] != COOPERATE:
        return 0.0
    n = sum(int(grid[(i + di) % L, (j + dj) % L]) for di, dj in NEIGHBOR_OFFSETS)
    return (r / GROUP_SIZE) * (n + 1) - 1.0


def cooperation_fraction(grid: np.ndarray) -> float:
    return int(np.count_nonzero(grid)) / grid.size


def encode_observations(grid: np.ndarray) -> np.ndarray:
    """Per-agent policy input, shape ``(L, L, 3)``.

    Channels are own strategy, number of cooperating neighbours (0..4) and
    the global cooperation rate, which is the same for every agent.
    """
    grid = check_grid(grid)
    L = grid.shape[0]
    obs = np.empty((L, L, 3), dtype=np.float64)
    obs[..., 0] = grid
    obs[..., 1] = kernels.coop_neighbor_counts(grid)
    obs[..., 2] = int(np.count_nonzero(grid)) / (L * L)
    return obs
