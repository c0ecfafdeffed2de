"""Team utility-constrained PPO on the public goods lattice.

One epoch samples a joint action from the shared policy, scores the
resulting strategy profile with both the individual payoff and the team
utility, blends them with an adaptive weight, raises the Lagrange multiplier
when mean team utility falls short of the threshold, and takes one Adam step
on the combined loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import lattice, nn


@dataclass(frozen=True)
class TrainConfig:
    r: float = 3.3
    lr: float = 1e-4
    gamma: float = 0.99
    lam: float = 0.95
    eps_clip: float = 0.2
    delta: float = 0.5
    rho: float = 0.01
    tau: float = 0.5
    zeta: float = 0.01
    rollout_len: int = 1
    inner_epochs: int = 1
    lr_step: int = 1000
    # None -> adaptive weight from the cumulative reward ratio
    fixed_weight: float | None = None

    def __post_init__(self):
        if not self.r >= 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if not 0 < self.gamma <= 1 or not 0 <= self.lam <= 1:
            raise ValueError("gamma must lie in (0, 1] and lam in [0, 1]")
        if self.eps_clip <= 0:
            raise ValueError("eps_clip must be positive")
        if self.zeta < 0:
            raise ValueError("zeta must be non-negative")
        if self.rollout_len < 1 or self.inner_epochs < 1 or self.lr_step < 1:
            raise ValueError("rollout_len, inner_epochs and lr_step must be >= 1")
        if self.fixed_weight is not None and not 0 <= self.fixed_weight <= 1:
            raise ValueError("fixed_weight must lie in [0, 1]")


@dataclass
class DualState:
    eta: float = 0.0
    tau: float = 0.5
    zeta: float = 0.01
    cum_team: float = 0.0
    cum_ind: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.eta, self.tau, self.zeta, self.cum_team, self.cum_ind])

    @classmethod
    def from_array(cls, a) -> "DualState":
        return cls(*(float(x) for x in a))


@dataclass
class RolloutBuffer:
    """Arrays indexed ``[t, agent]``; ``values`` carries one extra bootstrap row."""

    obs: np.ndarray        # (T, N, 3)
    actions: np.ndarray    # (T, N) int
    log_probs: np.ndarray  # (T, N) under the behaviour policy
    values: np.ndarray     # (T + 1, N)
    r_ind: np.ndarray      # (T, N)
    r_team: np.ndarray     # (T, N)
    done: np.ndarray       # (T, N) 0/1

    def __post_init__(self):
        T, N = self.actions.shape
        shapes = {"log_probs": (T, N), "r_ind": (T, N), "r_team": (T, N),
                  "done": (T, N), "values": (T + 1, N), "obs": (T, N, nn.N_IN)}
        for name, shape in shapes.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"buffer field {name} has shape "
                                 f"{getattr(self, name).shape}, expected {shape}")

    def unique_obs(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct observation rows and the row -> unique index map (cached)."""
        if getattr(self, "_unique", None) is None:
            self._unique = nn.unique_rows(self.obs.reshape(-1, nn.N_IN))
        return self._unique

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    @property
    def size(self) -> int:
        return self.actions.size


@dataclass
class LossReport:
    L_clip: float
    L_vf: float
    L_ent: float
    L_cv: float
    L_tuc: float
    mean_team_reward: float
    w_t: float
    eta: float = 0.0
    coop_fraction: float = float("nan")
    mean_payoff: float = float("nan")


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def composite_reward(r_ind, r_team, w: float):
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"reward weight must lie in [0, 1], got {w}")
    return (1.0 - w) * r_ind + w * r_team


def accumulate(dual: DualState, r_ind, r_team) -> None:
    dual.cum_team += float(np.sum(r_team))
    dual.cum_ind += float(np.sum(r_ind))


def adaptive_weight(dual: DualState) -> float:
    return sigmoid(dual.cum_team / (dual.cum_ind + 1e-8))


def constraint_violation(buffer: RolloutBuffer, tau: float) -> float:
    if buffer.size == 0:
        raise ValueError("empty rollout buffer")
    return max(0.0, tau - float(np.mean(buffer.r_team)))


def dual_update(dual: DualState, violation: float) -> DualState:
    """Dual ascent ``eta += zeta * violation``, in place; returns ``dual``."""
    if violation < 0:
        raise ValueError(f"constraint violation must be non-negative, got {violation}")
    dual.eta = max(0.0, dual.eta + dual.zeta * violation)
    return dual


def gae_advantages(buffer: RolloutBuffer, w: float, gamma: float, lam: float) -> np.ndarray:
    """(gamma*lam)-discounted sum of TD errors of the blended reward; a done flag cuts the sum."""
    rew = composite_reward(buffer.r_ind, buffer.r_team, w)
    live = 1.0 - buffer.done
    adv = np.zeros_like(rew)
    running = np.zeros(rew.shape[1])
    for t in reversed(range(buffer.horizon)):
        td = rew[t] + gamma * live[t] * buffer.values[t + 1] - buffer.values[t]
        running = td + gamma * lam * live[t] * running
        adv[t] = running
    return adv


def returns_recursive(buffer: RolloutBuffer, w: float, gamma: float) -> np.ndarray:
    """``R_t = gamma * (c_t + (1 - done_t) * R_{t+1})``; note the discount on the immediate term."""
    rew = composite_reward(buffer.r_ind, buffer.r_team, w)
    live = 1.0 - buffer.done
    ret = np.zeros_like(rew)
    nxt = np.zeros(rew.shape[1])
    for t in reversed(range(buffer.horizon)):
        nxt = gamma * (rew[t] + live[t] * nxt)
        ret[t] = nxt
    return ret


def clip_loss(buffer: RolloutBuffer, advantages, new_log_probs, eps_clip: float) -> float:
    ratio = np.exp(np.asarray(new_log_probs) - buffer.log_probs).ravel()
    adv = np.asarray(advantages).ravel()
    surr = np.minimum(ratio * adv, np.clip(ratio, 1.0 - eps_clip, 1.0 + eps_clip) * adv)
    return -float(np.mean(surr))


def value_loss(values, returns) -> float:
    diff = np.asarray(values, dtype=np.float64) - np.asarray(returns, dtype=np.float64)
    return float(np.mean(diff * diff))


def entropy_bonus(action_probs) -> float:
    p = np.atleast_2d(np.asarray(action_probs, dtype=np.float64))
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return float(np.mean(-plogp.sum(axis=1)))


def tuc_loss(params: nn.PolicyParams, buffer: RolloutBuffer, advantages, returns,
             eta: float, violation: float, cfg: TrainConfig, with_grad: bool = True):
    """Combined loss and its exact gradient.

    Returns ``(terms, grads)`` where ``terms`` holds the four components and
    their sum. The penalty ``eta * violation`` is built from sampled team
    rewards and therefore carries no gradient. ``with_grad=False`` skips the
    backward pass and returns ``(terms, None)``.
    """
    actions = buffer.actions.ravel()
    old_logp = buffer.log_probs.ravel()
    adv = np.asarray(advantages, dtype=np.float64).ravel()
    ret = np.asarray(returns, dtype=np.float64).ravel()
    n = actions.size
    rows = np.arange(n)

    # the lattice only produces a handful of distinct observations per step,
    # so the net runs on unique rows and per-row seeds are summed back onto them
    uniq, inv = buffer.unique_obs()
    tr_u = nn.forward(params, uniq)
    log_probs = tr_u.log_probs[inv]
    probs = tr_u.probs[inv]
    value = tr_u.value[inv]
    new_logp = log_probs[rows, actions]
    ratio = np.exp(new_logp - old_logp)
    surr1 = ratio * adv
    surr2 = np.clip(ratio, 1.0 - cfg.eps_clip, 1.0 + cfg.eps_clip) * adv
    l_clip = -float(np.mean(np.minimum(surr1, surr2)))
    diff = value - ret
    l_vf = float(np.mean(diff * diff))
    row_ent = -(probs * log_probs).sum(axis=1)
    l_ent = float(np.mean(row_ent))
    l_tuc = l_clip + cfg.delta * l_vf - cfg.rho * l_ent + eta * violation
    terms = {"L_clip": l_clip, "L_vf": l_vf, "L_ent": l_ent, "L_cv": violation, "L_tuc": l_tuc}
    if not with_grad:
        return terms, None

    # d(new_logp)/d(logits) = onehot(a) - p; the clipped branch passes no gradient
    d_logp = -np.where(surr1 <= surr2, surr1, 0.0) / n
    onehot = np.zeros_like(probs)
    onehot[rows, actions] = 1.0
    d_logits = d_logp[:, None] * (onehot - probs)
    d_ent = -probs * (log_probs + row_ent[:, None])
    d_logits -= (cfg.rho / n) * d_ent
    d_value = cfg.delta * 2.0 * diff / n
    u = uniq.shape[0]
    d_logits_u = np.stack([np.bincount(inv, weights=d_logits[:, k], minlength=u)
                           for k in range(nn.N_ACTIONS)], axis=1)
    d_value_u = np.bincount(inv, weights=d_value, minlength=u)
    return terms, nn.backward(tr_u, d_logits_u, d_value_u)


@dataclass
class TrainerState:
    grid: np.ndarray
    params: nn.PolicyParams
    adam: nn.AdamState
    dual: DualState
    rng: np.random.Generator
    iteration: int = 0

    @classmethod
    def create(cls, L: int, cfg: TrainConfig, seed=0,
               init: lattice.InitScheme | str = "half_half") -> "TrainerState":
        """Seeded start state; the grid draws from the stream before the network weights."""
        rng = np.random.default_rng(seed)
        grid = lattice.init_grid(L, init, rng)
        params = nn.PolicyParams.init(rng)
        return cls(grid, params, nn.AdamState.fresh(cfg.lr),
                   DualState(tau=cfg.tau, zeta=cfg.zeta), rng)


def collect_rollout(state: TrainerState, cfg: TrainConfig) -> RolloutBuffer:
    """Run ``rollout_len`` synchronous steps under the current policy; the last step is terminal."""
    L = state.grid.shape[0]
    N = L * L
    T = cfg.rollout_len
    obs = np.empty((T, N, nn.N_IN))
    actions = np.empty((T, N), dtype=np.int64)
    logp = np.empty((T, N))
    values = np.zeros((T + 1, N))
    r_ind = np.empty((T, N))
    r_team = np.empty((T, N))
    done = np.zeros((T, N))
    done[-1] = 1.0
    grid = state.grid
    for t in range(T):
        obs[t] = lattice.encode_observations(grid).reshape(N, nn.N_IN)
        uniq, inv = nn.unique_rows(obs[t])
        tr = nn.forward(state.params, uniq)
        u = state.rng.random(N)
        act = (u < tr.probs[inv, lattice.COOPERATE]).astype(np.int64)
        actions[t] = act
        logp[t] = tr.log_probs[inv, act]
        values[t] = tr.value[inv]
        grid = act.astype(np.int8).reshape(L, L)
        r_ind[t] = lattice.total_payoffs(grid, cfg.r).ravel()
        r_team[t] = lattice.team_rewards(grid, cfg.r).ravel()
    state.grid = grid
    return RolloutBuffer(obs, actions, logp, values, r_ind, r_team, done)


def train_epoch(state: TrainerState, cfg: TrainConfig) -> LossReport:
    """One collect-and-update epoch; mutates ``state`` and returns the pre-update losses."""
    buf = collect_rollout(state, cfg)
    dual = state.dual
    accumulate(dual, buf.r_ind, buf.r_team)
    w = cfg.fixed_weight if cfg.fixed_weight is not None else adaptive_weight(dual)
    violation = constraint_violation(buf, dual.tau)
    adv = gae_advantages(buf, w, cfg.gamma, cfg.lam)
    ret = returns_recursive(buf, w, cfg.gamma)
    dual_update(dual, violation)
    lr = nn.effective_lr(state.adam.base_lr, state.iteration, cfg.lr_step)
    terms = None
    for _ in range(cfg.inner_epochs):
        t, grads = tuc_loss(state.params, buf, adv, ret, dual.eta, violation, cfg)
        terms = terms or t
        nn.adam_step(state.params, grads, state.adam, lr)
    state.iteration += 1
    return LossReport(**terms, mean_team_reward=float(np.mean(buf.r_team)), w_t=w,
                      eta=dual.eta, coop_fraction=lattice.cooperation_fraction(state.grid),
                      mean_payoff=float(np.mean(buf.r_ind[-1])))


def vanilla_ppo_config(cfg: TrainConfig) -> TrainConfig:
    return replace(cfg, zeta=0.0, fixed_weight=0.0)


def vanilla_ppo_epoch(state: TrainerState, cfg: TrainConfig) -> LossReport:
    """Plain PPO: individual reward only and a multiplier frozen at zero."""
    state.dual.zeta = 0.0
    state.dual.eta = 0.0
    return train_epoch(state, vanilla_ppo_config(cfg))
