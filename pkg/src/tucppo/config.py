"""Experiment configuration: a flat JSON object, validated key by key.

Unknown keys, wrong types and out-of-range values are all reported at once
with the offending key named in each message.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .lattice import InitScheme
from .trainer import TrainConfig

ALGORITHMS = ("tucppo", "ppo", "qlearning", "fermi")
PPO_ITERATIONS = 1000
BASELINE_ITERATIONS = 10 * PPO_ITERATIONS


class ConfigError(ValueError):
    def __init__(self, diagnostics: list[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass
class ExperimentConfig:
    algorithm: str = "tucppo"
    L: int = 200
    r: float = 3.3
    # {"start": .., "stop": .., "step": ..}; overrides r for sweeps
    r_range: dict | None = None
    iterations: int | None = None
    seed: int = 0
    seeds: int | list[int] = 50
    init: str = "half_half"
    init_p: float = 0.5
    snapshots: list[int] | None = None
    alpha: float = 1e-4
    gamma: float = 0.99
    lam: float = 0.95
    eps_clip: float = 0.2
    delta: float = 0.5
    rho: float = 0.01
    rho_values: list[float] | None = None
    tau: float = 0.5
    zeta: float = 0.01
    rollout_len: int = 1
    inner_epochs: int = 1
    lr_step: int = 1000
    w_fixed: float | None = None
    K: float = 0.5
    alpha_q: float = 0.1
    gamma_q: float = 0.9
    eps_q: float = 0.02
    out: str = "out"

    @property
    def n_iterations(self) -> int:
        if self.iterations is not None:
            return self.iterations
        return PPO_ITERATIONS if self.algorithm in ("tucppo", "ppo") else BASELINE_ITERATIONS

    @property
    def snapshot_schedule(self) -> list[int]:
        if self.snapshots is not None:
            return sorted(set(self.snapshots))
        if self.algorithm in ("tucppo", "ppo"):
            return [0, 1, 10, 100, 1000]
        return [0, 10, 100, 1000, 10000]

    @property
    def seed_list(self) -> list[int]:
        if isinstance(self.seeds, list):
            return list(self.seeds)
        return list(range(self.seeds))

    @property
    def init_scheme(self) -> InitScheme:
        return InitScheme(self.init, self.init_p)

    def r_grid(self) -> list[float]:
        if self.r_range is None:
            return [self.r]
        start, stop, step = (float(self.r_range[k]) for k in ("start", "stop", "step"))
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]

    def train_config(self, r: float | None = None, rho: float | None = None) -> TrainConfig:
        return TrainConfig(
            r=self.r if r is None else r, lr=self.alpha, gamma=self.gamma, lam=self.lam,
            eps_clip=self.eps_clip, delta=self.delta, rho=self.rho if rho is None else rho,
            tau=self.tau, zeta=self.zeta, rollout_len=self.rollout_len,
            inner_epochs=self.inner_epochs, lr_step=self.lr_step, fixed_weight=self.w_fixed)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


PRESETS = {
    "desk": {"L": 50, "seeds": 10, "r_range": {"start": 3.0, "stop": 4.2, "step": 0.1}},
}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _check_range(errs, key, v, lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
    if integer and not _is_int(v):
        errs.append(f"{key}: expected an integer, got {v!r}")
        return
    if not _is_num(v):
        errs.append(f"{key}: expected a finite number, got {v!r}")
        return
    if lo is not None and (v <= lo if lo_open else v < lo):
        errs.append(f"{key}: must be {'>' if lo_open else '>='} {lo}, got {v!r}")
    if hi is not None and (v >= hi if hi_open else v > hi):
        errs.append(f"{key}: must be {'<' if hi_open else '<='} {hi}, got {v!r}")


def validate_dict(raw: dict) -> ExperimentConfig:
    """Range-check a raw mapping and materialize defaults for missing keys."""
    if not isinstance(raw, dict):
        raise ConfigError([f"config: expected a JSON object, got {type(raw).__name__}"])
    errs: list[str] = []
    known = {f.name for f in fields(ExperimentConfig)}
    for key in raw:
        if key not in known:
            errs.append(f"{key}: unknown key")
    v = {k: raw[k] for k in raw if k in known}

    if "algorithm" in v and v["algorithm"] not in ALGORITHMS:
        errs.append(f"algorithm: must be one of {', '.join(ALGORITHMS)}, got {v['algorithm']!r}")
    if "init" in v and v["init"] not in InitScheme.KINDS:
        errs.append(f"init: must be one of {', '.join(InitScheme.KINDS)}, got {v['init']!r}")
    if "out" in v and not isinstance(v["out"], str):
        errs.append(f"out: expected a path string, got {v['out']!r}")

    ints = {"L": 2, "seed": 0, "rollout_len": 1, "inner_epochs": 1, "lr_step": 1}
    for key, lo in ints.items():
        if key in v:
            _check_range(errs, key, v[key], lo=lo, integer=True)
    if v.get("iterations") is not None:
        _check_range(errs, "iterations", v["iterations"], lo=0, integer=True)

    if "r" in v:
        _check_range(errs, "r", v["r"], lo=1.0)
    for key in ("alpha", "eps_clip", "K"):
        if key in v:
            _check_range(errs, key, v[key], lo=0.0, lo_open=True)
    for key in ("delta", "rho", "zeta"):
        if key in v:
            _check_range(errs, key, v[key], lo=0.0)
    if "gamma" in v:
        _check_range(errs, "gamma", v["gamma"], lo=0.0, hi=1.0, lo_open=True)
    for key in ("lam", "init_p", "eps_q"):
        if key in v:
            _check_range(errs, key, v[key], lo=0.0, hi=1.0)
    if "tau" in v and not (isinstance(v["tau"], (int, float)) and not isinstance(v["tau"], bool)
                           and not math.isnan(v["tau"])):
        errs.append(f"tau: expected a number, got {v['tau']!r}")
    if "alpha_q" in v:
        _check_range(errs, "alpha_q", v["alpha_q"], lo=0.0, hi=1.0, lo_open=True)
    if "gamma_q" in v:
        _check_range(errs, "gamma_q", v["gamma_q"], lo=0.0, hi=1.0, hi_open=True)
    if v.get("w_fixed") is not None:
        _check_range(errs, "w_fixed", v["w_fixed"], lo=0.0, hi=1.0)

    if "seeds" in v:
        s = v["seeds"]
        if isinstance(s, list):
            if not s or not all(_is_int(x) and x >= 0 for x in s):
                errs.append("seeds: explicit list must hold non-negative integers")
        else:
            _check_range(errs, "seeds", s, lo=1, integer=True)
    if v.get("snapshots") is not None:
        s = v["snapshots"]
        if not isinstance(s, list) or not all(_is_int(x) and x >= 0 for x in s):
            errs.append("snapshots: expected a list of non-negative iteration numbers")
    if v.get("rho_values") is not None:
        s = v["rho_values"]
        if not isinstance(s, list) or not s or not all(_is_num(x) and x >= 0 for x in s):
            errs.append("rho_values: expected a non-empty list of non-negative numbers")

    rr = v.get("r_range")
    if rr is not None:
        if isinstance(rr, list) and len(rr) == 3:
            rr = v["r_range"] = dict(zip(("start", "stop", "step"), rr))
        if not isinstance(rr, dict):
            errs.append("r_range: expected {start, stop, step}")
        else:
            for k in rr:
                if k not in ("start", "stop", "step"):
                    errs.append(f"r_range.{k}: unknown key")
            missing = [k for k in ("start", "stop", "step") if k not in rr]
            for k in missing:
                errs.append(f"r_range.{k}: missing required field")
            if not missing:
                _check_range(errs, "r_range.start", rr["start"], lo=1.0)
                _check_range(errs, "r_range.step", rr["step"], lo=0.0, lo_open=True)
                _check_range(errs, "r_range.stop", rr["stop"])
                if _is_num(rr["start"]) and _is_num(rr["stop"]) and rr["stop"] < rr["start"]:
                    errs.append("r_range.stop: must be >= r_range.start")

    if errs:
        raise ConfigError(errs)
    if isinstance(v.get("tau"), int):
        v["tau"] = float(v["tau"])
    return ExperimentConfig(**v)


def load_config(path, overrides: dict | None = None, preset: str | None = None) -> ExperimentConfig:
    """Read ``path`` (None for defaults only), then apply the preset and explicit overrides on top."""
    raw: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError([f"config: file not found: {p}"])
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: invalid JSON ({exc})"]) from None
        if not isinstance(raw, dict):
            raise ConfigError(["config: top level must be a JSON object"])
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError([f"preset: unknown preset {preset!r}"])
        raw = {**raw, **PRESETS[preset]}
    if overrides:
        raw = {**raw, **overrides}
    return validate_dict(raw)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return validate_dict({**json.loads(cfg.to_json()), **kw})

