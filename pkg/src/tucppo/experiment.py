"""Single runs and multi-seed sweeps with their on-disk artifacts."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import baselines, lattice, nn, pgm, stats
from .config import ExperimentConfig
from .seeding import trial_seed
from .trainer import TrainerState, train_epoch, vanilla_ppo_epoch

log = logging.getLogger(__name__)

CURVE_COLUMNS = ["iteration", "coop_fraction", "defect_fraction", "mean_payoff",
                 "mean_team_reward", "w_t", "eta", "L_clip", "L_vf", "L_ent", "L_cv", "L_tuc"]


class PPOEngine:
    def __init__(self, cfg: ExperimentConfig, r: float, seed: int, tuc: bool = True,
                 rho: float | None = None):
        self.train_cfg = cfg.train_config(r=r, rho=rho)
        self.state = TrainerState.create(cfg.L, self.train_cfg, seed, cfg.init_scheme)
        self.epoch = train_epoch if tuc else vanilla_ppo_epoch
        self.r = r

    @property
    def grid(self):
        return self.state.grid

    def step(self) -> dict:
        rep = self.epoch(self.state, self.train_cfg)
        return {"mean_payoff": rep.mean_payoff, "mean_team_reward": rep.mean_team_reward,
                "w_t": rep.w_t, "eta": rep.eta, "L_clip": rep.L_clip, "L_vf": rep.L_vf,
                "L_ent": rep.L_ent, "L_cv": rep.L_cv, "L_tuc": rep.L_tuc}

    def save(self, out_dir: Path) -> None:
        nn.save_checkpoint(out_dir / "checkpoint.bin", self.state.params, self.state.adam,
                           extra=self.state.dual.as_array())


class FermiEngine:
    def __init__(self, cfg: ExperimentConfig, r: float, seed: int):
        self.rng = np.random.default_rng(seed)
        self.grid = lattice.init_grid(cfg.L, cfg.init_scheme, self.rng)
        self.r = r
        self.K = cfg.K

    def step(self) -> dict:
        self.grid = baselines.fermi_step(self.grid, self.r, self.K, self.rng)
        return {}

    def save(self, out_dir: Path) -> None:
        pass


class QLearningEngine:
    def __init__(self, cfg: ExperimentConfig, r: float, seed: int):
        self.rng = np.random.default_rng(seed)
        self.grid = lattice.init_grid(cfg.L, cfg.init_scheme, self.rng)
        self.q = baselines.QTable(cfg.alpha_q, cfg.gamma_q, cfg.eps_q)
        self.r = r

    def step(self) -> dict:
        self.grid = baselines.qlearning_step(self.grid, self.q, self.r, self.rng)
        return {}

    def save(self, out_dir: Path) -> None:
        with open(out_dir / "qtable.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["own_strategy", "coop_neighbors", "q_defect", "q_cooperate"])
            for x in range(2):
                for n in range(5):
                    w.writerow([x, n, repr(float(self.q.values[x, n, 0])),
                                repr(float(self.q.values[x, n, 1]))])


def make_engine(cfg: ExperimentConfig, r: float, seed: int, rho: float | None = None):
    if cfg.algorithm in ("tucppo", "ppo"):
        return PPOEngine(cfg, r, seed, tuc=cfg.algorithm == "tucppo", rho=rho)
    if cfg.algorithm == "fermi":
        return FermiEngine(cfg, r, seed)
    return QLearningEngine(cfg, r, seed)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def _curve_row(iteration: int, grid: np.ndarray, r: float, extra: dict) -> list[str]:
    coop = lattice.cooperation_fraction(grid)
    if "mean_payoff" not in extra:
        extra = {"mean_payoff": float(np.mean(lattice.total_payoffs(grid, r))),
                 "mean_team_reward": float(np.mean(lattice.team_rewards(grid, r)))}
    row = {"coop_fraction": coop, "defect_fraction": 1.0 - coop, **extra}
    return [str(iteration)] + [_fmt(row.get(c)) for c in CURVE_COLUMNS[1:]]


def _prepare_dir(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _write_frame(out: Path, iteration: int, grid: np.ndarray, r: float) -> None:
    pgm.write_snapshot(out, iteration, grid)
    pgm.write_heatmap(out, iteration, lattice.total_payoffs(grid, r))


def run(cfg: ExperimentConfig, out_dir=None, seed: int | None = None) -> stats.RunOutcome:
    """One seeded run writing ``curves.csv``, scheduled snapshots/heatmaps and a final checkpoint."""
    out = _prepare_dir(out_dir or cfg.out)
    seed = cfg.seed if seed is None else seed
    engine = make_engine(cfg, cfg.r, seed)
    schedule = set(cfg.snapshot_schedule)
    (out / "config.json").write_text(cfg.to_json() + "\n")
    if 0 in schedule:
        _write_frame(out, 0, engine.grid, cfg.r)
    n_iter = cfg.n_iterations
    with open(out / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for it in range(1, n_iter + 1):
            extra = engine.step()
            w.writerow(_curve_row(it, engine.grid, cfg.r, extra))
            if it in schedule:
                _write_frame(out, it, engine.grid, cfg.r)
    engine.save(out)
    log.info("run %s r=%s seed=%d done: coop=%.4f", cfg.algorithm, cfg.r, seed,
             lattice.cooperation_fraction(engine.grid))
    return stats.RunOutcome(cfg.r, seed, lattice.cooperation_fraction(engine.grid), n_iter)


def run_trial(cfg: ExperimentConfig, r: float, seed: int, rho: float | None = None) -> stats.RunOutcome:
    """Run without writing anything; only the final cooperation fraction is kept."""
    engine = make_engine(cfg, r, seed, rho=rho)
    for _ in range(cfg.n_iterations):
        engine.step()
    return stats.RunOutcome(r, seed, lattice.cooperation_fraction(engine.grid), cfg.n_iterations)


def _run_trial_job(args):
    return run_trial(*args)


def worker_count(requested: int | None = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("TUC_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def sweep(cfg: ExperimentConfig, out_dir=None, workers: int | None = None) -> dict:
    """Run every (variant, r, trial) and write ``ci_table.csv``, ``errbar.csv`` and violin data.

    Variants are the entropy coefficients in ``rho_values`` when given,
    otherwise the single configured algorithm. Trial seeds are derived from
    the master seed and the grid position, so results do not depend on the
    number of workers.
    """
    out = _prepare_dir(out_dir or cfg.out)
    r_values = cfg.r_grid()
    if not r_values:
        raise ValueError("empty r grid")
    trials = cfg.seed_list
    if cfg.rho_values:
        variants = [(f"{cfg.algorithm}_rho{rho!r}", rho) for rho in cfg.rho_values]
    else:
        variants = [(cfg.algorithm, None)]
    jobs, keys = [], []
    for label, rho in variants:
        for ri, r in enumerate(r_values):
            for ti in trials:
                jobs.append((cfg, r, trial_seed(cfg.seed, cfg.algorithm, ri, ti), rho))
                keys.append(label)
    n_workers = min(worker_count(workers), len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_trial_job, jobs, chunksize=1))
    else:
        results = [_run_trial_job(j) for j in jobs]

    by_label: dict[str, list[stats.RunOutcome]] = {label: [] for label, _ in variants}
    for label, res in zip(keys, results):
        by_label[label].append(res)
    summaries = {label: stats.aggregate(rs) for label, rs in by_label.items()}
    (out / "config.json").write_text(cfg.to_json() + "\n")
    stats.write_ci_table(out / "ci_table.csv", summaries)
    stats.write_errbar(out / "errbar.csv", summaries)
    if len(variants) == 1:
        stats.write_violin(out / "violin.csv", by_label[variants[0][0]])
    else:
        for label, rs in by_label.items():
            stats.write_violin(out / f"violin_{label}.csv", rs)
    return {"outcomes": by_label, "summaries": summaries}
