"""Time the compiled lattice kernels against their pure-Python twins.

Usage: python benchmarks/bench_kernels.py [--L 200] [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from tucppo import _fallback, kernels


def cases(L, rng):
    grid = (rng.random((L, L)) < 0.5).astype(np.int8)
    pay = _fallback.total_payoffs(grid, 3.3)
    choice = rng.integers(0, 4, (L, L)).astype(np.int8)
    u = rng.random((L, L))
    N = L * L
    sx = grid.ravel().astype(np.int64)
    sn = _fallback.coop_neighbor_counts(grid).ravel()
    act = rng.integers(0, 2, N)
    rew = rng.normal(size=N)
    return {
        "coop_neighbor_counts": lambda m: m.coop_neighbor_counts(grid),
        "total_payoffs": lambda m: m.total_payoffs(grid, 3.3),
        "team_rewards": lambda m: m.team_rewards(grid, 3.3),
        "fermi_apply": lambda m: m.fermi_apply(grid, pay, choice, u, 0.5),
        "q_sequential_update": lambda m: m.q_sequential_update(np.zeros((2, 5, 2)), sx, sn, act, rew,
                                                               act, sn, 0.1, 0.9),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if kernels.compiled is None:
        print("compiled extension not built; only the fallback can be timed")
    backends = [("python", _fallback)] + ([("compiled", kernels.compiled)] if kernels.compiled else [])
    print(f"L={args.L}, best of {args.repeat} calls, milliseconds")
    print(f"{'kernel':<22}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for name, fn in cases(args.L, np.random.default_rng(0)).items():
        times = []
        for _, mod in backends:
            n = 1 if name == "q_sequential_update" and mod is _fallback else args.repeat
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=n)) * 1e3)
        speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
        print(f"{name:<22}" + "".join(f"{t:>12.3f}" for t in times) + speed)


if __name__ == "__main__":
    main()
