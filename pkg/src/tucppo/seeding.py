"""Per-trial seeds derived from one master seed.

``trial_seed`` feeds ``(master, algorithm code, r index, trial index)`` into
numpy's ``SeedSequence`` hash and keeps 64 bits of its output, so every
trial has its own stream no matter how trials are scheduled across workers.
"""

import numpy as np

ALGORITHM_CODES = {"tucppo": 0, "ppo": 1, "qlearning": 2, "fermi": 3}


def trial_seed(master: int, algorithm: str, r_index: int, trial_index: int) -> int:
    if master < 0 or r_index < 0 or trial_index < 0:
        raise ValueError("seed components must be non-negative")
    code = ALGORITHM_CODES[algorithm]
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(code, int(r_index), int(trial_index)))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)
