"""Backend selection for the lattice hot loops.

The compiled extension is used when it imported cleanly; setting
``TUCPPO_PURE=1`` forces the numpy fallback. Both backends expose the same
five functions and are expected to agree bitwise.
"""

import os

from . import _fallback

fallback = _fallback
compiled = None
if os.environ.get("TUCPPO_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

backend = compiled if compiled is not None else fallback
BACKEND = "compiled" if compiled is not None else "python"

coop_neighbor_counts = backend.coop_neighbor_counts
total_payoffs = backend.total_payoffs
team_rewards = backend.team_rewards
fermi_apply = backend.fermi_apply
q_sequential_update = backend.q_sequential_update
