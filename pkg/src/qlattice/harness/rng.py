"""Counter-based per-case random streams.

Each verification case draws from a Philox generator keyed by (seed, case
index), so the sampled inputs are independent of worker count and execution
order.
"""

from __future__ import annotations

import numpy as np


def case_rng(seed: int, case_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF,
                                                     case_index & 0xFFFFFFFFFFFFFFFF]))
