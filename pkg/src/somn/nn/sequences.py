"""Lookback windows for sequence models.

Item t is the window of per-epoch inputs [t-L+1 .. t]; positions before
the start of the recording are filled by replicating epoch 0, so every
epoch yields exactly one item and its label is the stage at t. Windows
never cross recording boundaries (callers build per recording).
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError


def build_sequences(values: np.ndarray, lookback: int) -> np.ndarray:
    """(n, ...) per-epoch inputs -> (n, L, ...) left-padded windows."""
    if lookback < 1:
        raise ParameterError(f"lookback must be >= 1, got {lookback}")
    values = np.asarray(values)
    n = values.shape[0]
    idx = np.arange(n)[:, None] - np.arange(lookback - 1, -1, -1)[None, :]
    np.maximum(idx, 0, out=idx)
    return values[idx]
