"""Order-fixed reductions over the path axis.

Every statistic in the package is reduced through :func:`pairwise_sum`, which
adds neighbours level by level in a fixed tree.  The tree depends only on the
number of paths, so a result never depends on how paths were split across
workers or on the memory layout of the input.
"""

from __future__ import annotations

import numpy as np


def pairwise_sum(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """Sum ``x`` along ``axis`` with a fixed binary tree."""
    x = np.moveaxis(np.asarray(x, dtype=np.float64), axis, 0)
    n = x.shape[0]
    if n == 0:
        return np.zeros(x.shape[1:])
    size = 1 << (n - 1).bit_length()
    if size != n:
        pad = np.zeros((size - n,) + x.shape[1:])
        x = np.concatenate([x, pad], axis=0)
    while x.shape[0] > 1:
        x = x[0::2] + x[1::2]
    return x[0]


def mean_se(x: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and its standard error along ``axis``."""
    x = np.moveaxis(np.asarray(x, dtype=np.float64), axis, 0)
    n = x.shape[0]
    mean = pairwise_sum(x) / n
    if n < 2:
        return mean, np.zeros_like(mean)
    var = pairwise_sum((x - mean) ** 2) / (n - 1)
    return mean, np.sqrt(var / n)


def sample_var(x: np.ndarray, axis: int = 0) -> np.ndarray:
    x = np.moveaxis(np.asarray(x, dtype=np.float64), axis, 0)
    n = x.shape[0]
    mean = pairwise_sum(x) / n
    return pairwise_sum((x - mean) ** 2) / (n - 1)


def rms(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(pairwise_sum(x * x) / x.shape[0]))
