"""Sum-tree sampling of basis indices.

The tree is built by pairwise sums, so the mass of any aligned block of
``2^k`` amplitudes is computed identically whether one process holds the
whole vector or the block lives on a separate worker.  Serial and
partitioned execution therefore draw the same outcomes from the same
uniforms.
"""
from __future__ import annotations

import numpy as np


def build_sum_tree(probs: np.ndarray) -> list[np.ndarray]:
    """Levels from the root (length 1) down to ``probs`` itself."""
    size = probs.shape[0]
    if size & (size - 1):
        raise ValueError("probability vector length must be a power of two")
    levels = [probs]
    cur = probs
    while cur.shape[0] > 1:
        cur = cur[0::2] + cur[1::2]
        levels.append(cur)
    return levels[::-1]


def descend(levels: list[np.ndarray], u: np.ndarray, idx: np.ndarray | None = None):
    """Walk ``u`` (already scaled by the root mass) down the tree.

    Returns ``(leaf indices, residual u)``.
    """
    u = np.asarray(u, dtype=float).copy()
    if idx is None:
        idx = np.zeros(u.shape[0], dtype=np.int64)
    for lvl in levels[1:]:
        left = lvl[2 * idx]
        right = lvl[2 * idx + 1]
        go_right = ((u >= left) & (right > 0)) | (left <= 0)
        u = np.where(go_right, u - left, u)
        idx = 2 * idx + go_right
    return idx, u


def sample_indices(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    levels = build_sum_tree(probs)
    idx, _ = descend(levels, uniforms * levels[0][0])
    return idx
