"""GF(2) polar transform and the LLR update kernels shared by the decoders."""

from __future__ import annotations

import numpy as np

# Channel LLRs are clipped to this magnitude so that certain (infinite) LLRs
# never produce inf - inf inside the decoder recursions.
LLR_CLIP = 1e6


def is_power_of_two(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


def polar_transform(u) -> np.ndarray:
    """Return ``u F^{(x) log2 n}`` over GF(2), ``F = [[1, 0], [1, 1]]``.

    Works on the last axis, so a batch of words may be passed at once.  The
    transform is its own inverse.
    """
    x = np.array(u, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    if not is_power_of_two(n):
        raise ValueError(f"polar transform length must be a power of two, got {n}")
    lead = x.shape[:-1]
    h = 1
    while h < n:
        v = x.reshape(lead + (n // (2 * h), 2, h))
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


def f_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Box-plus ``2 atanh(tanh(a/2) tanh(b/2))`` in a stable form."""
    hard = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    return hard + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


def f_minsum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


def g_update(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Lower-branch update ``b + (1 - 2c) a`` given the upper partial sums ``c``."""
    return b + np.where(c.astype(bool), -a, a)


def clip_llrs(llr) -> np.ndarray:
    return np.clip(np.asarray(llr, dtype=float), -LLR_CLIP, LLR_CLIP)
