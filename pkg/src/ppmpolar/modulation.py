"""PPM labelling, multistage soft demapping and achievable-rate estimators.

Labels use natural binary order with ``b_1`` as the least significant bit, so
the 0-based slot index of a label is ``sum_j b_j 2^(j-1)``.  Throughout the
vectorised API a *prefix* is the integer ``sum_{j'<j} b_j' 2^(j'-1)`` of the
bits already decided before level ``j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, ZeroNoiseError, sample_symbols, slot_deltas

LN2 = math.log(2.0)


def map_label(label) -> int:
    """Return the 1-based pulse position ``d(b) = 1 + sum_j b_j 2^(j-1)``."""
    bits = [int(b) for b in label]
    if not bits:
        raise ValueError("label must contain at least one bit")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("label bits must be 0 or 1")
    return 1 + sum(b << j for j, b in enumerate(bits))


def position_to_label(d: int, m: int) -> list[int]:
    """Inverse of :func:`map_label`."""
    if not 1 <= d <= 1 << m:
        raise ValueError(f"position {d} outside 1..{1 << m}")
    return [((d - 1) >> j) & 1 for j in range(m)]


def labels_to_positions(levels: np.ndarray) -> np.ndarray:
    """0-based slot indices from per-level bit rows.

    ``levels`` has shape ``(m, n)``; row ``j`` holds bit level ``j + 1`` of
    every symbol.
    """
    levels = np.asarray(levels, dtype=np.int64)
    weights = 1 << np.arange(levels.shape[0], dtype=np.int64)
    return np.tensordot(weights, levels, axes=1)


def logsumexp(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """``log(sum(exp(x)))`` along ``axis``; exact for all-``-inf`` and ``+inf`` entries."""
    top = np.max(x, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.log(np.sum(np.exp(x - shift), axis=axis)) + np.squeeze(shift, axis=axis)
    return out


def _level_sets(M: int, j: int, prefix: np.ndarray):
    """Slot indices consistent with ``prefix`` split by the value of bit ``j``."""
    stride = 1 << j
    tail = np.arange(M >> j, dtype=np.int64) * stride
    idx0 = prefix[..., None] + tail
    return idx0, idx0 + (stride >> 1)


def _lse_difference(deltas: np.ndarray, idx0: np.ndarray, idx1: np.ndarray) -> np.ndarray:
    d0 = np.take_along_axis(deltas, idx0, axis=-1)
    d1 = np.take_along_axis(deltas, idx1, axis=-1)
    with np.errstate(invalid="ignore"):
        llr = logsumexp(d0, axis=-1) - logsumexp(d1, axis=-1)
    # two certain pulses can only appear on an impossible noiseless observation
    return np.nan_to_num(llr, nan=0.0, posinf=np.inf, neginf=-np.inf)


def demap_llrs(deltas: np.ndarray, j: int, prefix) -> np.ndarray:
    """Level-``j`` LLRs from precomputed slot increments.

    Parameters
    ----------
    deltas : ndarray, shape (..., M)
        Output of :func:`ppmpolar.channel.slot_deltas` for each symbol.
    j : int
        1-based bit level.
    prefix : int or ndarray
        Decided lower bits, broadcastable against ``deltas.shape[:-1]``.

    Returns
    -------
    ndarray
        ``ln P(y|b_j=0, prefix) - ln P(y|b_j=1, prefix)`` per symbol.
    """
    M = deltas.shape[-1]
    m = M.bit_length() - 1
    if not 1 <= j <= m:
        raise ValueError(f"level must lie in 1..{m}, got {j}")
    prefix = np.asarray(prefix, dtype=np.int64)
    if prefix.size and (prefix.min() < 0 or prefix.max() >= 1 << (j - 1)):
        raise ValueError(f"prefix must hold exactly {j - 1} bits")
    shape = np.broadcast_shapes(deltas.shape[:-1], prefix.shape)
    deltas = np.broadcast_to(deltas, shape + (M,))
    prefix = np.broadcast_to(prefix, shape)
    idx0, idx1 = _level_sets(M, j, prefix)
    return _lse_difference(deltas, idx0, idx1)


def demap_marginal_llrs(deltas: np.ndarray, j: int) -> np.ndarray:
    """Level-``j`` LLRs with every other label bit treated as uniform."""
    M = deltas.shape[-1]
    p = np.arange(M)
    bit = (p >> (j - 1)) & 1
    shape = deltas.shape[:-1]
    idx0 = np.broadcast_to(p[bit == 0], shape + (M // 2,))
    idx1 = np.broadcast_to(p[bit == 1], shape + (M // 2,))
    return _lse_difference(deltas, idx0, idx1)


def demap_level(y, j: int, prefix, params: ChannelParams) -> float:
    """LLR of label bit ``j`` for one received PPM symbol.

    ``prefix`` is the sequence of decided bits ``b_1 .. b_(j-1)``.  Infinite
    values only occur when ``n_b = 0``.
    """
    y = np.asarray(y)
    if y.shape != (params.M,):
        raise ValueError(f"expected {params.M} slot counts, got shape {y.shape}")
    if np.any(y < 0):
        raise ValueError("photon counts must be non-negative")
    bits = [int(b) for b in prefix]
    if len(bits) != j - 1:
        raise ValueError(f"level {j} needs a prefix of {j - 1} bits, got {len(bits)}")
    if params.n_s == 0 and params.n_b == 0:
        raise ValueError("degenerate channel: n_s = n_b = 0")
    pre = sum(b << i for i, b in enumerate(bits))
    return float(demap_llrs(slot_deltas(y, params), j, pre))


@dataclass(frozen=True)
class RateEstimate:
    """Monte Carlo estimate in bits per slot with its standard error."""

    value: float
    stderr: float
    samples: int


@dataclass(frozen=True)
class MiProfile:
    """Per-level mutual information ``I(B_j; Y | B^(j-1))`` in bits."""

    per_level_mi: tuple[float, ...]
    standard_errors: tuple[float, ...]
    samples_used: int
    total_stderr: float = 0.0

    @property
    def total(self) -> float:
        return float(sum(self.per_level_mi))


def _check_mc(params: ChannelParams, samples: int) -> None:
    if params.n_b <= 0:
        raise ZeroNoiseError("Monte Carlo rate estimators need n_b > 0; use ppm_capacity_zero_noise")
    if samples < 2:
        raise ValueError("need at least two samples")


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _draw(params: ChannelParams, samples: int, rng: np.random.Generator):
    positions = rng.integers(0, params.M, size=samples)
    return positions, sample_symbols(positions, params, rng)


def ppm_capacity(params: ChannelParams, samples: int, rng: np.random.Generator) -> RateEstimate:
    """Monte Carlo PPM capacity in bits per slot for ``n_b > 0``.

    Evaluates ``log2(M)/M - E[log2 sum_p (1 + n_s/n_b)^(Y_p - Y_1)] / M`` with
    the pulse in slot 1, exponents handled in log domain.
    """
    _check_mc(params, samples)
    M = params.M
    counts = sample_symbols(np.zeros(samples, dtype=np.int64), params, rng)
    diff = counts - counts[:, :1]
    log_terms = logsumexp(diff * math.log1p(params.n_s / params.n_b), axis=1) / LN2
    per_sample = (math.log2(M) - log_terms) / M
    mean, se = _mean_se(per_sample)
    return RateEstimate(mean, se, samples)


def ppm_capacity_zero_noise(params: ChannelParams) -> float:
    """Exact capacity ``(log2 M / M)(1 - e^(-n_s))`` of the noiseless channel."""
    if params.n_b != 0:
        raise ValueError("closed form holds only for n_b = 0")
    return math.log2(params.M) / params.M * -math.expm1(-params.n_s)


def _mi_terms(llr: np.ndarray, bits: np.ndarray) -> np.ndarray:
    # I = 1 - E[log2(1 + exp(-(1 - 2b) L))]
    return 1.0 - np.logaddexp(0.0, -(1.0 - 2.0 * bits) * llr) / LN2


def level_mi_profile(params: ChannelParams, samples: int, rng: np.random.Generator) -> MiProfile:
    """Estimate ``I(B_j; Y | B^(j-1))`` for every level with genie prefixes."""
    _check_mc(params, samples)
    positions, counts = _draw(params, samples, rng)
    deltas = slot_deltas(counts, params)
    mis, ses = [], []
    total = np.zeros(samples)
    for j in range(1, params.m + 1):
        prefix = positions & ((1 << (j - 1)) - 1)
        bits = (positions >> (j - 1)) & 1
        terms = _mi_terms(demap_llrs(deltas, j, prefix), bits)
        total += terms
        mean, se = _mean_se(terms)
        mis.append(min(max(mean, 0.0), 1.0))
        ses.append(se)
    return MiProfile(tuple(mis), tuple(ses), samples, _mean_se(total)[1])


def bmd_rate(params: ChannelParams, samples: int, rng: np.random.Generator) -> RateEstimate:
    """Bit-metric decoding rate ``sum_j I(B_j; Y) / M`` in bits per slot."""
    _check_mc(params, samples)
    positions, counts = _draw(params, samples, rng)
    deltas = slot_deltas(counts, params)
    total = np.zeros(samples)
    for j in range(1, params.m + 1):
        bits = (positions >> (j - 1)) & 1
        total += _mi_terms(demap_marginal_llrs(deltas, j), bits)
    mean, se = _mean_se(total / params.M)
    return RateEstimate(mean, se, samples)
