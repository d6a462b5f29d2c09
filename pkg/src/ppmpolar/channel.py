"""Slotted Poisson photon-counting channel with M-ary PPM input.

A PPM symbol occupies ``M`` slots, exactly one of which is pulsed.  Each slot
independently emits a Poisson number of photons with mean ``n_b`` (unpulsed)
or ``n_s + n_b`` (pulsed).  All probabilities are handled in natural-log
domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy


class ZeroNoiseError(ValueError):
    """Raised when an operation needs ``n_b > 0`` but got a noiseless channel."""


def _is_power_of_two(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class ChannelParams:
    """Channel operating point.

    Parameters
    ----------
    n_s : float
        Mean signal photons in the pulsed slot.
    n_b : float
        Mean background photons per slot.
    M : int
        PPM order, a power of two >= 2.
    """

    n_s: float
    n_b: float
    M: int

    def __post_init__(self):
        if not isinstance(self.M, (int, np.integer)) or self.M < 2 or not _is_power_of_two(int(self.M)):
            raise ValueError(f"M must be a power of two >= 2, got {self.M!r}")
        if not (self.n_s >= 0 and self.n_b >= 0):
            raise ValueError(f"photon means must be non-negative, got n_s={self.n_s}, n_b={self.n_b}")
        if not (np.isfinite(self.n_s) and np.isfinite(self.n_b)):
            raise ValueError("photon means must be finite")

    @property
    def m(self) -> int:
        """Bits per PPM symbol."""
        return int(self.M).bit_length() - 1

    @property
    def p_av(self) -> float:
        """Average received power per slot, ``n_s / M``."""
        return self.n_s / self.M

    @classmethod
    def from_pav_db(cls, p_av_db: float, n_b: float, M: int) -> "ChannelParams":
        """Build parameters from the average power per slot in dB."""
        return cls(n_s=M * 10.0 ** (p_av_db / 10.0), n_b=n_b, M=M)


def slot_log_pmf(y, pulsed: bool, params: ChannelParams):
    """Natural log of ``P(y | x)`` for a single slot.

    ``y`` may be a scalar or an integer array.  A zero-rate slot gives
    ``-inf`` for any ``y > 0``.
    """
    y = np.asarray(y)
    if np.any(y < 0):
        raise ValueError("photon counts must be non-negative")
    rate = params.n_b + params.n_s if pulsed else params.n_b
    if pulsed and rate == 0:
        raise ValueError("pulsed slot requires n_s + n_b > 0")
    # xlogy(0, 0) == 0 keeps the zero-rate branch exact
    out = xlogy(y, rate) - rate - gammaln(y + 1.0)
    if rate == 0:
        out = np.where(y > 0, -np.inf, out)
    return out[()] if out.ndim == 0 else out


def slot_llr_increment(y, params: ChannelParams):
    """Pulsed-versus-unpulsed log-likelihood ratio of a slot count.

    Returns ``ln P(y|1) - ln P(y|0) = y * ln(1 + n_s/n_b) - n_s``.
    """
    if params.n_b <= 0:
        raise ZeroNoiseError("slot LLR is undefined for n_b = 0; use the noiseless branch")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("photon counts must be non-negative")
    out = y * np.log1p(params.n_s / params.n_b) - params.n_s
    return out[()] if out.ndim == 0 else out


def slot_deltas(y: np.ndarray, params: ChannelParams) -> np.ndarray:
    """Per-slot LLR increments for a count array, including ``n_b = 0``.

    With no background light a positive count can only come from the pulse,
    so its increment is ``+inf``; an empty slot contributes ``-n_s``.
    """
    y = np.asarray(y)
    if params.n_b > 0:
        return slot_llr_increment(y, params)
    return np.where(y > 0, np.inf, -float(params.n_s))


def sample_symbol(pulse_position: int, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Draw the photon counts for one PPM symbol.

    ``pulse_position`` is 1-based, in ``1..M``.
    """
    if not 1 <= pulse_position <= params.M:
        raise ValueError(f"pulse position must lie in 1..{params.M}, got {pulse_position}")
    rates = np.full(params.M, params.n_b, dtype=float)
    rates[pulse_position - 1] += params.n_s
    return rng.poisson(rates)


def sample_symbols(positions: np.ndarray, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`sample_symbol` for 0-based ``positions``.

    Returns an integer array of shape ``positions.shape + (M,)``.
    """
    positions = np.asarray(positions)
    if positions.size and (positions.min() < 0 or positions.max() >= params.M):
        raise ValueError("pulse positions out of range")
    counts = rng.poisson(params.n_b, size=positions.shape + (params.M,))
    if params.n_s > 0:
        pulse = rng.poisson(params.n_s, size=positions.shape)
        np.put_along_axis(
            counts,
            positions[..., None],
            np.take_along_axis(counts, positions[..., None], axis=-1) + pulse[..., None],
            axis=-1,
        )
    return counts
