"""Frozen-set construction for multilevel polar codes on the PPM channel.

Three methods are provided:

* ``mi-dga``: each bit level is replaced by a biAWGN channel with the same
  conditional mutual information, then polarised with the Gaussian
  approximation (MI-domain updates through the J function).
* ``mi-dbec``: each bit level is replaced by a BEC with erasure probability
  ``1 - I_j`` and polarised exactly.
* ``mc``: genie-aided SC over the whole multilevel chain; positions are
  ranked by their empirical first-error counts.

Reliabilities are laid out like ``u~``: level by level, natural index order
within a level, matching :func:`ppmpolar.polar.polar_transform`.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, sample_symbols, slot_deltas
from .modulation import LN2, MiProfile, labels_to_positions
from .polar.decode import _level_llrs
from .polar.transform import f_exact, g_update, polar_transform

H1, H2, H3 = 0.3073, 0.8935, 1.1064

# MI at or above this is treated as exactly 1 before inverting J
J_SATURATION = 1.0 - 1e-12
# sigma returned by j_inv for saturated inputs; J(J_INV_SATURATED) == 1.0 in float64
J_INV_SATURATED = 100.0

METHODS = ("mc", "mi-dga", "mi-dbec")


def j_fun(sigma):
    """Approximate J function ``(1 - 2^(-H1 sigma^(2 H2)))^H3``."""
    sigma = np.asarray(sigma, dtype=float)
    out = (-np.expm1(-LN2 * H1 * sigma ** (2 * H2))) ** H3
    return out[()] if out.ndim == 0 else out


def j_inv(mi):
    """Approximate inverse of :func:`j_fun`.

    Inputs at or above ``J_SATURATION`` return ``J_INV_SATURATED`` rather
    than the divergent closed form; inputs at or below 0 return 0.
    """
    mi = np.asarray(mi, dtype=float)
    sat = mi >= J_SATURATION
    x = np.clip(mi, 0.0, J_SATURATION)
    with np.errstate(divide="ignore"):
        out = (-np.log2(-np.expm1(np.log(x) / H3)) / H1) ** (1.0 / (2 * H2))
    out = np.where(x <= 0, 0.0, out)
    out = np.where(sat, J_INV_SATURATED, out)
    return out[()] if out.ndim == 0 else out


def ga_transform(i1, i2):
    """MI update of the basic polar transform under the Gaussian approximation.

    Returns ``(I_minus, I_plus)``, both clipped to ``[0, 1]``.
    """
    i1 = np.asarray(i1, dtype=float)
    i2 = np.asarray(i2, dtype=float)
    minus = 1.0 - j_fun(np.hypot(j_inv(1.0 - i1), j_inv(1.0 - i2)))
    plus = j_fun(np.hypot(j_inv(i1), j_inv(i2)))
    return np.clip(minus, 0.0, 1.0), np.clip(plus, 0.0, 1.0)


def bec_transform(e1, e2):
    """Erasure probabilities ``(e1 + e2 - e1 e2, e1 e2)`` of the two synthetic channels."""
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    return e1 + e2 - e1 * e2, e1 * e2


def evolve_reliabilities(leaf_value, n: int, rule: str) -> np.ndarray:
    """Reliabilities of the ``n`` synthetic channels of one polar code.

    ``leaf_value`` is the channel MI (``ga``) or erasure probability
    (``bec``), either a scalar or one value per code position.  The result is
    an MI for ``ga`` and ``1 - erasure`` for ``bec``, so higher is always
    more reliable.
    """
    if n < 1 or n & (n - 1):
        raise ValueError(f"n must be a power of two, got {n}")
    if rule not in ("ga", "bec"):
        raise ValueError(f"unknown rule {rule!r}")
    step = ga_transform if rule == "ga" else bec_transform
    leaf = np.broadcast_to(np.asarray(leaf_value, dtype=float), (n,))
    return 1.0 - _evolve(leaf, step) if rule == "bec" else _evolve(leaf, step)


def _evolve(v: np.ndarray, step) -> np.ndarray:
    if v.size == 1:
        return v.copy()
    h = v.size // 2
    minus, plus = step(v[:h], v[h:])
    return np.concatenate([_evolve(minus, step), _evolve(plus, step)])


@dataclass(frozen=True)
class ReliabilityProfile:
    """Per-position reliability of ``u~``.

    ``values`` are MIs (``mi-dga``), ``1 - erasure`` (``mi-dbec``) or first
    error counts (``mc``, higher is worse).
    """

    values: np.ndarray
    method: str


def _freeze(unreliability_keys, count: int, total: int) -> np.ndarray:
    """Freeze ``count`` positions, sorted by the given keys then higher index first."""
    order = np.lexsort((-np.arange(total),) + tuple(reversed(unreliability_keys)))
    mask = np.zeros(total, dtype=bool)
    mask[order[:count]] = True
    return mask


def _check_sizes(n: int, m: int, k_total: int, n_used: int | None) -> int:
    if n < 1 or n & (n - 1):
        raise ValueError(f"n must be a power of two, got {n}")
    n_used = n if n_used is None else n_used
    if not 1 <= n_used <= n:
        raise ValueError("n_used must lie in 1..n")
    if not 0 <= k_total <= m * n_used:
        raise ValueError(f"k_total must lie in 0..{m * n_used}")
    return n_used


def surrogate_reliabilities(
    profile: MiProfile | list[float], n: int, rule: str, n_used: int | None = None
) -> ReliabilityProfile:
    """Evolve every level's surrogate channel and concatenate in level order."""
    mis = list(profile.per_level_mi) if isinstance(profile, MiProfile) else list(profile)
    n_used = _check_sizes(n, len(mis), 0, n_used)
    values = []
    for mi in mis:
        mi = min(max(float(mi), 0.0), 1.0)
        if rule == "ga":
            leaf = np.full(n, mi)
            leaf[n_used:] = 1.0
        else:
            leaf = np.full(n, 1.0 - mi)
            leaf[n_used:] = 0.0
        values.append(evolve_reliabilities(leaf, n, rule))
    method = "mi-dga" if rule == "ga" else "mi-dbec"
    return ReliabilityProfile(np.concatenate(values), method)


def _shortened(n: int, m: int, n_used: int) -> np.ndarray:
    short = np.zeros((m, n), dtype=bool)
    short[:, n_used:] = True
    return short.ravel()


def construct_surrogate(
    profile: MiProfile | list[float], n: int, k_total: int, rule: str, n_used: int | None = None
) -> np.ndarray:
    """Frozen mask from the MI-DGA (``rule="ga"``) or MI-DBEC (``"bec"``) construction.

    ``k_total`` counts every unfrozen position, CRC bits included.  Equal
    reliabilities freeze the higher ``u~`` index first.
    """
    rel = surrogate_reliabilities(profile, n, rule, n_used)
    m = rel.values.size // n
    n_used = _check_sizes(n, m, k_total, n_used)
    short = _shortened(n, m, n_used)
    return _freeze((short.astype(int) * -1, rel.values), m * n - k_total, m * n)


# ---------------------------------------------------------------------------
# Monte Carlo construction
# ---------------------------------------------------------------------------

def genie_leaf_llrs(llr: np.ndarray, u: np.ndarray, f=f_exact) -> np.ndarray:
    """Decision LLR of every ``u`` position when all earlier bits are known.

    ``llr`` and ``u`` have shape ``(batch, n)``.
    """
    n = llr.shape[1]
    if n == 1:
        return llr
    h = n // 2
    a, b = llr[:, :h], llr[:, h:]
    ua, ub = u[:, :h], u[:, h:]
    la = genie_leaf_llrs(f(a, b), ua, f)
    lb = genie_leaf_llrs(g_update(a, b, polar_transform(ua)), ub, f)
    return np.concatenate([la, lb], axis=1)


@dataclass(frozen=True)
class McConstruction:
    """Outcome of the Monte Carlo construction."""

    frozen_mask: np.ndarray
    error_counts: np.ndarray
    trials: int
    level_mi: tuple[float, ...]
    seed: int

    @property
    def profile(self) -> ReliabilityProfile:
        return ReliabilityProfile(self.error_counts, "mc")

    def wilson_intervals(self, z: float = 1.96) -> np.ndarray:
        """95% (default) Wilson score intervals of the per-position error rates."""
        return wilson_interval(self.error_counts, self.trials, z)


def wilson_interval(k, trials: int, z: float = 1.96) -> np.ndarray:
    p = np.asarray(k, dtype=float) / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return np.stack([centre - half, centre + half], axis=-1)


def _mc_chunk(args):
    params, n, n_used, trials, seed, chunk = args
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))
    m = params.m
    u = rng.integers(0, 2, size=(trials, m, n), dtype=np.uint8)
    u[:, :, n_used:] = 0
    c = polar_transform(u)[:, :, :n_used]
    positions = labels_to_positions(np.moveaxis(c, 1, 0))
    deltas = slot_deltas(sample_symbols(positions, params, rng), params)
    errors = np.zeros((m, n), dtype=np.int64)
    mi_sums = np.zeros(m)
    for j in range(1, m + 1):
        prefix = positions & ((1 << (j - 1)) - 1)
        llr = _level_llrs(deltas, j, prefix, n)
        bits = c[:, j - 1].astype(float)
        mi_sums[j - 1] = np.sum(1.0 - np.logaddexp(0.0, -(1.0 - 2.0 * bits) * llr[:, :n_used]) / LN2)
        leaf = genie_leaf_llrs(llr, u[:, j - 1])
        errors[j - 1] = ((leaf < 0) != u[:, j - 1].astype(bool)).sum(axis=0)
    return errors.ravel(), mi_sums


def construct_mc(
    params: ChannelParams,
    n: int,
    k_total: int,
    trials: int,
    seed: int,
    *,
    n_used: int | None = None,
    chunk: int = 1000,
    workers: int = 1,
) -> McConstruction:
    """Frozen mask from genie-aided SC simulation of the multilevel chain.

    The ``mn - k_total`` positions with the most first-decision errors are
    frozen.  Ties (e.g. all zero counts on a noiseless channel) fall back to
    the MI-DBEC ordering built from the level MIs measured in the same
    trials, then to higher index first.  Counts depend only on ``seed``, not
    on ``workers``.
    """
    m = params.m
    n_used = _check_sizes(n, m, k_total, n_used)
    if trials < 1:
        raise ValueError("need at least one trial")
    jobs = []
    for i, lo in enumerate(range(0, trials, chunk)):
        jobs.append((params, n, n_used, min(chunk, trials - lo), seed, i))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_mc_chunk, jobs))
    else:
        results = [_mc_chunk(job) for job in jobs]
    counts = np.sum([r[0] for r in results], axis=0)
    level_mi = np.clip(np.sum([r[1] for r in results], axis=0) / (trials * n_used), 0.0, 1.0)
    fallback = surrogate_reliabilities(list(level_mi), n, "bec", n_used).values
    short = _shortened(n, m, n_used)
    mask = _freeze((-short.astype(int), -counts, fallback), m * n - k_total, m * n)
    return McConstruction(mask, counts, trials, tuple(float(x) for x in level_mi), seed)
