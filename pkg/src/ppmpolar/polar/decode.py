"""Successive-cancellation (list) decoding across PPM bit levels.

Levels are decoded in order ``1..m``.  Before level ``j`` every surviving
path demaps the received symbols conditioned on its own decisions for the
earlier levels, so the soft input of a path depends on its history.

Path metrics are penalties in nats; smaller is better.  The default penalty
adds ``|L|`` when a decision disagrees with the sign of its LLR; with
``exact_metric=True`` it adds ``ln(1 + exp(-(1 - 2u) L))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import ChannelParams, slot_deltas
from ..modulation import demap_llrs
from .code import CodeSpec
from .crc import crc_check_batch
from .transform import LLR_CLIP, clip_llrs, f_exact, f_minsum, g_update

# paths x block length; beyond this a decoder instance refuses to start
MAX_PATH_ELEMENTS = 1 << 24
# bounds the (paths, symbols, candidates) gather inside the demapper
_DEMAP_CHUNK = 1 << 22


class ListCapacityError(MemoryError):
    """The requested list size exceeds the decoder's resource limit."""


@dataclass
class ListDecodeResult:
    """Candidates of one list decoding run, best metric first."""

    u: np.ndarray
    info: np.ndarray
    metrics: np.ndarray
    crc_ok: np.ndarray
    list_size: int

    def __len__(self) -> int:
        return len(self.metrics)

    def best_valid(self) -> int | None:
        """Index of the most likely candidate that passes the CRC."""
        hits = np.flatnonzero(self.crc_ok)
        return int(hits[0]) if hits.size else None


@dataclass
class DynamicListResult:
    info: np.ndarray
    u: np.ndarray
    metric: float
    crc_ok: bool
    list_size: int


def _combine(minsum: bool):
    return f_minsum if minsum else f_exact


def _check_counts(counts, spec: CodeSpec, params: ChannelParams) -> np.ndarray:
    counts = np.asarray(counts)
    if counts.shape[-2:] != (spec.n_used, params.M):
        raise ValueError(
            f"expected counts of shape (..., {spec.n_used}, {params.M}), got {counts.shape}"
        )
    if params.M != 1 << spec.m:
        raise ValueError(f"code has {spec.m} levels but M = {params.M}")
    if params.n_s == 0 and params.n_b == 0:
        raise ValueError("degenerate channel: n_s = n_b = 0")
    return counts


def _level_llrs(deltas: np.ndarray, j: int, prefix: np.ndarray, n: int) -> np.ndarray:
    """Clipped channel LLRs for level ``j``; shortened positions are certain zeros."""
    rows, n_used = prefix.shape
    out = np.full((rows, n), LLR_CLIP)
    width = max(1, deltas.shape[-1] >> j)
    step = max(1, _DEMAP_CHUNK // (n_used * width))
    for lo in range(0, rows, step):
        hi = min(rows, lo + step)
        d = deltas if deltas.ndim == 2 else deltas[lo:hi]
        out[lo:hi, :n_used] = clip_llrs(demap_llrs(d, j, prefix[lo:hi]))
    return out


# ---------------------------------------------------------------------------
# SC
# ---------------------------------------------------------------------------

def _sc(llr: np.ndarray, frozen: np.ndarray, f):
    n = llr.shape[1]
    if n == 1:
        u = ((llr[:, 0] < 0) & ~frozen[0]).astype(np.uint8)[:, None]
        return u, u
    h = n // 2
    a, b = llr[:, :h], llr[:, h:]
    ua, ca = _sc(f(a, b), frozen[:h], f)
    ub, cb = _sc(g_update(a, b, ca), frozen[h:], f)
    return np.concatenate([ua, ub], axis=1), np.concatenate([ca ^ cb, cb], axis=1)


def sc_decode(llrs, frozen, minsum: bool = False) -> np.ndarray:
    """Decide ``u`` from code-bit LLRs by successive cancellation.

    ``llrs`` has shape ``(n,)`` or ``(batch, n)``; positive LLRs favour 0.
    Frozen positions are forced to 0.
    """
    llrs = clip_llrs(llrs)
    frozen = np.asarray(frozen, dtype=bool)
    single = llrs.ndim == 1
    batch = llrs[None] if single else llrs
    if batch.shape[1] != frozen.size:
        raise ValueError("LLR and frozen-mask lengths differ")
    u, _ = _sc(batch, frozen, _combine(minsum))
    return u[0] if single else u


def sc_decode_frames(counts, spec: CodeSpec, params: ChannelParams, minsum: bool = False) -> np.ndarray:
    """Multistage SC decoding: demap level ``j``, decode it, feed it forward.

    ``counts`` has shape ``(n_used, M)`` or ``(batch, n_used, M)``.  Returns
    the decided ``u~`` words.
    """
    counts = _check_counts(counts, spec, params)
    single = counts.ndim == 2
    counts = counts[None] if single else counts
    deltas = slot_deltas(counts, params)
    B = counts.shape[0]
    f = _combine(minsum)
    prefix = np.zeros((B, spec.n_used), dtype=np.int64)
    masks = spec.level_masks()
    words = []
    for j in range(1, spec.m + 1):
        llr = _level_llrs(deltas, j, prefix, spec.n)
        u, c = _sc(llr, masks[j - 1], f)
        words.append(u)
        prefix += c[:, : spec.n_used].astype(np.int64) << (j - 1)
    u = np.concatenate(words, axis=1)
    return u[0] if single else u


# ---------------------------------------------------------------------------
# SCL
# ---------------------------------------------------------------------------

def _penalties(llr: np.ndarray, exact: bool):
    if exact:
        return np.logaddexp(0.0, -llr), np.logaddexp(0.0, llr)
    return np.maximum(-llr, 0.0), np.maximum(llr, 0.0)


def _scl_level(P0, frozen, L, metrics, f, exact):
    """List-decode one level.

    Returns the decided ``u_j`` rows, their codewords, the updated metrics and
    for every surviving path the index of the input path it descends from.
    """
    Lc, n = P0.shape
    s = n.bit_length() - 1
    P = [P0] + [None] * s
    C = [None] * (s + 1)
    u = np.zeros((Lc, n), dtype=np.uint8)
    lineage = np.arange(Lc)
    codeword = None
    for i in range(n):
        d0 = 1 if i == 0 else s - ((i & -i).bit_length() - 1)
        for d in range(d0, s + 1):
            par = P[d - 1]
            h = par.shape[1] >> 1
            if d == d0 and i:
                P[d] = g_update(par[:, :h], par[:, h:], C[d])
            else:
                P[d] = f(par[:, :h], par[:, h:])
        llr = P[s][:, 0]
        pen0, pen1 = _penalties(llr, exact)
        if frozen[i]:
            bit = np.zeros(Lc, dtype=np.uint8)
            metrics = metrics + pen0
        else:
            pm = np.stack([metrics + pen0, metrics + pen1], axis=1).ravel()
            if 2 * Lc <= L:
                keep = np.arange(2 * Lc)
            else:
                parent = np.repeat(np.arange(Lc), 2)
                hard = (llr < 0).astype(np.int8)
                disagree = np.stack([hard, 1 - hard], axis=1).ravel()
                keep = np.sort(np.lexsort((disagree, parent, pm))[:L])
            src = keep >> 1
            bit = (keep & 1).astype(np.uint8)
            metrics = pm[keep]
            P = [p[src] if p is not None else None for p in P]
            C = [c[src] if c is not None else None for c in C]
            u = u[src]
            lineage = lineage[src]
            Lc = keep.size
        u[:, i] = bit
        c = bit[:, None]
        d, node = s, i
        while node & 1:
            c = np.concatenate([C[d] ^ c, c], axis=1)
            d -= 1
            node >>= 1
        if d == 0:
            codeword = c
        else:
            C[d] = c
    return u, codeword, metrics, lineage


def scl_decode(
    counts,
    spec: CodeSpec,
    params: ChannelParams,
    list_size: int,
    *,
    minsum: bool = False,
    exact_metric: bool = False,
) -> ListDecodeResult:
    """CRC-aided successive-cancellation list decoding of one frame.

    Parameters
    ----------
    counts : ndarray, shape (n_used, M)
        Received photon counts.
    list_size : int
        Maximum number of surviving paths ``L``.

    Returns
    -------
    ListDecodeResult
        Up to ``L`` candidates sorted by metric; ties keep the lower path
        index.  ``crc_ok`` is all true when the code has no CRC.
    """
    counts = _check_counts(counts, spec, params)
    if counts.ndim != 2:
        raise ValueError("scl_decode takes a single frame")
    if list_size < 1:
        raise ValueError("list size must be >= 1")
    if list_size * spec.n > MAX_PATH_ELEMENTS:
        raise ListCapacityError(
            f"list size {list_size} with n = {spec.n} exceeds {MAX_PATH_ELEMENTS} path elements"
        )
    f = _combine(minsum)
    deltas = slot_deltas(counts, params)
    masks = spec.level_masks()
    metrics = np.zeros(1)
    prefix = np.zeros((1, spec.n_used), dtype=np.int64)
    level_words: list[np.ndarray] = []
    origins: list[np.ndarray] = []
    for j in range(1, spec.m + 1):
        P0 = _level_llrs(deltas, j, prefix, spec.n)
        u, cw, metrics, lineage = _scl_level(P0, masks[j - 1], list_size, metrics, f, exact_metric)
        origins = [o[lineage] for o in origins]
        prefix = prefix[lineage] + (cw[:, : spec.n_used].astype(np.int64) << (j - 1))
        level_words.append(u)
        origins.append(np.arange(len(metrics)))
    U = np.concatenate([w[o] for w, o in zip(level_words, origins)], axis=1)
    order = np.argsort(metrics, kind="stable")
    U, metrics = U[order], metrics[order]
    word = U[:, spec.info_positions]
    if spec.crc is not None:
        crc_ok = crc_check_batch(word, spec.crc)
    else:
        crc_ok = np.ones(len(metrics), dtype=bool)
    return ListDecodeResult(U, word[:, : spec.k_info], metrics, crc_ok, list_size)


def dynamic_list_decode(
    counts,
    spec: CodeSpec,
    params: ChannelParams,
    list_max: int,
    *,
    list_start: int = 32,
    minsum: bool = False,
    exact_metric: bool = False,
) -> DynamicListResult:
    """Restart SCL with ``L = list_start, 2 list_start, ...`` until the CRC passes.

    Stops at the first list size that yields a CRC-valid candidate and
    returns the most likely such candidate.  If none passes at ``list_max``,
    the best-metric candidate is returned with ``crc_ok=False`` and
    ``list_size=list_max``.
    """
    if spec.crc is None:
        raise ValueError("dynamic list decoding needs a CRC")
    for name, v in (("list_start", list_start), ("list_max", list_max)):
        if v < 1 or v & (v - 1):
            raise ValueError(f"{name} must be a power of two, got {v}")
    if list_max < list_start:
        raise ValueError("list_max must be >= list_start")
    L = list_start
    while True:
        res = scl_decode(counts, spec, params, L, minsum=minsum, exact_metric=exact_metric)
        idx = res.best_valid()
        if idx is not None:
            return DynamicListResult(res.info[idx], res.u[idx], float(res.metrics[idx]), True, L)
        if L >= list_max:
            return DynamicListResult(res.info[0], res.u[0], float(res.metrics[0]), False, L)
        L *= 2
