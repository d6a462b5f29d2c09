"""Multilevel polar code description, encoder and the code-file format.

The encoder input ``u~`` has ``m * n`` positions; positions ``(j-1)*n ..
j*n - 1`` form the word ``u_j`` of bit level ``j``.  Information bits, with the
CRC appended, fill the unfrozen positions of ``u~`` in ascending order.

Code file layout (plain text)::

    # ppmpolar code v1
    # n 1024
    # m 6
    # M 64
    # n_used 1024
    # k_info 3072
    # rate 0.5
    # n_s 1.9...
    # n_b 0.2
    # crc 0x27cf:14
    # method mi-dga
    # seed 1
    # frozen 3058
    17
    ...

Header lines start with ``#`` and hold ``key value``; every other line is a
0-based frozen index, sorted ascending.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..modulation import labels_to_positions
from .crc import CrcSpec, crc_append
from .transform import is_power_of_two, polar_transform

FILE_MAGIC = "ppmpolar code v1"


@dataclass(eq=False)
class CodeSpec:
    """A multilevel polar code.

    Parameters
    ----------
    n : int
        Per-level block length (power of two).
    m : int
        Number of bit levels, ``log2 M``.
    frozen_mask : ndarray of bool, shape (m * n,)
        True where ``u~`` is frozen to zero.
    k_info : int
        Information bits per frame, CRC excluded.
    crc : CrcSpec or None
    n_used : int, optional
        PPM symbols actually transmitted.  The trailing ``n - n_used``
        positions of every level are shortened and must be frozen.
    """

    n: int
    m: int
    frozen_mask: np.ndarray
    k_info: int
    crc: CrcSpec | None = None
    n_used: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not is_power_of_two(self.n):
            raise ValueError(f"n must be a power of two, got {self.n}")
        if self.m < 1:
            raise ValueError("need at least one level")
        self.frozen_mask = np.asarray(self.frozen_mask, dtype=bool)
        if self.frozen_mask.shape != (self.m * self.n,):
            raise ValueError(f"frozen mask must have {self.m * self.n} entries")
        if self.n_used is None:
            self.n_used = self.n
        if not 1 <= self.n_used <= self.n:
            raise ValueError("n_used must lie in 1..n")
        unfrozen = int((~self.frozen_mask).sum())
        if unfrozen != self.k_info + self.crc_bits:
            raise ValueError(
                f"{unfrozen} unfrozen positions but k_info + crc = {self.k_info + self.crc_bits}"
            )
        if not self.frozen_mask.reshape(self.m, self.n)[:, self.n_used:].all():
            raise ValueError("shortened positions must be frozen")

    @property
    def crc_bits(self) -> int:
        return self.crc.degree if self.crc is not None else 0

    @property
    def length(self) -> int:
        """Transmitted code bits per frame."""
        return self.m * self.n_used

    @property
    def rate(self) -> float:
        return self.k_info / self.length

    @property
    def info_positions(self) -> np.ndarray:
        return np.flatnonzero(~self.frozen_mask)

    def level_masks(self) -> np.ndarray:
        return self.frozen_mask.reshape(self.m, self.n)

    def extract_info(self, u: np.ndarray) -> np.ndarray:
        """Information bits (CRC stripped) from decided ``u~`` words."""
        return np.asarray(u)[..., self.info_positions[: self.k_info]]


def frozen_from_order(order, count: int, total: int) -> np.ndarray:
    """Mask freezing the first ``count`` indices of an unreliability ordering."""
    mask = np.zeros(total, dtype=bool)
    mask[np.asarray(order)[:count]] = True
    return mask


def build_u(info_bits, spec: CodeSpec) -> np.ndarray:
    info = np.asarray(info_bits, dtype=np.uint8)
    if info.shape[-1] != spec.k_info:
        raise ValueError(f"expected {spec.k_info} information bits, got {info.shape[-1]}")
    word = crc_append(info, spec.crc) if spec.crc is not None else info
    u = np.zeros(spec.m * spec.n, dtype=np.uint8)
    u[spec.info_positions] = word
    return u


def encode(info_bits, spec: CodeSpec):
    """Encode one frame.

    Returns
    -------
    codewords : ndarray, shape (m, n_used)
        ``c_j = u_j F^{(x) log2 n}`` per level, shortened positions dropped.
    positions : ndarray, shape (n_used,)
        0-based pulse slot of each PPM symbol, label ``b_i = c_1i .. c_mi``.
    """
    u = build_u(info_bits, spec)
    codewords = polar_transform(u.reshape(spec.m, spec.n))
    if np.any(codewords[:, spec.n_used:]):
        raise AssertionError("shortened positions carry non-zero code bits")
    codewords = codewords[:, : spec.n_used]
    return codewords, labels_to_positions(codewords)


def write_code_file(path, spec: CodeSpec, header: dict | None = None) -> None:
    """Write ``spec`` in the plain-text code-file format."""
    fields = {
        "n": spec.n,
        "m": spec.m,
        "M": 1 << spec.m,
        "n_used": spec.n_used,
        "k_info": spec.k_info,
        "rate": repr(spec.rate),
        "crc": str(spec.crc) if spec.crc is not None else "none",
    }
    fields.update(spec.meta)
    fields.update(header or {})
    frozen = np.flatnonzero(spec.frozen_mask)
    fields["frozen"] = frozen.size
    lines = [f"# {FILE_MAGIC}"]
    lines += [f"# {k} {v}" for k, v in fields.items()]
    lines += [str(int(i)) for i in frozen]
    Path(path).write_text("\n".join(lines) + "\n")


def read_code_file(path) -> CodeSpec:
    text = Path(path).read_text()
    header: dict[str, str] = {}
    frozen: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split(None, 1)
            if len(parts) == 2:
                header[parts[0]] = parts[1].strip()
            continue
        frozen.append(int(line))
    try:
        n, m, k_info = int(header["n"]), int(header["m"]), int(header["k_info"])
    except KeyError as exc:
        raise ValueError(f"code file {path} lacks header field {exc}") from None
    if frozen != sorted(frozen):
        raise ValueError("frozen indices must be sorted")
    if "frozen" in header and int(header["frozen"]) != len(frozen):
        raise ValueError("frozen count does not match header")
    mask = np.zeros(m * n, dtype=bool)
    mask[frozen] = True
    crc = None if header.get("crc", "none") == "none" else CrcSpec.parse(header["crc"])
    known = {"n", "m", "M", "n_used", "k_info", "rate", "crc", "frozen"}
    meta = {k: v for k, v in header.items() if k not in known}
    return CodeSpec(n, m, mask, k_info, crc, int(header.get("n_used", n)), meta)
