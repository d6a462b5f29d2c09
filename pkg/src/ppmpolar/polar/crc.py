"""Cyclic redundancy check in Koopman notation.

Koopman writes a degree-``r`` generator as an ``r``-bit hex number holding the
coefficients of ``x^r .. x^1``; the ``+1`` term is implicit.  For example
``0x27cf`` (degree 14) expands to ``x^14 + x^11 + x^10 + x^9 + x^8 + x^7 + x^4 +
x^3 + x^2 + x + 1`` = ``0b100111110011111`` = ``0x4f9f``.

Checksums are the remainder of ``msg(x) x^r`` modulo the generator, message
bits taken most significant first, zero initial register and no final XOR.
The checksum is appended after the message, also MSB first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class CrcSpec:
    degree: int
    polynomial: int

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("CRC degree must be positive")
        if self.polynomial.bit_length() != self.degree:
            raise ValueError(
                f"Koopman polynomial {self.polynomial:#x} has width "
                f"{self.polynomial.bit_length()}, expected degree {self.degree}"
            )

    @property
    def generator(self) -> int:
        """Full generator with the implicit ``+1`` term, bit ``i`` = coefficient of ``x^i``."""
        return (self.polynomial << 1) | 1

    @classmethod
    def parse(cls, text: str) -> "CrcSpec":
        """Parse ``"hex:degree"``, e.g. ``"0x27cf:14"``."""
        try:
            poly, degree = text.split(":")
            return cls(int(degree), int(poly, 16))
        except ValueError as exc:
            raise ValueError(f"bad CRC spec {text!r}, expected hex:degree") from exc

    def __str__(self) -> str:
        return f"{self.polynomial:#x}:{self.degree}"


CRC14_27CF = CrcSpec(14, 0x27CF)
CRC16_D175 = CrcSpec(16, 0xD175)
CRC16_8D95 = CrcSpec(16, 0x8D95)


def crc_remainder(bits, crc: CrcSpec) -> np.ndarray:
    """Checksum of ``bits`` as an array of ``crc.degree`` bits."""
    r = crc.degree
    gen = crc.generator
    top = 1 << r
    reg = 0
    for b in np.asarray(bits, dtype=np.uint8).tolist():
        reg = (reg << 1) | b
        if reg & top:
            reg ^= gen
    for _ in range(r):
        reg <<= 1
        if reg & top:
            reg ^= gen
    return np.array([(reg >> (r - 1 - i)) & 1 for i in range(r)], dtype=np.uint8)


def crc_append(info_bits, crc: CrcSpec) -> np.ndarray:
    info = np.asarray(info_bits, dtype=np.uint8)
    return np.concatenate([info, crc_remainder(info, crc)])


def crc_check(bits, crc: CrcSpec) -> bool:
    """True when the trailing ``crc.degree`` bits are the checksum of the rest."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size < crc.degree:
        raise ValueError("word shorter than the CRC")
    k = bits.size - crc.degree
    return bool(np.array_equal(crc_remainder(bits[:k], crc), bits[k:]))


@lru_cache(maxsize=64)
def _checksum_matrix(k: int, crc: CrcSpec) -> np.ndarray:
    # row i: checksum of the unit message with a one in position i,
    # i.e. x^(k-1-i+r) mod g, MSB first
    r = crc.degree
    gen = crc.generator
    top = 1 << r
    rows = np.zeros((k, r), dtype=np.uint8)
    p = gen ^ top  # x^r mod g
    shifts = np.arange(r - 1, -1, -1)
    for i in range(k - 1, -1, -1):
        rows[i] = (p >> shifts) & 1
        p <<= 1
        if p & top:
            p ^= gen
    return rows


def crc_check_batch(words: np.ndarray, crc: CrcSpec) -> np.ndarray:
    """Vectorised :func:`crc_check` over the rows of ``words``."""
    words = np.asarray(words, dtype=np.uint8)
    k = words.shape[-1] - crc.degree
    if k < 0:
        raise ValueError("word shorter than the CRC")
    if k == 0:
        return np.all(words == 0, axis=-1)
    G = _checksum_matrix(k, crc).astype(np.int64)
    syndrome = (words[..., :k].astype(np.int64) @ G) & 1
    return np.all(syndrome == words[..., k:], axis=-1)
