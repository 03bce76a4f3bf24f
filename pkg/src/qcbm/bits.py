"""Bit-string <-> integer encoding shared by every module.

Convention: qubit 0 is the most significant bit of the basis-state
integer. A measured sample of an n-qubit register is therefore the
integer ``sum(b_j << (n - 1 - j))`` for bit values ``b_j``.
"""

from __future__ import annotations

import numpy as np


def bit_matrix(n: int) -> np.ndarray:
    """(2^n, n) array of bit values for every basis state, qubit 0 first."""
    basis = np.arange(1 << n)
    shifts = n - 1 - np.arange(n)
    return ((basis[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def int_to_bits(x: int, n: int) -> np.ndarray:
    return ((x >> (n - 1 - np.arange(n))) & 1).astype(np.uint8)


def bits_to_int(bits) -> int:
    bits = np.asarray(bits)
    n = bits.shape[-1]
    weights = 1 << (n - 1 - np.arange(n))
    return int(bits @ weights) if bits.ndim == 1 else bits @ weights


def format_bitstring(x: int, n: int) -> str:
    return format(x, f"0{n}b")


def parse_bitstring(s: str) -> int:
    return int(s, 2)


def hamming_weight(values: np.ndarray) -> np.ndarray:
    """Population count of each (non-negative) integer entry."""
    values = np.asarray(values, dtype=np.int64)
    count = np.zeros_like(values)
    while values.any():
        count += values & 1
        values = values >> 1
    return count
