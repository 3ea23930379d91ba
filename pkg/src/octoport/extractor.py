"""Toeplitz-hash randomness extraction of ADC samples.

Bits are handled as numpy ``uint8`` arrays of 0/1.  The Toeplitz matrix
for an ``n``-bit input and ``k``-bit output is defined by a seed of
``n + k - 1`` bits through T[i, j] = seed[i - j + n - 1].

Bit order: each ADC code contributes ``n_bits`` bits, least significant
first; samples are concatenated channel 1 first.  Byte packing is
little-endian within each byte.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy import special

from .entropy import ResolvedAdc
from .errors import DomainError

__all__ = [
    "required_output_length",
    "toeplitz_matrix",
    "toeplitz_extract",
    "extract_blocks",
    "adc_codes",
    "codes_to_bits",
    "pack_bits",
    "unpack_bits",
    "read_bits",
    "write_bits",
    "monobit_test",
    "runs_test",
]


def required_output_length(m_samples: int, h_bits: float, security_eps: float,
                           bits_per_sample: int | None = None) -> int:
    """Leftover-hash output length floor(m h - 2 log2(1/eps)), clamped to [0, m * bits_per_sample]."""
    if not 0 < security_eps < 1:
        raise DomainError("security_eps must lie in (0, 1)")
    if m_samples < 0:
        raise DomainError("m_samples must be non-negative")
    h = max(float(h_bits), 0.0)
    if bits_per_sample is not None:
        h = min(h, float(bits_per_sample))
    k = math.floor(m_samples * h - 2.0 * math.log2(1.0 / security_eps))
    return max(k, 0)


def _bits(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if a.size and not np.all((a == 0) | (a == 1)):
        raise DomainError(f"{name} must contain only 0 and 1")
    return a.astype(np.uint8)


def _to_int(bits: np.ndarray) -> int:
    """Integer whose bit k is bits[k]."""
    if bits.size == 0:
        return 0
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def toeplitz_matrix(seed_bits, in_len: int, out_len: int) -> np.ndarray:
    """Dense Toeplitz matrix (for small cases and testing)."""
    seed = _bits(seed_bits, "seed")
    if seed.size != in_len + out_len - 1:
        raise DomainError(f"seed needs {in_len + out_len - 1} bits, got {seed.size}")
    i = np.arange(out_len)[:, None]
    j = np.arange(in_len)[None, :]
    return seed[i - j + in_len - 1]


def toeplitz_extract(raw_bits, seed_bits, out_len: int) -> np.ndarray:
    """out = T(seed) raw over GF(2).

    Each output bit is the parity of a shifted seed window ANDed with the
    reversed input, computed on Python integers (word-level operations).
    """
    raw = _bits(raw_bits, "raw")
    seed = _bits(seed_bits, "seed")
    n = raw.size
    if out_len < 0:
        raise DomainError("out_len must be non-negative")
    if seed.size != n + out_len - 1:
        raise DomainError(f"seed needs {n + out_len - 1} bits, got {seed.size}")
    if out_len == 0 or n == 0:
        return np.zeros(out_len, dtype=np.uint8)
    s = _to_int(seed)
    r = _to_int(raw[::-1])
    mask = (1 << n) - 1
    out = np.empty(out_len, dtype=np.uint8)
    for i in range(out_len):
        out[i] = ((s >> i) & mask & r).bit_count() & 1
    return out


def extract_blocks(raw_bits, seed_bits, block_in: int, block_out: int) -> np.ndarray:
    """Apply the same Toeplitz hash to consecutive ``block_in``-bit blocks.

    A trailing partial block is discarded.
    """
    raw = _bits(raw_bits, "raw")
    if block_in <= 0 or block_out < 0:
        raise DomainError("block sizes must be positive")
    n_blocks = raw.size // block_in
    parts = [
        toeplitz_extract(raw[b * block_in : (b + 1) * block_in], seed_bits, block_out)
        for b in range(n_blocks)
    ]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)


def adc_codes(x, adc: ResolvedAdc) -> np.ndarray:
    """Integer ADC codes 0 .. 2**n - 1; saturated samples clip to the end codes."""
    x = np.asarray(getattr(x, "x", x), dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    ch = x.shape[1]
    codes = np.floor((x - adc.lower[:ch]) / adc.delta[:ch])
    return np.clip(codes, 0, 2**adc.n_bits - 1).astype(np.uint64)


def codes_to_bits(codes, n_bits: int) -> np.ndarray:
    """Flatten codes row by row (channel 1 first), n_bits per code, LSB first."""
    c = np.asarray(codes, dtype=np.uint64).ravel()
    shifts = np.arange(n_bits, dtype=np.uint64)
    return ((c[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8).ravel()


def pack_bits(bits) -> bytes:
    return np.packbits(_bits(bits, "bits"), bitorder="little").tobytes()


def unpack_bits(data: bytes, n_bits: int | None = None) -> np.ndarray:
    b = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    return b if n_bits is None else b[:n_bits]


def write_bits(path: str | Path, bits, hex_output: bool = False) -> None:
    data = pack_bits(bits)
    if hex_output:
        Path(path).write_text(data.hex() + "\n")
    else:
        Path(path).write_bytes(data)


def read_bits(path: str | Path, n_bits: int | None = None) -> np.ndarray:
    return unpack_bits(Path(path).read_bytes(), n_bits)


def monobit_test(bits) -> float:
    """Frequency test p-value: erfc(|sum(2b - 1)| / sqrt(2 n))."""
    b = _bits(bits, "bits")
    if b.size == 0:
        raise DomainError("empty bit string")
    s = abs(int(2 * int(b.sum()) - b.size))
    return float(special.erfc(s / math.sqrt(2.0 * b.size)))


def runs_test(bits) -> float:
    """Runs test p-value; 0 when the frequency prerequisite fails."""
    b = _bits(bits, "bits")
    n = b.size
    if n < 2:
        raise DomainError("need at least two bits")
    pi = b.mean()
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return 0.0
    v = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    num = abs(v - 2.0 * n * pi * (1 - pi))
    return float(special.erfc(num / (2.0 * math.sqrt(2.0 * n) * pi * (1 - pi))))
