"""Bit-domain processing for the wake-up payload.

Chain: payload bits -> small block code -> rate matching -> Manchester line
code (the ON/OFF grid), with a parallel sequence-index encoding that rides
on the ON symbols.  Decoders for both domains operate on soft per-symbol
metrics and are deterministic (ties resolve to the lowest payload value).
"""

from __future__ import annotations

import functools
import importlib.resources
from dataclasses import dataclass

import numpy as np

from .config import LpWusConfig


@functools.lru_cache(maxsize=1)
def rm_basis() -> np.ndarray:
    """32x11 binary basis matrix of the small block code, from the data asset."""
    text = (importlib.resources.files("lpwus.data") / "rm_basis_32x11.txt").read_text()
    rows = [[int(t) for t in line.split()]
            for line in text.splitlines()
            if line.strip() and not line.startswith("#")]
    m = np.array(rows, dtype=np.uint8)
    if m.shape != (32, 11) or not np.isin(m, (0, 1)).all():
        raise ValueError("basis table asset is corrupt")
    return m


def payload_bits(codepoint: int, n_bits: int) -> np.ndarray:
    """Codepoint value as an MSB-first bit vector."""
    if not 0 <= codepoint < 2 ** n_bits:
        raise ValueError(f"codepoint {codepoint} needs more than {n_bits} bits")
    return np.array([(codepoint >> (n_bits - 1 - k)) & 1 for k in range(n_bits)],
                    dtype=np.uint8)


def payload_value(bits) -> int:
    """MSB-first bit vector back to its integer value."""
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def channel_encode(bits) -> np.ndarray:
    """1 bit -> repetition seed, 2 bits -> parity triple, 3..5 bits -> 32-bit block code."""
    b = np.asarray(bits, dtype=np.uint8)
    B = len(b)
    if not 1 <= B <= 5:
        raise ValueError(f"payload size {B} outside 1..5")
    if B == 1:
        return b.copy()
    if B == 2:
        return np.array([b[0], b[1], (b[0] + b[1]) % 2], dtype=np.uint8)
    return (rm_basis()[:, :B] @ b) % 2


def rate_match(d, E: int) -> np.ndarray:
    """Cyclic repetition/truncation of the coded bits to E positions."""
    d = np.asarray(d, dtype=np.uint8)
    if E < 1:
        raise ValueError("E must be >= 1")
    idx = np.arange(E) % len(d)
    return d[idx]


def manchester_encode(f) -> np.ndarray:
    """0 -> [1,0], 1 -> [0,1]; output has one ON symbol per input bit."""
    f = np.asarray(f, dtype=np.uint8)
    g = np.empty(2 * len(f), dtype=np.uint8)
    g[0::2] = 1 - f
    g[1::2] = f
    return g


def manchester_hard_decode(metrics) -> np.ndarray:
    """Pairwise comparison of per-symbol metrics; ties decide 1."""
    e = np.asarray(metrics, dtype=float)
    if len(e) % 2:
        raise ValueError("metric vector must pair up")
    return (e[0::2] <= e[1::2]).astype(np.uint8)


def sequence_encode(bits, n_seq: int, E: int) -> np.ndarray:
    """Sequence index per ON symbol: zero-pad before the MSB, repeat, block-split.

    With delta = log2(n_seq) bits per ON symbol, the padded payload is
    cyclically repeated to E*delta bits and read off in delta-bit blocks,
    MSB first.  n_seq = 1 degenerates to all-zero indices.
    """
    b = np.asarray(bits, dtype=np.uint8)
    if n_seq == 1:
        return np.zeros(E, dtype=np.int64)
    delta = int(np.log2(n_seq))
    if 2 ** delta != n_seq:
        raise ValueError(f"n_seq={n_seq} is not a power of two")
    pad = (-len(b)) % delta
    d_s = np.concatenate([np.zeros(pad, dtype=np.uint8), b])
    f_s = d_s[np.arange(E * delta) % len(d_s)]
    blocks = f_s.reshape(E, delta)
    weights = 1 << np.arange(delta - 1, -1, -1)
    return (blocks @ weights).astype(np.int64)


def sequence_decode(indices, n_bits: int, n_seq: int) -> np.ndarray:
    """Invert sequence_encode by per-position majority over the repetitions."""
    c = np.asarray(indices, dtype=np.int64)
    delta = int(np.log2(n_seq))
    if 2 ** delta != n_seq or delta < 1:
        raise ValueError(f"n_seq={n_seq} cannot carry bits")
    pad = (-n_bits) % delta
    n_s = n_bits + pad
    bits = ((c[:, None] >> np.arange(delta - 1, -1, -1)) & 1).reshape(-1)
    votes = np.zeros(n_s)
    counts = np.zeros(n_s)
    pos = np.arange(len(bits)) % n_s
    np.add.at(votes, pos, bits)
    np.add.at(counts, pos, 1)
    if (counts == 0).any():
        raise ValueError("not enough ON symbols to cover the payload")
    d_hat = (votes * 2 > counts).astype(np.uint8)  # ties decide 0
    return d_hat[pad:]


@dataclass(frozen=True)
class OokFrame:
    """ON/OFF grid plus the sequence index of each ON symbol."""

    g: np.ndarray            # uint8, length G = L*M
    seq_indices: np.ndarray  # int64, length E = G/2, time order of ON symbols
    L: int
    M: int

    @property
    def G(self) -> int:
        return self.L * self.M

    @property
    def E(self) -> int:
        return self.G // 2

    def __eq__(self, other):
        return (isinstance(other, OokFrame) and self.L == other.L
                and self.M == other.M and np.array_equal(self.g, other.g)
                and np.array_equal(self.seq_indices, other.seq_indices))


def encode_frame(bits, cfg: LpWusConfig) -> OokFrame:
    """Full bit-domain encoding of one payload for one configuration."""
    d = channel_encode(bits)
    f = rate_match(d, cfg.E)
    g = manchester_encode(f)
    c = sequence_encode(bits, cfg.N_seq, cfg.E)
    return OokFrame(g=g, seq_indices=c, L=cfg.L, M=cfg.M)


def candidate_patterns(n_bits: int, E: int) -> np.ndarray:
    """ON/OFF pattern of every payload value, shape (2**n_bits, 2E)."""
    pats = np.empty((2 ** n_bits, 2 * E), dtype=np.uint8)
    for value in range(2 ** n_bits):
        f = rate_match(channel_encode(payload_bits(value, n_bits)), E)
        pats[value] = manchester_encode(f)
    return pats


def ml_pattern_decode(energies, n_bits: int,
                      patterns: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Correlate per-symbol energies with every candidate ON/OFF pattern.

    Returns (best payload bits, normalized score), the score being the
    fraction of total energy falling on the hypothesized ON positions; it is
    invariant to scaling of the input.  Ties pick the lowest payload value.
    """
    e = np.asarray(energies, dtype=float)
    if patterns is None:
        patterns = candidate_patterns(n_bits, len(e) // 2)
    if patterns.shape[1] != len(e):
        raise ValueError("pattern length does not match the energy vector")
    total = float(e.sum())
    if total <= 0.0:
        return payload_bits(0, n_bits), 0.0
    scores = patterns @ e / total
    best = int(np.argmax(scores))  # argmax returns the first (lowest) maximum
    return payload_bits(best, n_bits), float(scores[best])


def rm_decode(f_soft, n_bits: int) -> np.ndarray:
    """ML decoding over all 2**n_bits codewords after rate-match combining.

    Accepts hard bits or soft metrics in [0,1]; repeated positions are summed
    before correlating with the +/-1-mapped codewords.  Ties pick the lowest
    payload value.
    """
    f = np.asarray(f_soft, dtype=float)
    n = len(channel_encode(payload_bits(0, n_bits)))
    # fold the E observations back onto the N codeword positions
    t = np.zeros(n)
    np.add.at(t, np.arange(len(f)) % n, 2.0 * f - 1.0)
    best_value, best_score = 0, -np.inf
    for value in range(2 ** n_bits):
        d = channel_encode(payload_bits(value, n_bits)).astype(float)
        score = float((2.0 * d - 1.0) @ t)
        if score > best_score:
            best_value, best_score = value, score
    return payload_bits(best_value, n_bits)
