"""Baseband signal construction.

ON symbols carry cyclically extended Zadoff-Chu sequences of length
M_ZC = 132/M; each OFDM symbol packs M of them, is transformed by a 132-point
DFT (unnormalized forward), mapped onto the 132 centre subcarriers of the
grid and synthesized by a normalized inverse FFT with a normal-CP profile
scaled from the 2048-point reference (long CP on the first symbol of each
slot).  OFF symbols are exactly zero; ON samples have unit modulus, so the
average transmitted power over ON blocks is 1.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .config import LpWusConfig, LpSsConfig, WUS_SUBCARRIERS
from .errors import LpwusError, MoSkippedError
from .codec import OokFrame
from .procedures import MoSchedule

SYMBOLS_PER_SLOT = 14


@dataclass(frozen=True)
class OnSequence:
    samples: np.ndarray
    root: int
    n_cs: int
    n_zc: int


def zc_sequence(root: int, n_cs: int, n_zc: int, m_zc: int) -> np.ndarray:
    if not 1 <= root <= n_zc - 1:
        raise LpwusError(f"root {root} outside 1..{n_zc - 1}")
    n = np.arange(m_zc)
    i = (n + n_cs) % n_zc  # indices past n_zc wrap: cyclic extension
    return np.exp(-1j * np.pi * root * i * (i + 1) / n_zc)


def zc_on_sequence(c: int, cfg: LpWusConfig) -> OnSequence:
    """The c-th configured ON-sequence: root from the root list, shift maximized."""
    if not 0 <= c < cfg.N_seq:
        raise LpwusError(f"sequence index {c} outside 0..{cfg.N_seq - 1}")
    p = cfg.N_seq // cfg.N_root
    root = cfg.roots[c // p]
    n_cs = (c % p) * (cfg.n_zc // p)
    return OnSequence(zc_sequence(root, n_cs, cfg.n_zc, cfg.m_zc),
                      root=root, n_cs=n_cs, n_zc=cfg.n_zc)


def on_sequence_bank(cfg: LpWusConfig) -> np.ndarray:
    """All configured ON-sequences stacked as rows, shape (N_seq, M_ZC)."""
    return np.array([zc_on_sequence(c, cfg).samples for c in range(cfg.N_seq)])


# -- OFDM grid ----------------------------------------------------------------


@dataclass(frozen=True)
class OfdmParams:
    fft_size: int = 256
    scs_khz: int = 30

    @property
    def sample_rate_hz(self) -> float:
        return self.fft_size * self.scs_khz * 1e3

    def cp_len(self, symbol_in_slot: int) -> int:
        base = 160 if symbol_in_slot == 0 else 144
        return base * self.fft_size // 2048

    @property
    def slot_samples(self) -> int:
        return _slot_geometry(self.fft_size)[0]

    @property
    def body_offsets(self) -> tuple[int, ...]:
        """Start of each symbol body within its slot (CP already skipped)."""
        return _slot_geometry(self.fft_size)[1]

    @property
    def band_bins(self) -> np.ndarray:
        """FFT bin of each of the 132 band subcarriers, DC-centred."""
        k = np.arange(WUS_SUBCARRIERS)
        return (k - WUS_SUBCARRIERS // 2) % self.fft_size

    @classmethod
    def for_config(cls, cfg: LpWusConfig) -> "OfdmParams":
        return cls(fft_size=cfg.fft_size, scs_khz=cfg.scs_khz)


@functools.lru_cache(maxsize=8)
def _slot_geometry(fft_size: int) -> tuple[int, tuple[int, ...]]:
    offsets = []
    pos = 0
    for sym in range(SYMBOLS_PER_SLOT):
        cp = (160 if sym == 0 else 144) * fft_size // 2048
        offsets.append(pos + cp)
        pos += cp + fft_size
    return pos, tuple(offsets)


@dataclass(frozen=True)
class IqSignal:
    """Complex baseband stream with its grid bookkeeping."""

    samples: np.ndarray
    ofdm: OfdmParams
    n_slots: int
    # extra markers (e.g. which symbols carry the signal under test)
    notes: dict = field(default_factory=dict)

    @property
    def sample_rate_hz(self) -> float:
        return self.ofdm.sample_rate_hz

    def body_start(self, slot: int, symbol: int) -> int:
        return slot * self.ofdm.slot_samples + self.ofdm.body_offsets[symbol]

    def body(self, slot: int, symbol: int) -> np.ndarray:
        start = self.body_start(slot, symbol)
        return self.samples[start:start + self.ofdm.fft_size]

    def annotations(self) -> list[tuple[int, int, int, int]]:
        """(slot, symbol, body_start, body_len) for every synthesized symbol."""
        out = []
        for slot in range(self.n_slots):
            for sym in range(SYMBOLS_PER_SLOT):
                out.append((slot, sym, self.body_start(slot, sym),
                            self.ofdm.fft_size))
        return out


def synthesize(freq_symbols: dict, n_slots: int, ofdm: OfdmParams,
               notes: dict | None = None) -> IqSignal:
    """CP-OFDM synthesis of a sparse {(slot, symbol): 132-vector} grid.

    Unlisted symbols are transmitted as zeros, so the stream is contiguous
    and every (slot, symbol) position is addressable at the receiver.
    """
    total = n_slots * ofdm.slot_samples
    samples = np.zeros(total, dtype=np.complex128)
    bins = ofdm.band_bins
    sig = IqSignal(samples=samples, ofdm=ofdm, n_slots=n_slots,
                   notes=notes or {})
    for (slot, sym), spectrum in freq_symbols.items():
        if not 0 <= slot < n_slots:
            raise LpwusError(f"slot {slot} outside the synthesized stream")
        grid = np.zeros(ofdm.fft_size, dtype=np.complex128)
        grid[bins] = spectrum
        body = np.fft.ifft(grid)
        start = sig.body_start(slot, sym)
        cp = ofdm.cp_len(sym)
        samples[start:start + ofdm.fft_size] = body
        samples[start - cp:start] = body[-cp:]
    return sig


def ook_spectrum(blocks: np.ndarray) -> np.ndarray:
    """Concatenate M OOK blocks and take the 132-point forward DFT."""
    s_l = np.concatenate(blocks)
    if len(s_l) != WUS_SUBCARRIERS:
        raise LpwusError(f"OOK blocks fill {len(s_l)} samples, need "
                         f"{WUS_SUBCARRIERS}")
    return np.fft.fft(s_l)


def modulate_frame(frame: OokFrame, cfg: LpWusConfig, schedule: MoSchedule,
                   mo_index: int = 0) -> IqSignal:
    """Place one encoded frame on its monitoring occasion.

    Raises MoSkippedError when the addressed occasion was dropped by the
    skip rule, so a skip is never mistaken for an all-OFF transmission.
    """
    entry = schedule.entry(mo_index)
    if entry.dropped:
        raise MoSkippedError(f"MO {mo_index} dropped "
                             f"({len(entry.symbol_positions)} < {cfg.L} symbols)")
    if len(entry.symbol_positions) != cfg.L:
        raise LpwusError("schedule entry does not provide L symbols")
    bank = on_sequence_bank(cfg)
    zeros = np.zeros(cfg.m_zc, dtype=np.complex128)
    freq = {}
    on_counter = 0
    for l, pos in enumerate(entry.symbol_positions):
        blocks = []
        for i in range(cfg.M):
            if frame.g[l * cfg.M + i]:
                blocks.append(bank[frame.seq_indices[on_counter]])
                on_counter += 1
            else:
                blocks.append(zeros)
        freq[pos] = ook_spectrum(blocks)
    n_slots = max(p[0] for p in entry.symbol_positions) + 1
    return synthesize(freq, n_slots, OfdmParams.for_config(cfg),
                      notes={"wus_positions": entry.symbol_positions,
                             "mo_index": mo_index})


# -- LP-SS ---------------------------------------------------------------------

# Published short-sequence sets, keyed by (B, M, L); four cell sequences each.
LPSS_SEQUENCES = {
    (6, 1, 6): (
        (1, 0, 1, 0, 1, 0),
        (0, 1, 0, 1, 0, 1),
        (1, 0, 0, 1, 0, 1),
        (1, 0, 1, 0, 0, 1),
    ),
    (12, 2, 6): (
        (1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1),
        (0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 0, 1),
        (0, 1, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1),
        (0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1),
    ),
    (16, 4, 4): (
        (0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 1, 0),
        (0, 1, 1, 0, 1, 0, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0),
        (1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 1, 0, 0, 1),
        (1, 0, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0),
    ),
}


@dataclass(frozen=True)
class LpSsPattern:
    bits: tuple[int, ...]
    triple: tuple[int, int, int]
    seq_index: int


def lpss_pattern(lpss: LpSsConfig) -> LpSsPattern:
    """The configured cell's sync pattern; only tabulated triples exist."""
    if lpss.triple not in LPSS_SEQUENCES:
        raise LpwusError(f"no specified sequence set for triple {lpss.triple}")
    return LpSsPattern(bits=LPSS_SEQUENCES[lpss.triple][lpss.seq_index],
                       triple=lpss.triple, seq_index=lpss.seq_index)


def default_unspecified_on(m_zc: int, index: int) -> np.ndarray:
    """Stand-in ON samples when no root is configured: unit-modulus pseudo-noise."""
    rng = np.random.default_rng([0x1B55, m_zc, index])
    return np.exp(2j * np.pi * rng.random(m_zc))


def lpss_occasion_starts(lpss: LpSsConfig, ofdm: OfdmParams,
                         n_periods: int = 1) -> list[tuple[int, int, int, int]]:
    """(period, beam, slot, start_symbol) of every occasion in the stream."""
    spms = ofdm.scs_khz // 15
    period_slots = lpss.period_ms * spms
    offset_slots = lpss.offset_ms * spms
    out = []
    for period in range(n_periods):
        for beam in range(lpss.n_beams):
            slot = offset_slots + period * period_slots + beam // len(lpss.start_symbols)
            sym = lpss.start_symbols[beam % len(lpss.start_symbols)]
            out.append((period, beam, slot, sym))
    return out


def modulate_lpss(pat: LpSsPattern, lpss: LpSsConfig, ofdm: OfdmParams,
                  n_periods: int = 1, ook_shift: int = 0,
                  on_fill=None, extra_slots: int = 0) -> IqSignal:
    """Periodic sync-signal stream spanning ``n_periods`` periods.

    ``ook_shift`` moves every occasion by whole OOK symbols on the stream's
    OOK grid (14*M_lpss slots per slot), which may straddle OFDM-symbol and
    slot boundaries; it exists so receivers can be exercised against known
    timing errors (``extra_slots`` appends silence so large positive shifts
    stay inside the stream).  ``on_fill(m_zc, bit_index)`` supplies ON
    samples in the unspecified-ON mode (root not configured, M_lpss = 1).
    """
    m = lpss.M_lpss
    if lpss.root is not None:
        on_block = zc_sequence(lpss.root, 0, lpss.n_zc, lpss.m_zc)
        fill = lambda i: on_block
    else:
        if m != 1:
            raise LpwusError("unspecified ON-sequence mode requires M_lpss = 1")
        source = on_fill if on_fill is not None else default_unspecified_on
        fill = lambda i: source(lpss.m_zc, i)
    spms = ofdm.scs_khz // 15
    period_slots = lpss.period_ms * spms
    n_slots = (lpss.offset_ms * spms) + n_periods * period_slots + extra_slots
    # collect ON/OFF blocks per OFDM symbol across all occasions
    blocks: dict[tuple[int, int], list] = {}
    zeros = np.zeros(lpss.m_zc, dtype=np.complex128)
    for period, beam, slot, sym in lpss_occasion_starts(lpss, ofdm, n_periods):
        base_ook = (slot * SYMBOLS_PER_SLOT + sym) * m + ook_shift
        for i, bit in enumerate(pat.bits):
            g_sym, block = divmod(base_ook + i, m)
            slot_i, sym_i = divmod(g_sym, SYMBOLS_PER_SLOT)
            if not 0 <= slot_i < n_slots:
                raise LpwusError("ook_shift pushes the occasion outside the stream")
            key = (slot_i, sym_i)
            if key not in blocks:
                blocks[key] = [zeros] * m
            blocks[key][block] = fill(i) if bit else zeros
    freq = {key: ook_spectrum(np.array(blk)) for key, blk in blocks.items()}
    return synthesize(freq, n_slots, ofdm,
                      notes={"lpss_triple": pat.triple,
                             "lpss_seq_index": pat.seq_index,
                             "ook_shift": ook_shift})
