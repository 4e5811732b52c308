"""Reference receivers and measurements.

Both receivers share one front end: per OFDM symbol the 132 band bins are
extracted and inverse-transformed back to the M_ZC-sample OOK blocks, which
makes energies directly comparable to the transmitted block energies.

The energy detector decides from per-block energies alone (pattern
correlation by default, Manchester pairwise comparison + block decoding as
the alternative path); the coherent detector locates the ON symbol in each
Manchester pair by energy and then correlates it against the configured
sequence bank.  Detection gates are scale-invariant statistics compared
against a threshold calibrated offline to a false-alarm target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import LpWusConfig, LpSsConfig, WUS_SUBCARRIERS
from .errors import LpwusError
from . import codec
from .procedures import (MoSchedule, codepoint_to_targets, expand_targets)
from .waveform import (IqSignal, LpSsPattern, SYMBOLS_PER_SLOT,
                       lpss_occasion_starts, on_sequence_bank)

RECEIVER_ED = "ed"
RECEIVER_CD = "cd"

ED_METHOD_PATTERN = "pattern"
ED_METHOD_MANCHESTER = "manchester"


@dataclass(frozen=True)
class DetectionReport:
    detected: bool
    codepoint_hat: int | None
    targets_hat: frozenset            # expanded (i_po, i_sg) pairs
    metric: float
    sync: float | None
    receiver_kind: str


@dataclass(frozen=True)
class MeasurementReport:
    lp_rssi: float
    lp_rsrp: float
    lp_rsrq: float
    normalization: str = "average"


def extract_ook_blocks(y: IqSignal, positions, m: int) -> np.ndarray:
    """Band-select and split the given OFDM symbols into their OOK blocks.

    Returns a complex array of shape (len(positions)*m, 132/m), blocks in
    transmission order.
    """
    fft_size = y.ofdm.fft_size
    offsets = np.asarray(y.ofdm.body_offsets)
    pos = np.asarray(positions)
    starts = pos[:, 0] * y.ofdm.slot_samples + offsets[pos[:, 1]]
    if starts.min() < 0 or starts.max() + fft_size > len(y.samples):
        raise LpwusError("requested symbols fall outside the stream")
    bodies = y.samples[starts[:, None] + np.arange(fft_size)]
    spectra = np.fft.fft(bodies, axis=1)[:, y.ofdm.band_bins]
    s_hat = np.fft.ifft(spectra, axis=1)
    return s_hat.reshape(len(positions) * m, WUS_SUBCARRIERS // m)


def ed_demodulate(y: IqSignal, cfg: LpWusConfig, schedule: MoSchedule,
                  mo_index: int = 0) -> np.ndarray:
    """Per-OOK-symbol energies over the scheduled WUS symbols, length G."""
    entry = schedule.entry(mo_index)
    if entry.dropped or len(entry.symbol_positions) != cfg.L:
        raise LpwusError(f"MO {mo_index} does not locate {cfg.L} WUS symbols")
    blocks = extract_ook_blocks(y, entry.symbol_positions, cfg.M)
    return np.sum(np.abs(blocks) ** 2, axis=1)


def manchester_contrast(energies) -> float:
    """Mean normalized ON/OFF contrast over the line-code pairs, in [0,1]."""
    e = np.asarray(energies, dtype=float)
    a, b = e[0::2], e[1::2]
    s = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(s > 0, np.abs(a - b) / s, 0.0)
    return float(np.mean(c))


def pattern_score(energies, n_bits: int) -> float:
    """Best normalized pattern-correlation score over all candidate payloads."""
    _, score = codec.ml_pattern_decode(energies, n_bits)
    return score


def detection_statistic(energies, cfg: LpWusConfig,
                        method: str = ED_METHOD_PATTERN) -> float:
    if method == ED_METHOD_PATTERN:
        return pattern_score(energies, cfg.payload_bits)
    if method == ED_METHOD_MANCHESTER:
        return manchester_contrast(energies)
    raise ValueError(f"unknown ED method {method!r}")


def _report(cfg: LpWusConfig, detected: bool, value: int | None, metric: float,
            kind: str) -> DetectionReport:
    if not detected or value is None:
        return DetectionReport(False, None, frozenset(), metric, None, kind)
    if value < cfg.n_codepoints:
        targets = expand_targets(codepoint_to_targets(value, cfg), cfg)
    else:
        targets = frozenset()  # decodable payload outside the configured table
    return DetectionReport(True, value, targets, metric, 0.0, kind)


def ed_decode(energies, cfg: LpWusConfig, far_threshold: float | None = None,
              method: str = ED_METHOD_PATTERN) -> DetectionReport:
    """Gate on the scale-invariant statistic, then decode the payload."""
    e = np.asarray(energies, dtype=float)
    if len(e) != cfg.G:
        raise LpwusError(f"expected {cfg.G} energies, got {len(e)}")
    if float(e.sum()) <= 0.0:
        return DetectionReport(False, None, frozenset(), 0.0, None, RECEIVER_ED)
    stat = detection_statistic(e, cfg, method)
    threshold = far_threshold if far_threshold is not None else cfg.ed_threshold
    if threshold is not None and stat <= threshold:
        return DetectionReport(False, None, frozenset(), stat, None, RECEIVER_ED)
    if method == ED_METHOD_PATTERN:
        bits, _ = codec.ml_pattern_decode(e, cfg.payload_bits)
    else:
        f_hat = codec.manchester_hard_decode(e)
        bits = codec.rm_decode(f_hat, cfg.payload_bits)
    return _report(cfg, True, codec.payload_value(bits), stat, RECEIVER_ED)


def cd_decode(y: IqSignal, cfg: LpWusConfig, schedule: MoSchedule,
              mo_index: int = 0,
              threshold: float | None = None) -> DetectionReport:
    """Correlate ON symbols against the sequence bank and invert the encoding."""
    entry = schedule.entry(mo_index)
    if entry.dropped or len(entry.symbol_positions) != cfg.L:
        raise LpwusError(f"MO {mo_index} does not locate {cfg.L} WUS symbols")
    blocks = extract_ook_blocks(y, entry.symbol_positions, cfg.M)
    return cd_decode_blocks(blocks, cfg, threshold)


def cd_decode_blocks(blocks: np.ndarray, cfg: LpWusConfig,
                     threshold: float | None = None) -> DetectionReport:
    """Coherent decoding from already-extracted OOK blocks (shape (G, M_ZC))."""
    if cfg.N_seq < 2:
        raise LpwusError("coherent detection needs N_seq >= 2")
    energies = np.sum(np.abs(blocks) ** 2, axis=1)
    if float(energies.sum()) <= 0.0:
        return DetectionReport(False, None, frozenset(), 0.0, None, RECEIVER_CD)
    # the line code puts exactly one ON symbol in each pair; take the stronger
    pair_energy = energies.reshape(-1, 2)
    on_slot = (pair_energy[:, 0] <= pair_energy[:, 1]).astype(int)
    on_rows = 2 * np.arange(cfg.E) + on_slot
    bank = on_sequence_bank(cfg)
    corr = np.abs(blocks[on_rows] @ bank.conj().T)        # (E, N_seq)
    c_hat = np.argmax(corr, axis=1)
    norms = (np.linalg.norm(blocks[on_rows], axis=1)
             * np.linalg.norm(bank[c_hat], axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        cosines = np.where(norms > 0, corr[np.arange(cfg.E), c_hat] / norms, 0.0)
    metric = float(np.mean(cosines))
    thr = threshold if threshold is not None else cfg.cd_threshold
    if thr is not None and metric <= thr:
        return DetectionReport(False, None, frozenset(), metric, None, RECEIVER_CD)
    bits = codec.sequence_decode(c_hat, cfg.payload_bits, cfg.N_seq)
    return _report(cfg, True, codec.payload_value(bits), metric, RECEIVER_CD)


# -- LP-SS sync and measurements ------------------------------------------------


def ook_energy_range(y: IqSignal, m: int, sym_lo: int, sym_hi: int) -> np.ndarray:
    """Energies of the OOK slots of symbols [sym_lo, sym_hi), grid order."""
    positions = [divmod(g, SYMBOLS_PER_SLOT) for g in range(sym_lo, sym_hi)]
    blocks = extract_ook_blocks(y, positions, m)
    return np.sum(np.abs(blocks) ** 2, axis=1)


def ook_energy_grid(y: IqSignal, m: int) -> np.ndarray:
    """Energies of every OOK slot of the stream (14*m per slot), grid order."""
    return ook_energy_range(y, m, 0, y.n_slots * SYMBOLS_PER_SLOT)


def sliding_pearson(energies: np.ndarray, pattern: np.ndarray,
                    lags: np.ndarray) -> np.ndarray:
    """Pearson correlation of the +/-1 pattern with each lagged energy window.

    Lags whose window would run past either end of the sequence score -inf;
    flat windows score 0.
    """
    pc = 2.0 * np.asarray(pattern, dtype=float) - 1.0
    n = len(pc)
    pc = pc - pc.mean()
    p_norm = np.linalg.norm(pc)
    e = np.asarray(energies, dtype=float)
    lags = np.asarray(lags)
    out = np.full(len(lags), -np.inf)
    valid = (lags >= 0) & (lags + n <= len(e))
    if not valid.any():
        return out
    windows = np.lib.stride_tricks.sliding_window_view(e, n)[lags[valid]]
    wc = windows - windows.mean(axis=1, keepdims=True)
    denom = p_norm * np.linalg.norm(wc, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(denom > 0.0, wc @ pc / denom, 0.0)
    out[valid] = rho
    return out


def sync_core(energies: np.ndarray, pattern, nominal: int,
              search: int) -> tuple[int, float]:
    """argmax of the sliding correlation within +/- ``search`` OOK symbols.

    Equal maxima resolve to the smallest lag, which keeps the estimate exact
    when a periodic copy of the pattern also falls inside the window.
    """
    lags = np.arange(nominal - search, nominal + search + 1)
    rho = sliding_pearson(np.asarray(energies, dtype=float),
                          np.asarray(pattern, dtype=float), lags)
    best = int(np.argmax(rho))  # first maximum = smallest lag
    peak = float(rho[best])
    if peak == -np.inf:
        return 0, 0.0
    return int(lags[best] - nominal), peak


def lpss_sync(y: IqSignal, pat: LpSsPattern, lpss: LpSsConfig,
              beam: int = 0, period: int = 0,
              search: int | None = None) -> tuple[int, float]:
    """Estimate the timing offset of an occasion, in OOK symbols.

    The stream must span at least two periods; the search defaults to half
    a period either side of the occasion's nominal position (one full period
    of candidates).
    """
    spms = y.ofdm.scs_khz // 15
    period_ook = lpss.period_ms * spms * SYMBOLS_PER_SLOT * lpss.M_lpss
    if y.n_slots * SYMBOLS_PER_SLOT * lpss.M_lpss < 2 * period_ook:
        raise LpwusError("stream shorter than two sync-signal periods")
    starts = {(p, b): (slot * SYMBOLS_PER_SLOT + sym) * lpss.M_lpss
              for p, b, slot, sym in lpss_occasion_starts(lpss, y.ofdm,
                                                          period + 1)}
    nominal = starts[(period, beam)]
    if search is None:
        search = period_ook // 2
    # only the symbols the lag windows can touch need demodulating
    m = lpss.M_lpss
    total_syms = y.n_slots * SYMBOLS_PER_SLOT
    sym_lo = max(0, (nominal - search) // m)
    sym_hi = min(total_syms, -((nominal + search + len(pat.bits)) // -m))
    energies = ook_energy_range(y, m, sym_lo, sym_hi)
    return sync_core(energies, pat.bits, nominal - sym_lo * m, search)


def occasion_energies(y: IqSignal, lpss: LpSsConfig, beam: int = 0,
                      period: int = 0) -> np.ndarray:
    """Per-OOK-symbol energies of one occasion, length B_lpss."""
    hits = [t for t in lpss_occasion_starts(lpss, y.ofdm, period + 1)
            if t[0] == period and t[1] == beam]
    if not hits:
        raise LpwusError(f"no occasion for beam {beam}, period {period}")
    _, _, slot, sym = hits[0]
    positions = [(slot, sym + k) for k in range(lpss.L_lpss)]
    blocks = extract_ook_blocks(y, positions, lpss.M_lpss)
    return np.sum(np.abs(blocks) ** 2, axis=1)


NORMALIZATION_AVERAGE = "average"   # total power averaged over all OOK symbols
NORMALIZATION_SUM = "sum"           # total power scaled by the ON-symbol count


def lp_measure(energies, pat: LpSsPattern,
               normalization: str = NORMALIZATION_AVERAGE) -> MeasurementReport:
    """Serving-cell measurements over one occasion.

    ``average`` divides the total received power by all B_lpss symbols, under
    which a clean balanced occasion measures RSRQ = 2.  ``sum`` divides the
    same total by the ON-symbol count instead, which keeps RSRQ <= 1.  Either
    way RSRQ is exactly RSRP / RSSI of the reported values.
    """
    e = np.asarray(energies, dtype=float)
    bits = np.asarray(pat.bits)
    if len(e) != len(bits):
        raise LpwusError(f"expected {len(bits)} symbol energies, got {len(e)}")
    n_on = int(bits.sum())
    rsrp = float(e[bits == 1].sum() / n_on)
    if normalization == NORMALIZATION_AVERAGE:
        rssi = float(e.sum() / len(bits))
    elif normalization == NORMALIZATION_SUM:
        rssi = float(e.sum() / n_on)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    rsrq = rsrp / rssi if rssi > 0.0 else 0.0
    return MeasurementReport(lp_rssi=rssi, lp_rsrp=rsrp, lp_rsrq=rsrq,
                             normalization=normalization)
