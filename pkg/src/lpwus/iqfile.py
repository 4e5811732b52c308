"""IQ sample files: little-endian float32, interleaved I,Q.

Each .iqf32 file travels with a JSON sidecar (same versioned-schema family
as the config file) recording sample rate, grid geometry and the symbol
annotations needed to re-address the stream at the receiver.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ConfigError
from .waveform import IqSignal, OfdmParams

SIDECAR_SUFFIX = ".json"
IQ_SCHEMA_VERSION = 1


def sidecar_path(iq_path) -> str:
    return str(iq_path) + SIDECAR_SUFFIX


def write_iq(iq_path, sig: IqSignal) -> str:
    """Write samples and sidecar; returns the sidecar path."""
    interleaved = np.empty(2 * len(sig.samples), dtype="<f4")
    interleaved[0::2] = sig.samples.real.astype(np.float32)
    interleaved[1::2] = sig.samples.imag.astype(np.float32)
    with open(iq_path, "wb") as fh:
        fh.write(interleaved.tobytes())
    meta = {
        "schema_version": IQ_SCHEMA_VERSION,
        "sample_rate_hz": sig.sample_rate_hz,
        "scs_khz": sig.ofdm.scs_khz,
        "fft_size": sig.ofdm.fft_size,
        "n_slots": sig.n_slots,
        "n_samples": len(sig.samples),
        "annotations": [list(a) for a in sig.annotations()],
        "notes": _jsonable(sig.notes),
    }
    side = sidecar_path(iq_path)
    with open(side, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return side


def read_iq(iq_path) -> IqSignal:
    side = sidecar_path(iq_path)
    if not os.path.exists(side):
        raise ConfigError(f"missing sidecar metadata {side}")
    with open(side, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("schema_version") != IQ_SCHEMA_VERSION:
        raise ConfigError(f"unsupported IQ schema_version "
                          f"{meta.get('schema_version')!r}", field="schema_version")
    raw = np.fromfile(iq_path, dtype="<f4")
    if len(raw) != 2 * meta["n_samples"]:
        raise ConfigError(f"{iq_path}: expected {meta['n_samples']} samples, "
                          f"file holds {len(raw) // 2}")
    samples = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    ofdm = OfdmParams(fft_size=meta["fft_size"], scs_khz=meta["scs_khz"])
    notes = meta.get("notes", {})
    if "wus_positions" in notes:
        notes["wus_positions"] = tuple(tuple(p) for p in notes["wus_positions"])
    return IqSignal(samples=samples, ofdm=ofdm, n_slots=meta["n_slots"],
                    notes=notes)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
