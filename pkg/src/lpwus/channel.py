"""Impairments between transmitter and receivers.

y(t) = h * x(t - tau) * exp(j 2 pi f_cfo t) + n(t)

SNR is defined per ON OOK symbol inside the 132-subcarrier band, i.e. the
ratio of signal to noise energy the energy detector sees in one ON block
after band selection.  With unit-power ON samples that fixes the full-rate
noise variance at sigma^2 = 132 / (fft_size * snr_linear) per complex
sample, independent of M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import WUS_SUBCARRIERS
from .waveform import IqSignal

FADING_NONE = "none"
FADING_RAYLEIGH_BLOCK = "rayleigh_block"


@dataclass(frozen=True)
class ChannelProfile:
    snr_db: float | None = None          # None disables noise
    cfo_hz: float = 0.0
    timing_offset_samples: int = 0
    fading: str = FADING_NONE
    seed: int = 0

    def noise_sigma2(self, fft_size: int) -> float:
        if self.snr_db is None:
            return 0.0
        return WUS_SUBCARRIERS / (fft_size * 10.0 ** (self.snr_db / 10.0))


def apply(sig: IqSignal, prof: ChannelProfile) -> IqSignal:
    """Run one signal through the channel; same profile+seed, same output."""
    rng = np.random.default_rng(np.random.SeedSequence(prof.seed))
    x = sig.samples
    n = len(x)
    y = x

    tau = prof.timing_offset_samples
    if tau:
        shifted = np.zeros(n, dtype=np.complex128)
        if tau > 0:
            shifted[tau:] = y[:n - tau]
        else:
            shifted[:n + tau] = y[-tau:]
        y = shifted

    if prof.fading == FADING_RAYLEIGH_BLOCK:
        h = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2.0)
        y = h * y
    elif prof.fading != FADING_NONE:
        raise ValueError(f"unknown fading model {prof.fading!r}")

    if prof.cfo_hz:
        t = np.arange(n) / sig.sample_rate_hz
        y = y * np.exp(2j * np.pi * prof.cfo_hz * t)

    sigma2 = prof.noise_sigma2(sig.ofdm.fft_size)
    if sigma2 > 0.0:
        noise = rng.standard_normal(2 * n).view(np.complex128)
        noise *= np.sqrt(sigma2 / 2.0)
        noise += y
        y = noise
    elif y is x:
        y = x.copy()

    return IqSignal(samples=y, ofdm=sig.ofdm, n_slots=sig.n_slots,
                    notes=dict(sig.notes))
