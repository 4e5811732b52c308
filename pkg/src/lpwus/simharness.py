"""Monte-Carlo orchestration: sweeps, threshold calibration, golden vectors.

Every trial is a pure function of (master_seed, point index, trial index),
so results are reproducible bit-for-bit at any worker count and trial order.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import channel, codec, receiver, waveform
from .config import LpWusConfig, LpSsConfig
from .errors import LpwusError
from .procedures import codepoint_to_targets, expand_targets, resolve_mos
from .iqfile import write_iq

SCENARIO_WUS = "wus_present"
SCENARIO_NOISE = "noise_only"
SCENARIO_SYNC = "lpss_sync"

AXIS_SNR = "snr_db"
AXIS_CFO = "cfo_hz"
AXIS_TIMING = "timing"

CSV_COLUMNS = ("axis", "value", "receiver", "scenario", "mdr", "far",
               "sync_rmse", "ci_lo", "ci_hi", "n_trials", "complete")


@dataclass(frozen=True)
class SweepSpec:
    cfg: LpWusConfig
    lpss: LpSsConfig
    axis: str = AXIS_SNR
    values: tuple[float, ...] = (10.0,)
    n_trials: int = 100
    receivers: tuple[str, ...] = (receiver.RECEIVER_ED,)
    master_seed: int = 0
    scenario: str = SCENARIO_WUS
    payload_policy: str = "cycle"          # or "fixed"
    fixed_codepoint: int = 0
    snr_db: float | None = 10.0            # base channel, axis overrides one
    cfo_hz: float = 0.0
    timing_offset_samples: int = 0
    fading: str = channel.FADING_NONE
    ed_method: str = receiver.ED_METHOD_PATTERN
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "receivers", tuple(self.receivers))
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.axis not in (AXIS_SNR, AXIS_CFO, AXIS_TIMING):
            raise ValueError(f"unknown axis {self.axis!r}")
        if self.scenario not in (SCENARIO_WUS, SCENARIO_NOISE, SCENARIO_SYNC):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.payload_policy not in ("cycle", "fixed"):
            raise ValueError(f"unknown payload policy {self.payload_policy!r}")


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    receiver: str
    scenario: str
    mdr: float
    far: float
    sync_rmse: float
    ci_lo: float
    ci_hi: float
    n_trials: int
    elapsed: float
    complete: bool = True


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepRow, ...]

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            lines.append(",".join([
                r.axis, _fmt(r.value), r.receiver, r.scenario, _fmt(r.mdr),
                _fmt(r.far), _fmt(r.sync_rmse), _fmt(r.ci_lo), _fmt(r.ci_hi),
                str(r.n_trials), "1" if r.complete else "0",
            ]))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial rate; good at small counts."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return (lo, hi)


def trial_seed(master_seed: int, point_index: int, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed,
                                  spawn_key=(point_index, trial_index))


def _profile_for(spec: SweepSpec, value: float, seed: int) -> channel.ChannelProfile:
    prof = dict(snr_db=spec.snr_db, cfo_hz=spec.cfo_hz,
                timing_offset_samples=spec.timing_offset_samples,
                fading=spec.fading, seed=seed)
    if spec.axis == AXIS_SNR:
        prof["snr_db"] = value
    elif spec.axis == AXIS_CFO:
        prof["cfo_hz"] = value
    else:
        prof["timing_offset_samples"] = int(value)
    return channel.ChannelProfile(**prof)


class _Engine:
    """Per-sweep precomputation shared by all trials."""

    def __init__(self, spec: SweepSpec):
        self.spec = spec
        cfg, lpss = spec.cfg, spec.lpss
        if spec.scenario in (SCENARIO_WUS, SCENARIO_NOISE):
            self.schedule = resolve_mos(cfg)
            entry = self.schedule.entry(0)
            if entry.dropped:
                raise LpwusError("first MO is dropped under this configuration")
            self.positions = entry.symbol_positions
            if spec.payload_policy == "cycle":
                self.codepoints = list(range(cfg.n_codepoints))
            else:
                self.codepoints = [spec.fixed_codepoint]
            self.tx = {}
            if spec.scenario == SCENARIO_WUS:
                for c in self.codepoints:
                    frame = codec.encode_frame(
                        codec.payload_bits(c, cfg.payload_bits), cfg)
                    self.tx[c] = waveform.modulate_frame(frame, cfg, self.schedule)
                self.targets = {c: expand_targets(codepoint_to_targets(c, cfg), cfg)
                                for c in self.codepoints}
            else:
                self.tx_template = waveform.synthesize(
                    {}, max(p[0] for p in self.positions) + 1,
                    waveform.OfdmParams.for_config(cfg))
        else:
            self.pattern = waveform.lpss_pattern(lpss)
            self.ofdm = waveform.OfdmParams.for_config(cfg)
            spms = self.ofdm.scs_khz // 15
            self.period_ook = (lpss.period_ms * spms
                               * waveform.SYMBOLS_PER_SLOT * lpss.M_lpss)
            # negative shifts must not move the first occasion off the stream,
            # and injected offsets stay clear of the search-window edges
            first_ook = ((lpss.offset_ms * spms * waveform.SYMBOLS_PER_SLOT
                          + lpss.start_symbols[0]) * lpss.M_lpss)
            self.offset_range = min(self.period_ook // 4, first_ook)
            if self.offset_range < 1:
                raise LpwusError("lpss offset_ms leaves no room for timing error "
                                 "injection; increase it")

    # -- one trial ----------------------------------------------------------

    def run_trial(self, point_index: int, value: float, trial_index: int) -> dict:
        spec = self.spec
        seeds = trial_seed(spec.master_seed, point_index, trial_index)
        rng = np.random.default_rng(seeds)
        chan_seed_entropy = int(rng.integers(0, 2 ** 63))
        if spec.scenario == SCENARIO_SYNC:
            return self._sync_trial(value, rng, chan_seed_entropy)
        prof = _profile_for(spec, value, chan_seed_entropy)
        cfg = spec.cfg
        if spec.scenario == SCENARIO_WUS:
            c = self.codepoints[trial_index % len(self.codepoints)]
            y = channel.apply(self.tx[c], prof)
        else:
            c = None
            y = channel.apply(self.tx_template, prof)
        blocks = receiver.extract_ook_blocks(y, self.positions, cfg.M)
        energies = np.sum(np.abs(blocks) ** 2, axis=1)
        out = {}
        for kind in spec.receivers:
            if kind == receiver.RECEIVER_ED:
                rep = receiver.ed_decode(energies, cfg, method=spec.ed_method)
            else:
                rep = receiver.cd_decode_blocks(blocks, cfg)
            if spec.scenario == SCENARIO_WUS:
                ok = rep.detected and self.targets[c] <= rep.targets_hat
                out[kind] = {"missed": not ok}
            else:
                out[kind] = {"fired": rep.detected}
        return out

    def _sync_trial(self, value: float, rng, chan_seed: int) -> dict:
        spec = self.spec
        offset = int(rng.integers(-self.offset_range, self.offset_range + 1))
        sig = waveform.modulate_lpss(self.pattern, spec.lpss, self.ofdm,
                                     n_periods=2, ook_shift=offset)
        prof = _profile_for(spec, value, chan_seed)
        y = channel.apply(sig, prof)
        # sync against the second occasion so the search window stays in-stream
        est, peak = receiver.lpss_sync(y, self.pattern, spec.lpss, period=1)
        err = est - offset
        return {kind: {"sync_err": float(err), "peak": peak}
                for kind in spec.receivers}


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Run the full sweep; deterministic given spec.master_seed."""
    engine = _Engine(spec)
    rows: list[SweepRow] = []
    for point_index, value in enumerate(spec.values):
        t0 = time.perf_counter()
        try:
            outcomes = _run_point(engine, point_index, value, spec)
            interrupted = False
        except KeyboardInterrupt:
            # aggregate the trials that did finish and stop the sweep
            outcomes = [o for o in getattr(engine, "_partial", []) if o]
            interrupted = True
        elapsed = time.perf_counter() - t0
        if outcomes:
            rows.extend(_aggregate(spec, value, outcomes, elapsed,
                                   complete=not interrupted))
        if interrupted:
            break
    return SweepResult(spec=spec, rows=tuple(rows))


def _run_point(engine: _Engine, point_index: int, value: float,
               spec: SweepSpec) -> list[dict]:
    indices = range(spec.n_trials)
    engine._partial = []
    if spec.workers <= 1:
        for t in indices:
            engine._partial.append(engine.run_trial(point_index, value, t))
        return engine._partial
    outcomes: list[dict | None] = [None] * spec.n_trials
    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        for t, res in zip(indices, pool.map(
                lambda i: engine.run_trial(point_index, value, i), indices)):
            outcomes[t] = res
    return outcomes  # type: ignore[return-value]


def _aggregate(spec: SweepSpec, value: float, outcomes: list[dict],
               elapsed: float, complete: bool = True) -> list[SweepRow]:
    rows = []
    n = len(outcomes)
    for kind in spec.receivers:
        mdr = far = rmse = float("nan")
        ci = (float("nan"), float("nan"))
        if spec.scenario == SCENARIO_WUS:
            k = sum(1 for o in outcomes if o[kind]["missed"])
            mdr = k / n
            ci = wilson_interval(k, n)
        elif spec.scenario == SCENARIO_NOISE:
            k = sum(1 for o in outcomes if o[kind]["fired"])
            far = k / n
            ci = wilson_interval(k, n)
        else:
            errs = np.array([o[kind]["sync_err"] for o in outcomes])
            rmse = float(np.sqrt(np.mean(errs ** 2)))
        rows.append(SweepRow(axis=spec.axis, value=value, receiver=kind,
                             scenario=spec.scenario, mdr=mdr, far=far,
                             sync_rmse=rmse, ci_lo=ci[0], ci_hi=ci[1],
                             n_trials=n, elapsed=elapsed, complete=complete))
    return rows


# -- threshold calibration ----------------------------------------------------


def noise_statistics(cfg: LpWusConfig, n_trials: int, seed: int,
                     receiver_kind: str = receiver.RECEIVER_ED,
                     method: str = receiver.ED_METHOD_PATTERN) -> np.ndarray:
    """Detection statistic of noise-only trials; the FAR calibration sample."""
    spec = SweepSpec(cfg=cfg, lpss=LpSsConfig(), scenario=SCENARIO_NOISE,
                     n_trials=n_trials, master_seed=seed,
                     receivers=(receiver_kind,), ed_method=method, snr_db=0.0)
    engine = _Engine(spec)
    stats = np.empty(n_trials)
    for t in range(n_trials):
        seeds = trial_seed(seed, 0, t)
        rng = np.random.default_rng(seeds)
        chan_seed = int(rng.integers(0, 2 ** 63))
        prof = _profile_for(spec, 0.0, chan_seed)
        y = channel.apply(engine.tx_template, prof)
        blocks = receiver.extract_ook_blocks(y, engine.positions, cfg.M)
        energies = np.sum(np.abs(blocks) ** 2, axis=1)
        if receiver_kind == receiver.RECEIVER_ED:
            stats[t] = receiver.detection_statistic(energies, cfg, method)
        else:
            rep = receiver.cd_decode_blocks(blocks, cfg)
            stats[t] = rep.metric
    return stats


def calibrate_threshold(cfg: LpWusConfig, target_far: float, n_trials: int,
                        seed: int,
                        receiver_kind: str = receiver.RECEIVER_ED,
                        method: str = receiver.ED_METHOD_PATTERN) -> float:
    """Empirical (1 - target_far) quantile of the noise-only statistic."""
    if not 0.0 < target_far < 1.0:
        raise ValueError("target_far must be in (0,1)")
    if n_trials < 10.0 / target_far:
        raise ValueError(f"n_trials={n_trials} too small to estimate the "
                         f"{1 - target_far:.4f} quantile; need >= "
                         f"{math.ceil(10.0 / target_far)}")
    stats = noise_statistics(cfg, n_trials, seed, receiver_kind, method)
    return float(np.quantile(stats, 1.0 - target_far, method="higher"))


# -- golden vectors ------------------------------------------------------------


def emit_vectors(cfg: LpWusConfig, codepoints, out_dir) -> list[str]:
    """Write frame CSV + IQ file + sidecar per payload; bit-stable across runs."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    schedule = resolve_mos(cfg)
    written = []
    for c in codepoints:
        frame = codec.encode_frame(codec.payload_bits(c, cfg.payload_bits), cfg)
        sig = waveform.modulate_frame(frame, cfg, schedule)
        stem = os.path.join(out_dir, f"vector_c{c:02d}")
        frame_path = stem + ".frame.csv"
        with open(frame_path, "w", encoding="utf-8") as fh:
            fh.write("field,index,value\n")
            for i, g in enumerate(frame.g):
                fh.write(f"g,{i},{int(g)}\n")
            for i, s in enumerate(frame.seq_indices):
                fh.write(f"seq,{i},{int(s)}\n")
        iq_path = stem + ".iqf32"
        write_iq(iq_path, sig)
        written += [frame_path, iq_path, iq_path + ".json"]
    return written
