"""FastAPI service exposing the library over HTTP.

File-producing endpoints (generate, vectors, sweep CSV) write server-side
paths; with the bundled CLI the service runs in-process, so those paths are
local.  Domain errors surface as 400 with the library's message.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, codec, receiver, simharness, waveform
from ..config import validate, configs_to_dict
from ..errors import LpwusError, ConfigError
from ..iqfile import read_iq, write_iq
from ..procedures import (PagingIdentity, SubgroupMethod, allgroups_codepoint,
                          codepoint_table, po_index, reference_pf, resolve_mos,
                          subgroup_codepoint)
from . import models as m

app = FastAPI(title="lpwus", version=__version__,
              description="LP-WUS / LP-SS physical layer and link simulator")


@app.exception_handler(LpwusError)
async def _domain_error(request: Request, exc: LpwusError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(ValueError)
async def _value_error(request: Request, exc: ValueError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(FileNotFoundError)
async def _missing_file(request: Request, exc: FileNotFoundError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


def _cfgs(pair: m.ConfigPair, strict: bool = True):
    cfg, lpss = pair.lp_wus.to_core(), pair.lp_ss.to_core()
    if strict:
        # operational endpoints require a config that passes validation
        result = validate(cfg, lpss)
        if not result.ok:
            raise ConfigError("invalid config: " + "; ".join(result.messages()),
                              field=result.violations[0].field)
    return cfg, lpss


def _nan_clean(x: float) -> float | None:
    # JSON has no NaN; inapplicable metrics travel as null
    return None if math.isnan(x) else x


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/config/validate", response_model=m.ValidateResponse)
def config_validate(pair: m.ConfigPair):
    cfg, lpss = _cfgs(pair, strict=False)
    result = validate(cfg, lpss)
    return m.ValidateResponse(
        ok=result.ok,
        violations=[m.ViolationModel(field=v.field, message=v.message)
                    for v in result.violations])


@app.post("/procedures/paging", response_model=m.PagingResponse)
def procedures_paging(req: m.PagingRequest):
    cfg, _ = _cfgs(req.config)
    ident = PagingIdentity(ue_id=req.ue_id, i_s=req.i_s, sg_index=req.sg_index,
                           sg_method=SubgroupMethod(req.sg_method))
    i_po = po_index(ident, cfg)
    sg = ident.resolved_sg_index(cfg)
    return m.PagingResponse(
        i_po=i_po,
        sfn_rpf=reference_pf(req.sfn_pf, i_po, cfg),
        sg_index=sg,
        subgroup_codepoint=subgroup_codepoint(i_po, sg, cfg.N_SG_PO),
        allgroups_codepoint=allgroups_codepoint(i_po, cfg.N_SG_PO))


@app.post("/procedures/codepoints", response_model=m.CodepointTableResponse)
def procedures_codepoints(pair: m.ConfigPair):
    cfg, _ = _cfgs(pair)
    rows = [m.CodepointRow(**row) for row in codepoint_table(cfg)]
    return m.CodepointTableResponse(n_codepoints=cfg.n_codepoints,
                                    payload_bits=cfg.payload_bits, rows=rows)


@app.post("/procedures/mo-schedule", response_model=m.MoScheduleResponse)
def procedures_mo_schedule(req: m.MoScheduleRequest):
    cfg, _ = _cfgs(req.config)
    sched = resolve_mos(cfg, lo_start=tuple(req.lo_start), n_beams=req.n_beams,
                        unavailable=frozenset(tuple(p) for p in req.unavailable))
    return m.MoScheduleResponse(entries=[
        m.MoEntryModel(mo_index=e.mo_index, beam_index=e.beam_index,
                       dropped=e.dropped,
                       symbol_positions=[tuple(p) for p in e.symbol_positions])
        for e in sched.entries])


@app.post("/codec/encode", response_model=m.EncodeResponse)
def codec_encode(req: m.EncodeRequest):
    cfg, _ = _cfgs(req.config)
    bits = codec.payload_bits(req.codepoint, cfg.payload_bits)
    frame = codec.encode_frame(bits, cfg)
    return m.EncodeResponse(codepoint=req.codepoint,
                            payload_bits=[int(b) for b in bits],
                            g=[int(x) for x in frame.g],
                            seq_indices=[int(x) for x in frame.seq_indices],
                            L=frame.L, M=frame.M)


@app.post("/waveform/generate", response_model=m.GenerateResponse)
def waveform_generate(req: m.GenerateRequest):
    cfg, _ = _cfgs(req.config)
    bits = codec.payload_bits(req.codepoint, cfg.payload_bits)
    frame = codec.encode_frame(bits, cfg)
    sched = resolve_mos(cfg)
    sig = waveform.modulate_frame(frame, cfg, sched, mo_index=req.mo_index)
    side = write_iq(req.out_path, sig)
    return m.GenerateResponse(iq_path=req.out_path, sidecar_path=side,
                              n_samples=len(sig.samples), n_slots=sig.n_slots)


@app.post("/waveform/generate-lpss", response_model=m.GenerateResponse)
def waveform_generate_lpss(req: m.GenerateLpssRequest):
    cfg, lpss = _cfgs(req.config)
    pat = waveform.lpss_pattern(lpss)
    sig = waveform.modulate_lpss(pat, lpss, waveform.OfdmParams.for_config(cfg),
                                 n_periods=req.n_periods, ook_shift=req.ook_shift)
    side = write_iq(req.out_path, sig)
    return m.GenerateResponse(iq_path=req.out_path, sidecar_path=side,
                              n_samples=len(sig.samples), n_slots=sig.n_slots)


@app.post("/receiver/decode", response_model=m.DetectionReportModel)
def receiver_decode(req: m.DecodeRequest):
    cfg, _ = _cfgs(req.config)
    y = read_iq(req.iq_path)
    sched = resolve_mos(cfg)
    if req.receiver == receiver.RECEIVER_ED:
        energies = receiver.ed_demodulate(y, cfg, sched, mo_index=req.mo_index)
        rep = receiver.ed_decode(energies, cfg, far_threshold=req.threshold,
                                 method=req.method)
    elif req.receiver == receiver.RECEIVER_CD:
        rep = receiver.cd_decode(y, cfg, sched, mo_index=req.mo_index,
                                 threshold=req.threshold)
    else:
        raise ValueError(f"unknown receiver {req.receiver!r}")
    return m.DetectionReportModel(
        detected=rep.detected, codepoint_hat=rep.codepoint_hat,
        targets_hat=sorted(rep.targets_hat), metric=rep.metric,
        sync=rep.sync, receiver_kind=rep.receiver_kind)


@app.post("/receiver/measure", response_model=m.MeasurementReportModel)
def receiver_measure(req: m.MeasureRequest):
    cfg, lpss = _cfgs(req.config)
    y = read_iq(req.iq_path)
    pat = waveform.lpss_pattern(lpss)
    energies = receiver.occasion_energies(y, lpss, beam=req.beam,
                                          period=req.period)
    rep = receiver.lp_measure(energies, pat, normalization=req.normalization)
    return m.MeasurementReportModel(lp_rssi=rep.lp_rssi, lp_rsrp=rep.lp_rsrp,
                                    lp_rsrq=rep.lp_rsrq,
                                    normalization=rep.normalization)


@app.post("/receiver/sync", response_model=m.SyncResponse)
def receiver_sync(req: m.SyncRequest):
    cfg, lpss = _cfgs(req.config)
    y = read_iq(req.iq_path)
    pat = waveform.lpss_pattern(lpss)
    offset, peak = receiver.lpss_sync(y, pat, lpss, beam=req.beam,
                                      period=req.period, search=req.search)
    return m.SyncResponse(offset_ook=offset, peak_metric=peak)


@app.post("/sim/sweep", response_model=m.SweepResponse)
def sim_sweep(req: m.SweepRequest):
    cfg, lpss = _cfgs(req.config)
    spec = simharness.SweepSpec(
        cfg=cfg, lpss=lpss, axis=req.axis, values=tuple(req.values),
        n_trials=req.n_trials, receivers=tuple(req.receivers),
        master_seed=req.master_seed, scenario=req.scenario,
        payload_policy=req.payload_policy, fixed_codepoint=req.fixed_codepoint,
        snr_db=req.snr_db, cfo_hz=req.cfo_hz,
        timing_offset_samples=req.timing_offset_samples, fading=req.fading,
        ed_method=req.ed_method, workers=req.workers)
    result = simharness.run_sweep(spec)
    if req.csv_path:
        result.write_csv(req.csv_path)
    rows = [m.SweepRowModel(
        axis=r.axis, value=r.value, receiver=r.receiver, scenario=r.scenario,
        mdr=_nan_clean(r.mdr), far=_nan_clean(r.far),
        sync_rmse=_nan_clean(r.sync_rmse), ci_lo=_nan_clean(r.ci_lo),
        ci_hi=_nan_clean(r.ci_hi), n_trials=r.n_trials, elapsed=r.elapsed,
        complete=r.complete) for r in result.rows]
    return m.SweepResponse(rows=rows, csv_path=req.csv_path)


@app.post("/sim/calibrate", response_model=m.CalibrateResponse)
def sim_calibrate(req: m.CalibrateRequest):
    cfg, lpss = _cfgs(req.config)
    threshold = simharness.calibrate_threshold(
        cfg, target_far=req.target_far, n_trials=req.n_trials, seed=req.seed,
        receiver_kind=req.receiver, method=req.method)
    out = req.out_config_path
    if out:
        import json
        from dataclasses import replace
        key = "ed_threshold" if req.receiver == receiver.RECEIVER_ED \
            else "cd_threshold"
        updated = replace(cfg, **{key: threshold})
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(configs_to_dict(updated, lpss), fh, indent=2,
                      sort_keys=True)
            fh.write("\n")
    return m.CalibrateResponse(threshold=threshold, receiver=req.receiver,
                               target_far=req.target_far, out_config_path=out)


@app.post("/sim/vectors", response_model=m.VectorsResponse)
def sim_vectors(req: m.VectorsRequest):
    cfg, _ = _cfgs(req.config)
    codepoints = req.codepoints
    if codepoints is None:
        codepoints = list(range(cfg.n_codepoints))
    files = simharness.emit_vectors(cfg, codepoints, req.out_dir)
    return m.VectorsResponse(files=files)
