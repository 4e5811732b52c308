"""Pydantic request/response models for the HTTP service.

The models pin field names and JSON types; domain rules (value sets, cross
checks) stay in the core package so the file loader and the API agree.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..config import SCHEMA_VERSION, LpWusConfig, LpSsConfig


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class WusConfigModel(StrictModel):
    M: int = 2
    L: int = 14
    L_MO: int = 14
    N_LO_MO: int = 1
    N_PO_LO: int = 1
    N_SG_PO: int = 7
    B: int | None = None
    N_seq: int = 1
    N_root: int = 1
    roots: list[int] = [1]
    first_mo_offset_symbols: int = 0
    slot_bitmap: list[int] = [1] * 10
    symbol_bitmap: list[int] = [1] * 14
    scs_khz: int = 30
    T_drx_ms: int = 1280
    N_pf: int = 4
    N_s: int = 1
    T_po_lo_ms: list[float] = [10.0]
    fft_size: int = 256
    ed_threshold: float | None = None
    cd_threshold: float | None = None

    def to_core(self) -> LpWusConfig:
        return LpWusConfig(**self.model_dump())

    @classmethod
    def from_core(cls, cfg: LpWusConfig) -> "WusConfigModel":
        from dataclasses import asdict
        return cls(**{k: (list(v) if isinstance(v, tuple) else v)
                      for k, v in asdict(cfg).items()})


class SsConfigModel(StrictModel):
    M_lpss: int = 2
    L_lpss: int = 6
    seq_index: int = 0
    period_ms: int = 320
    offset_ms: int = 0
    start_symbols: list[int] = [0]
    root: int | None = 1
    n_beams: int = 1

    def to_core(self) -> LpSsConfig:
        return LpSsConfig(**self.model_dump())

    @classmethod
    def from_core(cls, lpss: LpSsConfig) -> "SsConfigModel":
        from dataclasses import asdict
        return cls(**{k: (list(v) if isinstance(v, tuple) else v)
                      for k, v in asdict(lpss).items()})


class ConfigPair(StrictModel):
    schema_version: int = SCHEMA_VERSION
    lp_wus: WusConfigModel = Field(default_factory=WusConfigModel)
    lp_ss: SsConfigModel = Field(default_factory=SsConfigModel)


class ViolationModel(StrictModel):
    field: str
    message: str


class ValidateResponse(StrictModel):
    ok: bool
    violations: list[ViolationModel]


class PagingRequest(StrictModel):
    config: ConfigPair
    ue_id: int
    i_s: int = 0
    sg_index: int = 0
    sg_method: str = "cn_assigned"
    sfn_pf: int = 0


class PagingResponse(StrictModel):
    i_po: int
    sfn_rpf: int
    sg_index: int
    subgroup_codepoint: int
    allgroups_codepoint: int


class CodepointRow(StrictModel):
    i_po: int
    c_sg: list[int]
    c_all: int


class CodepointTableResponse(StrictModel):
    n_codepoints: int
    payload_bits: int
    rows: list[CodepointRow]


class MoScheduleRequest(StrictModel):
    config: ConfigPair
    lo_start: tuple[int, int] = (0, 0)
    n_beams: int = 1
    unavailable: list[tuple[int, int]] = []


class MoEntryModel(StrictModel):
    mo_index: int
    beam_index: int
    dropped: bool
    symbol_positions: list[tuple[int, int]]


class MoScheduleResponse(StrictModel):
    entries: list[MoEntryModel]


class EncodeRequest(StrictModel):
    config: ConfigPair
    codepoint: int = 0


class EncodeResponse(StrictModel):
    codepoint: int
    payload_bits: list[int]
    g: list[int]
    seq_indices: list[int]
    L: int
    M: int


class GenerateRequest(StrictModel):
    config: ConfigPair
    codepoint: int = 0
    mo_index: int = 0
    out_path: str


class GenerateLpssRequest(StrictModel):
    config: ConfigPair
    n_periods: int = 2
    ook_shift: int = 0
    out_path: str


class GenerateResponse(StrictModel):
    iq_path: str
    sidecar_path: str
    n_samples: int
    n_slots: int


class DecodeRequest(StrictModel):
    config: ConfigPair
    iq_path: str
    receiver: str = "ed"
    mo_index: int = 0
    method: str = "pattern"
    threshold: float | None = None


class DetectionReportModel(StrictModel):
    detected: bool
    codepoint_hat: int | None
    targets_hat: list[tuple[int, int]]
    metric: float
    sync: float | None
    receiver_kind: str


class MeasureRequest(StrictModel):
    config: ConfigPair
    iq_path: str
    beam: int = 0
    period: int = 0
    normalization: str = "average"


class MeasurementReportModel(StrictModel):
    lp_rssi: float
    lp_rsrp: float
    lp_rsrq: float
    normalization: str


class SyncRequest(StrictModel):
    config: ConfigPair
    iq_path: str
    beam: int = 0
    period: int = 0
    search: int | None = None


class SyncResponse(StrictModel):
    offset_ook: int
    peak_metric: float


class SweepRequest(StrictModel):
    config: ConfigPair
    scenario: str = "wus_present"
    axis: str = "snr_db"
    values: list[float] = [10.0]
    n_trials: int = 100
    receivers: list[str] = ["ed"]
    master_seed: int = 0
    payload_policy: str = "cycle"
    fixed_codepoint: int = 0
    snr_db: float | None = 10.0
    cfo_hz: float = 0.0
    timing_offset_samples: int = 0
    fading: str = "none"
    ed_method: str = "pattern"
    workers: int = 1
    csv_path: str | None = None


class SweepRowModel(StrictModel):
    axis: str
    value: float
    receiver: str
    scenario: str
    mdr: float | None        # null where the scenario does not produce it
    far: float | None
    sync_rmse: float | None
    ci_lo: float | None
    ci_hi: float | None
    n_trials: int
    elapsed: float
    complete: bool


class SweepResponse(StrictModel):
    rows: list[SweepRowModel]
    csv_path: str | None = None


class CalibrateRequest(StrictModel):
    config: ConfigPair
    target_far: float = 0.01
    n_trials: int = 10000
    seed: int = 0
    receiver: str = "ed"
    method: str = "pattern"
    out_config_path: str | None = None


class CalibrateResponse(StrictModel):
    threshold: float
    receiver: str
    target_far: float
    out_config_path: str | None = None


class VectorsRequest(StrictModel):
    config: ConfigPair
    codepoints: list[int] | None = None   # default: every legal codepoint
    out_dir: str


class VectorsResponse(StrictModel):
    files: list[str]
