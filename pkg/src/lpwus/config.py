"""Deployment configuration for the wake-up signal and its sync signal.

Two immutable dataclasses hold every tunable of one deployment.  Schema-level
checks (types, per-field domains, unknown keys) live in ``load_config``;
cross-field consistency is the job of ``validate`` which reports violations
as data instead of raising.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, asdict

from .errors import ConfigError

SCHEMA_VERSION = 1

WUS_SUBCARRIERS = 132

# Max configurable sequences per OOK-symbols-per-OFDM-symbol setting.
N_SEQ_MAX = {1: 16, 2: 8, 4: 4}

# Max subgroups per PO; fewer POs per occasion leave more codepoints per PO.
N_SG_MAX = {1: 31, 2: 15, 4: 7}

CODEPOINT_BUDGET = 32  # 5-bit payload
PAYLOAD_BITS_MAX = 5

DRX_CYCLES_MS = (320, 640, 1280, 2560)


def largest_prime_below(n: int) -> int:
    """Largest prime strictly less than n."""
    for cand in range(n - 1, 1, -1):
        if all(cand % p for p in range(2, int(math.isqrt(cand)) + 1)):
            return cand
    raise ValueError(f"no prime below {n}")


@dataclass(frozen=True)
class LpWusConfig:
    """Full parameterization of one wake-up-signal deployment."""

    M: int = 2                       # OOK symbols per OFDM symbol {1,2,4}
    L: int = 14                      # actual WUS duration, OFDM symbols
    L_MO: int = 14                   # nominal MO duration, OFDM symbols
    N_LO_MO: int = 1                 # MOs per beam within an occasion
    N_PO_LO: int = 1                 # POs associated per occasion {1,2,4}
    N_SG_PO: int = 7                 # configured subgroups per PO
    B: int | None = None             # payload bits; derived when None
    N_seq: int = 1                   # configured ON-sequences {1,2,4,8,16}
    N_root: int = 1                  # configured roots {1,2}
    roots: tuple[int, ...] = (1,)
    first_mo_offset_symbols: int = 0
    slot_bitmap: tuple[int, ...] = (1,) * 10
    symbol_bitmap: tuple[int, ...] = (1,) * 14
    scs_khz: int = 30
    T_drx_ms: int = 1280
    N_pf: int = 4                    # paging frames per DRX cycle
    N_s: int = 1                     # POs per paging frame
    T_po_lo_ms: tuple[float, ...] = (10.0,)
    fft_size: int = 256
    ed_threshold: float | None = None  # calibrated detection gate, if any
    cd_threshold: float | None = None

    def __post_init__(self):
        # normalize sequence-typed fields so value equality is structural
        for name in ("roots", "slot_bitmap", "symbol_bitmap", "T_po_lo_ms"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    # -- derived quantities -------------------------------------------------

    @property
    def m_zc(self) -> int:
        return WUS_SUBCARRIERS // self.M

    @property
    def n_zc(self) -> int:
        return largest_prime_below(self.m_zc)

    @property
    def G(self) -> int:
        """OOK symbols carried by one WUS transmission."""
        return self.L * self.M

    @property
    def E(self) -> int:
        """Line-code pairs (= ON symbols) per transmission."""
        return self.G // 2

    @property
    def n_codepoints(self) -> int:
        return self.N_PO_LO * (self.N_SG_PO + 1)

    @property
    def derived_payload_bits(self) -> int:
        return max(1, math.ceil(math.log2(self.n_codepoints)))

    @property
    def payload_bits(self) -> int:
        return self.B if self.B is not None else self.derived_payload_bits

    @property
    def seq_bits(self) -> int:
        """Bits carried per ON symbol by the sequence index (0 if N_seq=1)."""
        return int(math.log2(self.N_seq)) if self.N_seq > 1 else 0

    @property
    def sample_rate_hz(self) -> float:
        return self.fft_size * self.scs_khz * 1e3

    @property
    def slots_per_ms(self) -> int:
        return self.scs_khz // 15

    @property
    def t_drx_frames(self) -> int:
        return self.T_drx_ms // 10


@dataclass(frozen=True)
class LpSsConfig:
    """Periodic synchronization-signal configuration."""

    M_lpss: int = 2
    L_lpss: int = 6
    seq_index: int = 0               # which of the 4 cell sequences
    period_ms: int = 320
    offset_ms: int = 0               # w.r.t. SFN0
    start_symbols: tuple[int, ...] = (0,)
    root: int | None = 1             # may be None only when M_lpss == 1
    n_beams: int = 1

    def __post_init__(self):
        object.__setattr__(self, "start_symbols", tuple(self.start_symbols))

    @property
    def b_lpss(self) -> int:
        """Pattern length in OOK symbols."""
        return self.M_lpss * self.L_lpss

    @property
    def m_zc(self) -> int:
        return WUS_SUBCARRIERS // self.M_lpss

    @property
    def n_zc(self) -> int:
        return largest_prime_below(self.m_zc)

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.b_lpss, self.M_lpss, self.L_lpss)


@dataclass(frozen=True)
class Violation:
    field: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message}"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> list[str]:
        return [str(v) for v in self.violations]


def _wus_violations(cfg: LpWusConfig) -> list[Violation]:
    v = []

    def bad(field_name, message):
        v.append(Violation(field_name, message))

    if cfg.M not in (1, 2, 4):
        bad("M", f"M={cfg.M} not in {{1,2,4}} (132 subcarriers split as 132/66/33)")
    if cfg.L < 2:
        bad("L", f"L={cfg.L} must be >= 2 OFDM symbols")
    if cfg.M in (1, 2, 4) and (cfg.L * cfg.M) % 2 != 0:
        bad("L", f"G = L*M = {cfg.L * cfg.M} must be even for the rate-1/2 line code")
    if cfg.L_MO < 1:
        bad("L_MO", f"L_MO={cfg.L_MO} must be >= 1")
    if cfg.N_LO_MO not in (1, 2, 3, 4):
        bad("N_LO_MO", f"N_LO_MO={cfg.N_LO_MO} not in {{1,2,3,4}}")
    if cfg.N_PO_LO not in (1, 2, 4):
        bad("N_PO_LO", f"N_PO_LO={cfg.N_PO_LO} not in {{1,2,4}}")
    else:
        sg_max = N_SG_MAX[cfg.N_PO_LO]
        if not 1 <= cfg.N_SG_PO <= sg_max:
            bad("N_SG_PO", f"N_SG_PO={cfg.N_SG_PO} exceeds N_SG_max={sg_max} "
                           f"for N_PO_LO={cfg.N_PO_LO}")
        if cfg.n_codepoints > CODEPOINT_BUDGET:
            bad("N_SG_PO", f"codepoint budget {cfg.N_PO_LO}*{cfg.N_SG_PO + 1} "
                           f"> {CODEPOINT_BUDGET}")
        else:
            if cfg.B is not None:
                if not 1 <= cfg.B <= PAYLOAD_BITS_MAX:
                    bad("B", f"B={cfg.B} not in 1..{PAYLOAD_BITS_MAX}")
                elif cfg.B < cfg.derived_payload_bits:
                    bad("B", f"B={cfg.B} smaller than the {cfg.derived_payload_bits} "
                             f"bits needed for {cfg.n_codepoints} codepoints")
    if cfg.N_seq not in (1, 2, 4, 8, 16):
        bad("N_seq", f"N_seq={cfg.N_seq} not in {{1,2,4,8,16}}")
    elif cfg.M in (1, 2, 4) and cfg.N_seq > N_SEQ_MAX[cfg.M]:
        bad("N_seq", f"N_seq exceeds N_seq_max={N_SEQ_MAX[cfg.M]} for M={cfg.M}")
    if cfg.N_root not in (1, 2):
        bad("N_root", f"N_root={cfg.N_root} not in {{1,2}}")
    elif cfg.N_seq in (1, 2, 4, 8, 16) and cfg.N_root > cfg.N_seq:
        bad("N_root", f"N_root={cfg.N_root} exceeds N_seq={cfg.N_seq}")
    if len(cfg.roots) != cfg.N_root:
        bad("roots", f"expected {cfg.N_root} roots, got {len(cfg.roots)}")
    if len(set(cfg.roots)) != len(cfg.roots):
        bad("roots", "roots must be pairwise distinct")
    if cfg.M in (1, 2, 4):
        for q in cfg.roots:
            if not 1 <= q <= cfg.n_zc - 1:
                bad("roots", f"root {q} outside 1..{cfg.n_zc - 1}")
    if cfg.first_mo_offset_symbols < 0:
        bad("first_mo_offset_symbols", "offset must be >= 0")
    if len(cfg.slot_bitmap) != 10:
        bad("slot_bitmap", f"length {len(cfg.slot_bitmap)} != 10")
    elif not any(cfg.slot_bitmap):
        bad("slot_bitmap", "no slot is available")
    if len(cfg.symbol_bitmap) != 14:
        bad("symbol_bitmap", f"length {len(cfg.symbol_bitmap)} != 14")
    elif not any(cfg.symbol_bitmap):
        bad("symbol_bitmap", "no symbol is available")
    for name in ("slot_bitmap", "symbol_bitmap"):
        if any(b not in (0, 1) for b in getattr(cfg, name)):
            bad(name, "bitmap entries must be 0 or 1")
    if cfg.scs_khz not in (15, 30):
        bad("scs_khz", f"scs_khz={cfg.scs_khz} not in {{15,30}}")
    if cfg.T_drx_ms not in DRX_CYCLES_MS:
        bad("T_drx_ms", f"T_drx_ms={cfg.T_drx_ms} not in {DRX_CYCLES_MS}")
    if cfg.N_pf < 1:
        bad("N_pf", "N_pf must be >= 1")
    elif cfg.T_drx_ms in DRX_CYCLES_MS and cfg.t_drx_frames % cfg.N_pf != 0:
        bad("N_pf", f"N_pf={cfg.N_pf} does not divide the DRX cycle of "
                    f"{cfg.t_drx_frames} frames")
    if cfg.N_s < 1:
        bad("N_s", "N_s must be >= 1")
    if cfg.N_PO_LO in (1, 2, 4) and cfg.N_s >= 1:
        want = cfg.N_s if cfg.N_s > cfg.N_PO_LO else 1
        if len(cfg.T_po_lo_ms) != want:
            bad("T_po_lo_ms", f"expected {want} offset(s) for N_s={cfg.N_s}, "
                              f"N_PO_LO={cfg.N_PO_LO}; got {len(cfg.T_po_lo_ms)}")
    if any(t < 0 for t in cfg.T_po_lo_ms):
        bad("T_po_lo_ms", "offsets must be >= 0")
    if cfg.fft_size < WUS_SUBCARRIERS or cfg.fft_size & (cfg.fft_size - 1):
        bad("fft_size", f"fft_size={cfg.fft_size} must be a power of two >= 132")
    return v


def _lpss_violations(lpss: LpSsConfig, wus: LpWusConfig) -> list[Violation]:
    v = []

    def bad(field_name, message):
        v.append(Violation("lp_ss." + field_name, message))

    if lpss.M_lpss not in (1, 2, 4):
        bad("M_lpss", f"M_lpss={lpss.M_lpss} not in {{1,2,4}}")
    elif wus.M in (1, 2, 4) and lpss.M_lpss < wus.M:
        bad("M_lpss", f"M_lpss={lpss.M_lpss} < M={wus.M}: sync grid coarser "
                      f"than the wake-up signal it times")
    if lpss.L_lpss not in (4, 6, 8):
        bad("L_lpss", f"L_lpss={lpss.L_lpss} not in {{4,6,8}}")
    if lpss.M_lpss in (1, 2, 4) and lpss.L_lpss in (4, 6, 8):
        if lpss.root is not None and lpss.triple not in LPSS_TRIPLES:
            bad("L_lpss", f"triple {lpss.triple} has no specified sequence set")
    if not 0 <= lpss.seq_index <= 3:
        bad("seq_index", f"seq_index={lpss.seq_index} not in 0..3")
    if lpss.period_ms not in (160, 320):
        bad("period_ms", f"period_ms={lpss.period_ms} not in {{160,320}}")
    if not 0 <= lpss.offset_ms:
        bad("offset_ms", "offset_ms must be >= 0")
    if len(lpss.start_symbols) not in (1, 2):
        bad("start_symbols", "need one or two start symbols")
    elif (len(lpss.start_symbols) == 2 and lpss.L_lpss in (4, 6, 8)
          and lpss.start_symbols[1] < lpss.start_symbols[0] + lpss.L_lpss):
        bad("start_symbols", "second occasion overlaps the first")
    for s in lpss.start_symbols:
        if not 0 <= s <= 13:
            bad("start_symbols", f"start symbol {s} outside 0..13")
        elif lpss.L_lpss in (4, 6, 8) and s + lpss.L_lpss > 14:
            bad("start_symbols", f"occasion starting at {s} crosses the slot "
                                 f"boundary (L_lpss={lpss.L_lpss})")
    if lpss.root is None:
        if lpss.M_lpss != 1:
            bad("root", "root may be omitted only when M_lpss = 1")
    elif lpss.M_lpss in (1, 2, 4) and not 1 <= lpss.root <= lpss.n_zc - 1:
        bad("root", f"root {lpss.root} outside 1..{lpss.n_zc - 1}")
    if lpss.n_beams < 1:
        bad("n_beams", "n_beams must be >= 1")
    return v


# Triples with specified sequence sets; the actual bit tables live in waveform.
LPSS_TRIPLES = ((6, 1, 6), (12, 2, 6), (16, 4, 4))


def validate(cfg: LpWusConfig, lpss: LpSsConfig | None = None) -> ValidationResult:
    """Check every invariant; violations come back as data, never raised."""
    v = _wus_violations(cfg)
    if lpss is not None:
        v += _lpss_violations(lpss, cfg)
    return ValidationResult(tuple(v))


# -- file schema ------------------------------------------------------------

_WUS_FIELDS = {f.name for f in fields(LpWusConfig)}
_LPSS_FIELDS = {f.name for f in fields(LpSsConfig)}

_INT_DOMAINS = {
    "M": (1, 2, 4),
    "N_LO_MO": (1, 2, 3, 4),
    "N_PO_LO": (1, 2, 4),
    "N_seq": (1, 2, 4, 8, 16),
    "N_root": (1, 2),
    "scs_khz": (15, 30),
    "T_drx_ms": DRX_CYCLES_MS,
    "M_lpss": (1, 2, 4),
    "L_lpss": (4, 6, 8),
    "period_ms": (160, 320),
}

_LIST_FIELDS = {"roots", "slot_bitmap", "symbol_bitmap", "T_po_lo_ms", "start_symbols"}
_OPTIONAL_FIELDS = {"B", "root", "ed_threshold", "cd_threshold"}
_FLOAT_FIELDS = {"T_po_lo_ms", "ed_threshold", "cd_threshold"}


def _check_section(section: str, data: dict, known: set) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"section '{section}' must be an object", field=section)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown field(s) in '{section}': {sorted(unknown)}",
                          field=sorted(unknown)[0])
    kwargs = {}
    for name, value in data.items():
        if value is None:
            if name not in _OPTIONAL_FIELDS:
                raise ConfigError(f"'{section}.{name}' may not be null", field=name)
            kwargs[name] = None
            continue
        if name in _LIST_FIELDS:
            if not isinstance(value, list):
                raise ConfigError(f"'{section}.{name}' must be a list", field=name)
            if name in _FLOAT_FIELDS:
                if not all(isinstance(x, (int, float)) for x in value):
                    raise ConfigError(f"'{section}.{name}' entries must be numbers",
                                      field=name)
                kwargs[name] = tuple(float(x) for x in value)
            else:
                if not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
                    raise ConfigError(f"'{section}.{name}' entries must be integers",
                                      field=name)
                kwargs[name] = tuple(value)
            continue
        if name in _FLOAT_FIELDS:
            if not isinstance(value, (int, float)):
                raise ConfigError(f"'{section}.{name}' must be a number", field=name)
            kwargs[name] = float(value)
            continue
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"'{section}.{name}' must be an integer", field=name)
        domain = _INT_DOMAINS.get(name)
        if domain is not None and value not in domain:
            raise ConfigError(f"'{section}.{name}' = {value} not in {domain}",
                              field=name)
        kwargs[name] = value
    return kwargs


def configs_to_dict(cfg: LpWusConfig, lpss: LpSsConfig) -> dict:
    def clean(d):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    return {
        "schema_version": SCHEMA_VERSION,
        "lp_wus": clean(asdict(cfg)),
        "lp_ss": clean(asdict(lpss)),
    }


def configs_from_dict(doc: dict) -> tuple[LpWusConfig, LpSsConfig]:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(doc) - {"schema_version", "lp_wus", "lp_ss"}
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {sorted(unknown)}",
                          field=sorted(unknown)[0])
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version {version!r} unsupported "
                          f"(expected {SCHEMA_VERSION})", field="schema_version")
    if "lp_wus" not in doc or "lp_ss" not in doc:
        raise ConfigError("config must contain 'lp_wus' and 'lp_ss' sections")
    cfg = LpWusConfig(**_check_section("lp_wus", doc["lp_wus"], _WUS_FIELDS))
    lpss = LpSsConfig(**_check_section("lp_ss", doc["lp_ss"], _LPSS_FIELDS))
    return cfg, lpss


def load_config(path) -> tuple[LpWusConfig, LpSsConfig]:
    """Parse a config file; raises ConfigError with field diagnostics."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return configs_from_dict(doc)


def save_config(path, cfg: LpWusConfig, lpss: LpSsConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(configs_to_dict(cfg, lpss), fh, indent=2, sort_keys=True)
        fh.write("\n")
