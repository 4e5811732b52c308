"""Idle-mode arithmetic: subgroup codepoints, PO association, MO resolution.

All functions are pure; positions are absolute (slot, symbol) pairs counted
from the occasion start, slots running over the 10-slot availability period.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .config import LpWusConfig

SFN_PERIOD = 1024


class SubgroupMethod(enum.Enum):
    CN_ASSIGNED = "cn_assigned"
    UE_ID_BASED = "ue_id_based"


@dataclass(frozen=True)
class PagingIdentity:
    """What a UE needs to locate its paging resources."""

    ue_id: int                      # 16-bit identity
    i_s: int = 0                    # PO index within the PF
    sg_index: int = 0               # subgroup index, 0-based
    sg_method: SubgroupMethod = SubgroupMethod.CN_ASSIGNED

    def resolved_sg_index(self, cfg: LpWusConfig) -> int:
        # identity-derived subgrouping hashes the UE id over the configured groups
        if self.sg_method is SubgroupMethod.UE_ID_BASED:
            return self.ue_id % cfg.N_SG_PO
        return self.sg_index


def po_index(identity: PagingIdentity, cfg: LpWusConfig) -> int:
    """PO index addressed by this identity within its wake-up occasion."""
    return ((identity.ue_id % cfg.N_pf) * cfg.N_s + identity.i_s) % cfg.N_PO_LO


def reference_pf(sfn_pf: int, i_po: int, cfg: LpWusConfig) -> int:
    """SFN of the reference paging frame, modulo the 1024-frame space."""
    step = cfg.t_drx_frames // cfg.N_pf
    return (sfn_pf - (i_po // cfg.N_s) * step) % SFN_PERIOD


ALL_GROUPS = "ALL"


def subgroup_codepoint(i_po: int, i_sg: int, n_sg_po: int) -> int:
    """Codepoint waking one subgroup of one PO.

    Uses the uniform layout c = i_po*(n_sg_po+1) + i_sg, which reproduces the
    published codepoint table and keeps the full map bijective for every
    legal configuration (the branch c = i_po for a single configured
    subgroup coincides with it whenever only one PO is associated).
    """
    if not 0 <= i_sg < n_sg_po:
        raise ValueError(f"i_sg={i_sg} outside 0..{n_sg_po - 1}")
    return i_po * (n_sg_po + 1) + i_sg


def allgroups_codepoint(i_po: int, n_sg_po: int) -> int:
    """Codepoint waking every subgroup of one PO."""
    return (i_po + 1) * (n_sg_po + 1) - 1


def codepoint_table(cfg: LpWusConfig) -> list[dict]:
    """One row per PO: its subgroup codepoints and the wake-all codepoint."""
    rows = []
    for i_po in range(cfg.N_PO_LO):
        rows.append({
            "i_po": i_po,
            "c_sg": [subgroup_codepoint(i_po, s, cfg.N_SG_PO)
                     for s in range(cfg.N_SG_PO)],
            "c_all": allgroups_codepoint(i_po, cfg.N_SG_PO),
        })
    return rows


def codepoint_to_targets(c: int, cfg: LpWusConfig) -> tuple[int, int | str]:
    """Inverse codepoint map: (i_po, i_sg) or (i_po, ALL_GROUPS)."""
    if not 0 <= c < cfg.n_codepoints:
        raise ValueError(f"codepoint {c} outside 0..{cfg.n_codepoints - 1}")
    i_po, rem = divmod(c, cfg.N_SG_PO + 1)
    if rem == cfg.N_SG_PO:
        return (i_po, ALL_GROUPS)
    return (i_po, rem)


def expand_targets(target: tuple[int, int | str], cfg: LpWusConfig) -> frozenset:
    """Expand an (i_po, i_sg|ALL) target to explicit (i_po, i_sg) pairs."""
    i_po, sg = target
    if sg == ALL_GROUPS:
        return frozenset((i_po, s) for s in range(cfg.N_SG_PO))
    return frozenset({(i_po, sg)})


# -- monitoring-occasion resolution ------------------------------------------


@dataclass(frozen=True)
class MoEntry:
    mo_index: int
    beam_index: int
    symbol_positions: tuple[tuple[int, int], ...]  # absolute (slot, symbol)
    dropped: bool


@dataclass(frozen=True)
class MoSchedule:
    entries: tuple[MoEntry, ...]

    def entry(self, mo_index: int) -> MoEntry:
        return self.entries[mo_index]


def _available_positions(cfg: LpWusConfig, start: tuple[int, int]):
    """Yield bitmap-available (slot, symbol) pairs from ``start`` onward."""
    slot, sym = start
    while True:
        if cfg.slot_bitmap[slot % 10]:
            while sym < 14:
                if cfg.symbol_bitmap[sym]:
                    yield (slot, sym)
                sym += 1
        slot, sym = slot + 1, 0


def _advance(pos: tuple[int, int], n_symbols: int) -> tuple[int, int]:
    slot, sym = pos
    sym += n_symbols
    return (slot + sym // 14, sym % 14)


def resolve_mos(cfg: LpWusConfig,
                lo_start: tuple[int, int] = (0, 0),
                n_beams: int = 1,
                unavailable: frozenset | set = frozenset()) -> MoSchedule:
    """Lay out the occasion's monitoring occasions and apply the skip rule.

    Windows of L_MO bitmap-available symbols are placed back to back from
    ``lo_start`` plus the configured offset.  ``unavailable`` holds extra
    (slot, symbol) positions blocked dynamically (e.g. an SS/PBCH burst);
    a window left with fewer than L usable symbols is marked dropped.
    Beams take MOs round-robin.
    """
    unavailable = frozenset(unavailable)
    start = _advance(lo_start, cfg.first_mo_offset_symbols)
    gen = _available_positions(cfg, start)
    entries = []
    n_mos = cfg.N_LO_MO * n_beams
    for mo_index in range(n_mos):
        window = [next(gen) for _ in range(cfg.L_MO)]
        usable = [p for p in window if p not in unavailable]
        if len(usable) >= cfg.L:
            entries.append(MoEntry(mo_index, mo_index % n_beams,
                                   tuple(usable[:cfg.L]), dropped=False))
        else:
            entries.append(MoEntry(mo_index, mo_index % n_beams,
                                   tuple(usable), dropped=True))
    return MoSchedule(tuple(entries))


def physical_span(entry: MoEntry) -> int:
    """Physical OFDM symbols between the first and last WUS symbol, inclusive."""
    if not entry.symbol_positions:
        return 0
    (s0, y0), (s1, y1) = entry.symbol_positions[0], entry.symbol_positions[-1]
    return (s1 * 14 + y1) - (s0 * 14 + y0) + 1
