"""Command-line client.

Every subcommand is a thin wrapper over the HTTP service: the config file is
read locally and sent in-band, results come back as JSON.  By default the
service runs in-process; pass --server to talk to a remote instance (file
paths in requests are then resolved on the server).

Exit codes: 0 ok, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

import httpx

from .errors import ConfigError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


def make_client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient
    from .service.app import app
    return TestClient(app)


def load_config_doc(path) -> dict:
    from .config import load_config, configs_to_dict
    cfg, lpss = load_config(path)
    return configs_to_dict(cfg, lpss)


def call(client, route: str, payload: dict) -> dict:
    resp = client.post(route, json=payload)
    if resp.status_code in (400, 422):
        detail = resp.json().get("detail")
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)
    if resp.status_code != 200:
        print(f"error: service returned {resp.status_code}: {resp.text}",
              file=sys.stderr)
        raise SystemExit(EXIT_RUNTIME)
    return resp.json()


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t != ""]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t != ""]


def _pair(text: str) -> tuple[int, int]:
    a, b = text.split(",")
    return (int(a), int(b))


# -- subcommand handlers ------------------------------------------------------


def cmd_validate(client, args) -> int:
    doc = load_config_doc(args.config)
    res = call(client, "/config/validate", doc)
    if res["ok"]:
        print("ok")
        return EXIT_OK
    for v in res["violations"]:
        print(f"violation: {v['field']}: {v['message']}")
    return EXIT_INVALID


def cmd_procedures(client, args) -> int:
    doc = load_config_doc(args.config)
    table = call(client, "/procedures/codepoints", doc)
    paging = call(client, "/procedures/paging", {
        "config": doc, "ue_id": args.ue_id, "i_s": args.i_s,
        "sg_index": args.sg_index, "sg_method": args.sg_method,
        "sfn_pf": args.sfn_pf})
    sched = call(client, "/procedures/mo-schedule", {
        "config": doc, "lo_start": list(args.lo_start),
        "n_beams": args.n_beams,
        "unavailable": [list(p) for p in args.unavailable]})
    if args.format == "csv":
        print("i_po,c_sg,c_all")
        for row in table["rows"]:
            print(f"{row['i_po']},{';'.join(map(str, row['c_sg']))},{row['c_all']}")
        print("key,value")
        for key in ("i_po", "sfn_rpf", "sg_index", "subgroup_codepoint",
                    "allgroups_codepoint"):
            print(f"{key},{paging[key]}")
        print("mo_index,beam,dropped,positions")
        for e in sched["entries"]:
            pos = ";".join(f"{s}:{y}" for s, y in e["symbol_positions"])
            print(f"{e['mo_index']},{e['beam_index']},{int(e['dropped'])},{pos}")
    else:
        print(f"codepoints ({table['n_codepoints']} values, "
              f"{table['payload_bits']} bits)")
        print(f"  {'i_po':>4}  {'c_sg':<24} c_all")
        for row in table["rows"]:
            sg = ",".join(map(str, row["c_sg"]))
            print(f"  {row['i_po']:>4}  {sg:<24} {row['c_all']}")
        print(f"ue_id={args.ue_id}: i_po={paging['i_po']} "
              f"sfn_rpf={paging['sfn_rpf']} sg_index={paging['sg_index']} "
              f"c_sg={paging['subgroup_codepoint']} "
              f"c_all={paging['allgroups_codepoint']}")
        print("monitoring occasions")
        for e in sched["entries"]:
            state = "dropped" if e["dropped"] else "ok"
            pos = " ".join(f"{s}:{y}" for s, y in e["symbol_positions"])
            print(f"  mo={e['mo_index']} beam={e['beam_index']} {state:<8} {pos}")
    return EXIT_OK


def cmd_encode(client, args) -> int:
    doc = load_config_doc(args.config)
    res = call(client, "/codec/encode", {"config": doc,
                                         "codepoint": args.codepoint})
    if args.format == "hex":
        bits = res["g"]
        value = int("".join(map(str, bits)), 2) if bits else 0
        width = (len(bits) + 3) // 4
        print(f"g=0x{value:0{width}x}")
        print("seq=" + ",".join(map(str, res["seq_indices"])))
    else:
        print("field,index,value")
        for i, g in enumerate(res["g"]):
            print(f"g,{i},{g}")
        for i, s in enumerate(res["seq_indices"]):
            print(f"seq,{i},{s}")
    return EXIT_OK


def cmd_generate(client, args) -> int:
    doc = load_config_doc(args.config)
    if args.lpss:
        res = call(client, "/waveform/generate-lpss", {
            "config": doc, "n_periods": args.periods,
            "ook_shift": args.ook_shift, "out_path": args.out})
    else:
        res = call(client, "/waveform/generate", {
            "config": doc, "codepoint": args.codepoint,
            "mo_index": args.mo_index, "out_path": args.out})
    print(f"wrote {res['iq_path']} ({res['n_samples']} samples, "
          f"{res['n_slots']} slots) + {res['sidecar_path']}")
    return EXIT_OK


def cmd_decode(client, args) -> int:
    doc = load_config_doc(args.config)
    if args.measure:
        res = call(client, "/receiver/measure", {
            "config": doc, "iq_path": args.iq, "beam": args.beam,
            "period": args.period, "normalization": args.rsrq_normalization})
    elif args.sync:
        res = call(client, "/receiver/sync", {
            "config": doc, "iq_path": args.iq, "beam": args.beam,
            "period": args.period, "search": args.search})
    else:
        res = call(client, "/receiver/decode", {
            "config": doc, "iq_path": args.iq, "receiver": args.receiver,
            "mo_index": args.mo_index, "method": args.method,
            "threshold": args.threshold})
        res["targets_hat"] = ";".join(f"{p}:{s}" for p, s in res["targets_hat"])
    for key, value in res.items():
        print(f"{key}={value}")
    return EXIT_OK


def cmd_simulate(client, args) -> int:
    doc = load_config_doc(args.config)
    res = call(client, "/sim/sweep", {
        "config": doc, "scenario": args.scenario, "axis": args.axis,
        "values": args.values, "n_trials": args.n_trials,
        "receivers": args.receiver, "master_seed": args.seed,
        "payload_policy": args.payload_policy,
        "fixed_codepoint": args.fixed_codepoint, "snr_db": args.snr_db,
        "cfo_hz": args.cfo_hz, "timing_offset_samples": args.timing_offset,
        "fading": args.fading, "ed_method": args.method,
        "workers": args.workers, "csv_path": args.csv})
    header = ("axis", "value", "receiver", "mdr", "far", "sync_rmse",
              "ci_lo", "ci_hi", "n_trials")
    print(",".join(header))
    for r in res["rows"]:
        print(",".join("nan" if r[h] is None else str(r[h]) for h in header))
    if args.csv:
        print(f"csv written to {args.csv}", file=sys.stderr)
    return EXIT_OK


def cmd_calibrate(client, args) -> int:
    doc = load_config_doc(args.config)
    res = call(client, "/sim/calibrate", {
        "config": doc, "target_far": args.target_far,
        "n_trials": args.n_trials, "seed": args.seed,
        "receiver": args.receiver, "method": args.method,
        "out_config_path": args.write_config})
    print(f"threshold={res['threshold']}")
    if res["out_config_path"]:
        print(f"config written to {res['out_config_path']}", file=sys.stderr)
    return EXIT_OK


def cmd_vectors(client, args) -> int:
    doc = load_config_doc(args.config)
    res = call(client, "/sim/vectors", {
        "config": doc, "codepoints": args.codepoints, "out_dir": args.out_dir})
    for f in res["files"]:
        print(f)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn
    from .service.app import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lpwus", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--server", default=None,
                   help="base URL of a running service (default: in-process)")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", required=True, help="config file path")
        return sp

    with_config(sub.add_parser("validate", help="check a config file"))

    sp = with_config(sub.add_parser("procedures",
                                    help="codepoint table, paging math, MO schedule"))
    sp.add_argument("--ue-id", type=int, default=0)
    sp.add_argument("--i-s", type=int, default=0)
    sp.add_argument("--sg-index", type=int, default=0)
    sp.add_argument("--sg-method", choices=["cn_assigned", "ue_id_based"],
                    default="cn_assigned")
    sp.add_argument("--sfn-pf", type=int, default=0)
    sp.add_argument("--lo-start", type=_pair, default=(0, 0),
                    metavar="SLOT,SYM")
    sp.add_argument("--n-beams", type=int, default=1)
    sp.add_argument("--unavailable", type=_pair, action="append", default=[],
                    metavar="SLOT,SYM", help="extra blocked symbol (repeatable)")
    sp.add_argument("--format", choices=["text", "csv"], default="text")

    sp = with_config(sub.add_parser("encode", help="emit the ON/OFF frame"))
    sp.add_argument("--codepoint", type=int, default=0)
    sp.add_argument("--format", choices=["csv", "hex"], default="csv")

    sp = with_config(sub.add_parser("generate", help="write an IQ file"))
    sp.add_argument("--codepoint", type=int, default=0)
    sp.add_argument("--mo-index", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--lpss", action="store_true",
                    help="generate the sync signal instead of a wake-up frame")
    sp.add_argument("--periods", type=int, default=2)
    sp.add_argument("--ook-shift", type=int, default=0)

    sp = with_config(sub.add_parser("decode", help="decode or measure an IQ file"))
    sp.add_argument("--iq", required=True)
    sp.add_argument("--receiver", choices=["ed", "cd"], default="ed")
    sp.add_argument("--mo-index", type=int, default=0)
    sp.add_argument("--method", choices=["pattern", "manchester"],
                    default="pattern")
    sp.add_argument("--threshold", type=float, default=None)
    sp.add_argument("--measure", action="store_true",
                    help="LP measurement report instead of detection")
    sp.add_argument("--sync", action="store_true",
                    help="sync-offset estimate instead of detection")
    sp.add_argument("--rsrq-normalization", choices=["average", "sum"],
                    default="average")
    sp.add_argument("--beam", type=int, default=0)
    sp.add_argument("--period", type=int, default=0)
    sp.add_argument("--search", type=int, default=None)

    sp = with_config(sub.add_parser("simulate", help="run a Monte-Carlo sweep"))
    sp.add_argument("--scenario",
                    choices=["wus_present", "noise_only", "lpss_sync"],
                    default="wus_present")
    sp.add_argument("--axis", choices=["snr_db", "cfo_hz", "timing"],
                    default="snr_db")
    sp.add_argument("--values", type=_float_list, default=[10.0],
                    metavar="V1,V2,...")
    sp.add_argument("--n-trials", type=int, default=100)
    sp.add_argument("--receiver", type=lambda s: s.split(","), default=["ed"],
                    metavar="ed[,cd]")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--payload-policy", choices=["cycle", "fixed"],
                    default="cycle")
    sp.add_argument("--fixed-codepoint", type=int, default=0)
    sp.add_argument("--snr-db", type=float, default=10.0)
    sp.add_argument("--cfo-hz", type=float, default=0.0)
    sp.add_argument("--timing-offset", type=int, default=0)
    sp.add_argument("--fading", choices=["none", "rayleigh_block"],
                    default="none")
    sp.add_argument("--method", choices=["pattern", "manchester"],
                    default="pattern")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--csv", default=None, help="also write rows to this file")

    sp = with_config(sub.add_parser("calibrate",
                                    help="fit the detection threshold to a FAR target"))
    sp.add_argument("--target-far", type=float, default=0.01)
    sp.add_argument("--n-trials", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--receiver", choices=["ed", "cd"], default="ed")
    sp.add_argument("--method", choices=["pattern", "manchester"],
                    default="pattern")
    sp.add_argument("--write-config", default=None,
                    help="write the config back with the threshold set")

    sp = with_config(sub.add_parser("vectors", help="emit golden vectors"))
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--codepoints", type=_int_list, default=None,
                    metavar="C1,C2,...")

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    return p


HANDLERS = {
    "validate": cmd_validate,
    "procedures": cmd_procedures,
    "encode": cmd_encode,
    "generate": cmd_generate,
    "decode": cmd_decode,
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "vectors": cmd_vectors,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    try:
        with make_client(args.server) as client:
            return HANDLERS[args.command](client, args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_RUNTIME
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
