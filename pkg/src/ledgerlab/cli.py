"""Command-line entry point.

Subcommands: ``trace gen|validate|dist|monitor``, ``props check|canon``,
``contract list|check``, ``graph dump``.  Exit codes: 0 clean, 1 property
violation, 2 usage or parse error, 3 internal invariant breach.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import gen, serialize
from .contracts import CONTRACTS, check_contract_on_traces, induce_trace_map
from .core import KeyCollisionError
from .graphs import build_ledger_graph, project_ledger_graph
from .properties import (
    ReplayRejection,
    assign_slots,
    build_tx_poset,
    canonical_presentation,
    check_disjointness,
    check_replay_protection,
    check_trivial_update_protection,
    check_well_founded,
    enumerate_valid_permutations,
    replay_sequence,
)
from .traces import (
    SafetyMonitor,
    TracePrefix,
    check_non_expanding,
    generate_valid_traces,
    monitor_trace,
    ultra_distance,
    validate_trace_prefix,
)

EXIT_CLEAN = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

OUT_DIR_ENV = "LEDGERLAB_OUT"


class UsageError(Exception):
    pass


MONITORS = {
    "utxo-empty": SafetyMonitor(
        "utxo-empty", lambda p: any(len(u) == 0 for u in p.states)
    ),
    "duplicate-tx": SafetyMonitor(
        "duplicate-tx",
        lambda p: p.annotations is not None
        and len({tx for _, tx in p.annotations}) < len(p.annotations),
    ),
    "duplicate-state": SafetyMonitor(
        "duplicate-state", lambda p: len(set(p.states)) < len(p.states)
    ),
}


def _inputs_digest(*chunks: str) -> str:
    h = hashlib.sha256()
    for chunk in chunks:
        h.update(hashlib.sha256(chunk.encode("utf-8")).digest())
    return h.hexdigest()


def _report(command: str, verdicts: List[dict], inputs_digest: str, **extra) -> dict:
    report = {
        "command": command,
        "verdicts": verdicts,
        "inputs_digest": inputs_digest,
    }
    report.update(extra)
    return report


def _emit(report: dict) -> int:
    print(json.dumps(report, sort_keys=True, indent=2))
    if all(v["clean"] for v in report["verdicts"]):
        return EXIT_CLEAN
    return EXIT_VIOLATION


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (path, exc)) from exc


def _out_dir(arg: Optional[str]) -> Path:
    path = arg or os.environ.get(OUT_DIR_ENV) or "."
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _vertex_label(payload) -> str:
    raw = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:16]


# --- trace commands ---------------------------------------------------------

def cmd_trace_gen(args) -> int:
    token = bytes.fromhex(args.token) if args.token else None
    scenario = gen.make_scenario(
        args.seed, n_outputs=args.outputs, token=token, token_present=False
    )
    contract = CONTRACTS["nft"](token) if token else None
    hook = contract.additional_checks if contract else None
    traces = generate_valid_traces(
        [scenario.initial_utxo],
        [scenario.initial_slot],
        gen.make_proposer(token=token),
        depth=args.depth,
        count=args.count,
        seed=args.seed,
        additional_checks=hook,
    )
    out = _out_dir(args.out)
    manifest = {"seed": args.seed, "depth": args.depth, "count": args.count,
                "files": []}
    for k, prefix in enumerate(traces):
        text = serialize.dump_trace(
            prefix, scenario.genesis_txs, [scenario.initial_slot]
        )
        name = "trace_%03d.json" % k
        (out / name).write_text(text)
        manifest["files"].append(
            {"name": name, "digest": serialize.digest(text),
             "truncated": prefix.truncated}
        )
    manifest_text = json.dumps(manifest, sort_keys=True, separators=(",", ":")) + "\n"
    (out / "manifest.json").write_text(manifest_text)
    print(json.dumps({"manifest_digest": serialize.digest(manifest_text),
                      "written": len(traces)}, sort_keys=True))
    return EXIT_CLEAN


def cmd_trace_validate(args) -> int:
    text = _read(args.file)
    prefix, genesis, initial_slots = serialize.load_trace(text)
    verdicts = []
    if genesis:
        wf = check_well_founded(prefix.states[0], genesis)
        verdicts.append(
            {"check": "well-founded", "clean": wf.ok, "witness": wf.reason}
        )
    slots = initial_slots
    if not slots and prefix.annotations:
        slots = [prefix.annotations[0][0]]
    result = validate_trace_prefix(prefix, [prefix.states[0]], slots or [0])
    verdicts.append(
        {"check": "valid-trace", "clean": result.ok, "witness": result.reason}
    )
    return _emit(_report("trace validate", verdicts, _inputs_digest(text)))


def cmd_trace_dist(args) -> int:
    text_a, text_b = _read(args.file_a), _read(args.file_b)
    a, _, _ = serialize.load_trace(text_a)
    b, _, _ = serialize.load_trace(text_b)
    d = ultra_distance(a, b)
    print(
        json.dumps(
            {
                "exact": d.exact,
                "value": str(d.value),
                "inputs_digest": _inputs_digest(text_a, text_b),
            },
            sort_keys=True,
        )
    )
    return EXIT_CLEAN


def cmd_trace_monitor(args) -> int:
    if args.monitor not in MONITORS:
        raise UsageError("unknown monitor %r; have %s"
                         % (args.monitor, sorted(MONITORS)))
    text = _read(args.file)
    prefix, _, _ = serialize.load_trace(text)
    violated_at = monitor_trace(MONITORS[args.monitor], prefix)
    verdicts = [
        {
            "check": "monitor:%s" % args.monitor,
            "clean": violated_at is None,
            "witness": violated_at,
        }
    ]
    return _emit(_report("trace monitor", verdicts, _inputs_digest(text)))


# --- props commands ---------------------------------------------------------

def _load_and_replay(path: str):
    text = _read(path)
    initial, steps, genesis = serialize.load_run(text)
    slots = [slot for slot, _ in steps]
    txs = [tx for _, tx in steps]
    outcome = replay_sequence(initial, slots, txs)
    return text, initial, steps, genesis, outcome


def cmd_props_check(args) -> int:
    text, initial, steps, genesis, outcome = _load_and_replay(args.run)
    verdicts = []
    if isinstance(outcome, ReplayRejection):
        verdicts.append(
            {"check": "replay-valid", "clean": False,
             "witness": [outcome.index, outcome.reason]}
        )
        return _emit(_report("props check", verdicts, _inputs_digest(text)))
    verdicts.append({"check": "replay-valid", "clean": True, "witness": None})
    if genesis:
        wf = check_well_founded(initial, genesis)
        verdicts.append(
            {"check": "well-founded", "clean": wf.ok, "witness": wf.reason}
        )
    for name, checker in (
        ("replay-protection", check_replay_protection),
        ("trivial-update-protection", check_trivial_update_protection),
        ("disjointness", check_disjointness),
    ):
        verdict = checker(outcome)
        verdicts.append(
            {"check": name, "clean": verdict.clean,
             "witness": repr(verdict.witness) if verdict.witness else None}
        )
    return _emit(_report("props check", verdicts, _inputs_digest(text)))


def cmd_props_canon(args) -> int:
    text, initial, steps, genesis, outcome = _load_and_replay(args.run)
    if isinstance(outcome, ReplayRejection):
        verdicts = [
            {"check": "replay-valid", "clean": False,
             "witness": [outcome.index, outcome.reason]}
        ]
        return _emit(_report("props canon", verdicts, _inputs_digest(text)))
    poset = build_tx_poset(outcome)
    presentation = canonical_presentation(poset)
    extra = {
        "levels": list(poset.levels),
        "canonical_presentation": presentation,
    }
    if args.enumerate:
        perms = enumerate_valid_permutations(poset, args.cap)
        valid = []
        for seq in perms.sequences:
            txs = [outcome.steps[i].tx for i in seq]
            slots = assign_slots(txs)
            if slots is None:
                continue
            replayed = replay_sequence(initial, slots, txs)
            if not isinstance(replayed, ReplayRejection):
                valid.append(list(seq))
        extra["permutations"] = valid
        extra["capped"] = perms.capped
    verdicts = [{"check": "replay-valid", "clean": True, "witness": None}]
    return _emit(_report("props canon", verdicts, _inputs_digest(text), **extra))


# --- contract commands ------------------------------------------------------

def cmd_contract_list(args) -> int:
    print(json.dumps({"contracts": sorted(CONTRACTS)}, sort_keys=True))
    return EXIT_CLEAN


def cmd_contract_check(args) -> int:
    if args.name not in CONTRACTS:
        raise UsageError("unknown contract %r; have %s"
                         % (args.name, sorted(CONTRACTS)))
    token = bytes.fromhex(args.token) if args.token else b"NFT"
    sc = CONTRACTS[args.name](token)
    texts = [_read(path) for path in args.traces]
    traces = [serialize.load_trace(t)[0] for t in texts]
    report = check_contract_on_traces(sc, traces)
    verdicts = [
        {
            "check": "step-correctness",
            "clean": not report.failures,
            "witness": list(report.failures[:5]),
        }
    ]
    extra = {"steps_checked": report.steps_checked}
    if args.induce:
        out = _out_dir(args.out)
        for k, prefix in enumerate(traces):
            induced = induce_trace_map(sc, prefix)
            (out / ("contract_trace_%03d.json" % k)).write_text(
                serialize.dump_contract_trace(induced)
            )
    if args.nonexpanding:
        pairs = []
        for i in range(len(traces)):
            for j in range(i + 1, len(traces)):
                pairs.append((traces[i], traces[j]))
        checked = 0
        violations = []
        for idx, (a, b) in enumerate(pairs):
            d_src = ultra_distance(a, b)
            d_img = ultra_distance(induce_trace_map(sc, a), induce_trace_map(sc, b))
            if d_src.exact and d_img.exact:
                checked += 1
                if d_img.value > d_src.value:
                    violations.append(idx)
        verdicts.append(
            {"check": "non-expanding", "clean": not violations,
             "witness": violations[:5]}
        )
        extra["pairs_checked"] = checked
    return _emit(
        _report("contract check", verdicts, _inputs_digest(*texts), **extra)
    )


# --- graph commands ---------------------------------------------------------

def cmd_graph_dump(args) -> int:
    scenario = gen.make_scenario(args.seed, n_outputs=2)
    # derive a small transaction universe from one generated run
    traces = generate_valid_traces(
        [scenario.initial_utxo],
        [scenario.initial_slot],
        gen.make_proposer(max_spend=2, max_create=2),
        depth=args.depth,
        count=1,
        seed=args.seed,
    )
    annotations = traces[0].annotations or ()
    tx_universe = [tx for _, tx in annotations]
    slot_universe = sorted({scenario.initial_slot} | {s for s, _ in annotations})
    lam = build_ledger_graph(
        [scenario.initial_utxo], [scenario.initial_slot], tx_universe, slot_universe
    )
    lam_prime, _phi = project_ledger_graph(lam)
    out = _out_dir(args.out)

    def label_triple(v):
        q, u, t = v
        return _vertex_label(
            [q, serialize.utxo_to_json(u), serialize.tx_to_json(t)]
        )

    def label_state(u):
        return _vertex_label(serialize.utxo_to_json(u))

    lam_text = serialize.dump_graph(lam, label_triple)
    prime_text = serialize.dump_graph(lam_prime, label_state)
    (out / "lambda.json").write_text(lam_text)
    (out / "lambda_prime.json").write_text(prime_text)
    print(
        json.dumps(
            {
                "lambda_vertices": len(lam.vertices),
                "lambda_prime_vertices": len(lam_prime.vertices),
                "lambda_digest": serialize.digest(lam_text),
                "lambda_prime_digest": serialize.digest(prime_text),
            },
            sort_keys=True,
        )
    )
    return EXIT_CLEAN


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ledgerlab",
        description="UTxO ledger semantics laboratory",
    )
    top = parser.add_subparsers(dest="group", required=True)

    trace = top.add_parser("trace", help="trace generation and analysis")
    trace_sub = trace.add_subparsers(dest="command", required=True)
    p = trace_sub.add_parser("gen", help="generate valid trace files")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--outputs", type=int, default=4)
    p.add_argument("--token", help="hex token id; restricts to the NFT policy")
    p.add_argument("--out")
    p.set_defaults(func=cmd_trace_gen)
    p = trace_sub.add_parser("validate", help="re-validate a trace file")
    p.add_argument("file")
    p.set_defaults(func=cmd_trace_validate)
    p = trace_sub.add_parser("dist", help="ultrametric distance of two traces")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.set_defaults(func=cmd_trace_dist)
    p = trace_sub.add_parser("monitor", help="run a safety monitor")
    p.add_argument("file")
    p.add_argument("--monitor", required=True)
    p.set_defaults(func=cmd_trace_monitor)

    props = top.add_parser("props", help="run-level ledger properties")
    props_sub = props.add_subparsers(dest="command", required=True)
    p = props_sub.add_parser("check", help="replay a run and check properties")
    p.add_argument("--run", required=True)
    p.set_defaults(func=cmd_props_check)
    p = props_sub.add_parser("canon", help="dependency levels, canonical order")
    p.add_argument("--run", required=True)
    p.add_argument("--enumerate", action="store_true")
    p.add_argument("--cap", type=int, default=720)
    p.set_defaults(func=cmd_props_canon)

    contract = top.add_parser("contract", help="structured contracts")
    contract_sub = contract.add_subparsers(dest="command", required=True)
    p = contract_sub.add_parser("list", help="registered contracts")
    p.set_defaults(func=cmd_contract_list)
    p = contract_sub.add_parser("check", help="check a contract over traces")
    p.add_argument("--name", required=True)
    p.add_argument("--token", help="hex token id (default NFT)")
    p.add_argument("--traces", nargs="+", required=True)
    p.add_argument("--induce", action="store_true")
    p.add_argument("--nonexpanding", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_contract_check)

    graph = top.add_parser("graph", help="transition graph dumps")
    graph_sub = graph.add_subparsers(dest="command", required=True)
    p = graph_sub.add_parser("dump", help="dump a small ledger graph")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_graph_dump)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_CLEAN
    try:
        return args.func(args)
    except (UsageError, serialize.FormatError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (KeyCollisionError, RuntimeError) as exc:
        print("internal invariant breach: %s" % exc, file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
