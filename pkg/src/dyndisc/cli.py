"""Command-line harness: replay, generation, and verification.

Subcommands: run | gen | verify | decompose | certify.  Configuration
comes from a plain key = value file plus flag overrides; unknown keys
are rejected.  Exit codes: 0 ok, 1 config error, 2 IO error, 3 invariant
violation (a violation is a hard failure, never a warning).
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import instances, streams
from .errors import InvariantViolation
from .expanders import certify_piece, decompose
from .graph import OrientedGraph, verify_local_opt

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_INVARIANT = 3

CONFIG_KEYS = {
    "algo": str, "workload": str, "n": int, "T": int, "seed": int,
    "phi": float, "gamma": float, "trials": int, "out_csv": str,
    "out_summary": str, "stream": str, "L": int, "delta": int,
    "d": int, "s": int, "k": int, "p_insert": float,
}

DEFAULTS = {
    "algo": "dbg", "workload": "uniform-box", "n": 8, "T": 256, "seed": 0,
    "trials": 1, "L": 1, "delta": 2,
}

ALGOS = ("dbg", "orient", "dyadic", "local-search-variant")


class ConfigError(Exception):
    pass


def parse_config_file(path):
    cfg = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
            try:
                cfg[key] = CONFIG_KEYS[key](val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{ln}: bad value for {key}: {exc}")
    return cfg


def build_config(args):
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(parse_config_file(args.config))
    for key in ("algo", "seed", "phi", "gamma", "trials"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "out", None):
        cfg["out_csv"] = args.out + ".csv"
        cfg["out_summary"] = args.out + ".json"
    if cfg["algo"] not in ALGOS:
        raise ConfigError(f"unknown algo {cfg['algo']!r}")
    if cfg["trials"] < 1:
        raise ConfigError("trials must be >= 1")
    if cfg["workload"] == "orthogonal-adversary" and cfg["algo"] != "dbg":
        raise ConfigError("the rotation adversary drives the dbg engine")
    return cfg


def _run_one_trial(cfg, events, trial):
    seed = cfg["seed"] + trial
    algo = cfg["algo"]
    if events is None:
        if cfg["workload"] == "orthogonal-adversary":
            rows, summary, _ = streams.run_adaptive_adversary(
                cfg["T"], cfg["n"], seed, algo="dbg")
            return rows, summary
        events = streams.generate_workload(
            cfg["workload"], cfg["n"], cfg["T"], seed,
            p_insert=cfg.get("p_insert"), d=cfg.get("d"), s=cfg.get("s"))
    if algo == "dbg":
        rows, summary, _ = streams.replay_dbg(events, cfg["n"], seed)
    elif algo == "orient":
        rows, summary, _ = streams.replay_orient(
            events, cfg["n"], phi=cfg.get("phi"))
    elif algo == "dyadic":
        rows, summary, _ = streams.replay_dyadic(events, cfg["n"], seed)
    else:
        rows, summary, _ = streams.replay_local_search_variant(
            events, path_len=cfg["L"], delta=cfg["delta"])
    return rows, summary


def cmd_run(args):
    cfg = build_config(args)
    events = None
    if cfg.get("stream"):
        events = streams.read_events(cfg["stream"])
    trials = cfg["trials"]
    if trials == 1:
        results = [_run_one_trial(cfg, events, 0)]
    else:
        with ThreadPoolExecutor(max_workers=min(trials, 8)) as pool:
            futures = [pool.submit(_run_one_trial, cfg, events, k)
                       for k in range(trials)]
            results = [f.result() for f in futures]
    algo = cfg["algo"]
    columns = streams.CSV_COLUMNS[algo]
    if cfg["workload"] == "orthogonal-adversary":
        columns = ["t", "disc", "cum_recourse", "norm2"]
    out_csv = cfg.get("out_csv")
    if out_csv:
        for k, (rows, _) in enumerate(results):
            path = out_csv if k == 0 else f"{out_csv}.trial{k}"
            streams.write_csv(path, columns, rows)
    per_trial = [summary for _, summary in results]
    merged = {
        "max_disc": max(s["max_disc"] for s in per_trial),
        "amortized_recourse": float(np.mean(
            [s["amortized_recourse"] for s in per_trial])),
        "wall_time": float(sum(s.get("wall_time", 0.0) for s in per_trial)),
        "trials": per_trial,
        "config": {k: v for k, v in sorted(cfg.items())},
    }
    out_summary = cfg.get("out_summary")
    if out_summary:
        parent = os.path.dirname(out_summary)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(out_summary, "w") as fh:
            json.dump(merged, fh, indent=1, sort_keys=True)
    print(json.dumps({k: merged[k] for k in
                      ("max_disc", "amortized_recourse", "wall_time")}))
    return EXIT_OK


# -- gen ----------------------------------------------------------------------


def write_vector_instance(path, vectors, signs, mode):
    with open(path, "w") as fh:
        fh.write(json.dumps({"kind": "vector-instance",
                             "n": int(np.asarray(vectors).shape[1]),
                             "mode": mode}) + "\n")
        for vec, sign in zip(np.asarray(vectors), signs):
            fh.write(json.dumps({"vector": [float(x) for x in vec],
                                 "sign": int(sign)}) + "\n")


def read_vector_instance(path):
    with open(path) as fh:
        header = json.loads(fh.readline())
        vectors = []
        signs = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            vectors.append(rec["vector"])
            signs.append(rec["sign"])
    return np.asarray(vectors), np.asarray(signs), header


def cmd_gen(args):
    kind = args.workload
    out = args.out
    if out is None:
        raise ConfigError("gen requires --out")
    if kind == "pm1-localopt":
        rows, signs = instances.gen_pm1_localopt(args.n)
        write_vector_instance(out, rows, signs, "pm1")
    elif kind == "2d-localopt":
        vecs, signs = instances.gen_2d_localopt(args.T)
        write_vector_instance(out, vecs, signs, "general")
    elif kind == "layered":
        g, _ = instances.gen_layered_graph(args.k, args.L)
        g.dump(out)
    else:
        events = streams.generate_workload(
            kind, args.n, args.T, args.seed if args.seed is not None else 0,
            p_insert=args.p_insert, d=args.d, s=args.s)
        streams.write_events(out, events)
    print(streams.sha256_file(out))
    return EXIT_OK


# -- verify ---------------------------------------------------------------------


def _verify_vector_local_opt(args):
    vectors, signs, header = read_vector_instance(args.subject)
    mode = header.get("mode", "general")
    ok, witness = instances.verify_vector_local_opt(vectors, signs, mode=mode)
    return {"kind": "vector-local-opt", "pass": bool(ok),
            "witness_index": witness, "mode": mode, "rows": len(signs)}


def _verify_graph_local_opt(args):
    g = OrientedGraph.load(args.subject)
    ok, witness = verify_local_opt(g, max_len=args.L, delta=args.delta)
    return {"kind": "graph-local-opt", "pass": bool(ok),
            "witness_path": witness, "L": args.L, "delta": args.delta,
            "max_disc": g.max_disc()}


def _verify_expander_cert(args):
    with open(args.subject) as fh:
        doc = json.load(fh)
    phi, gamma = doc["phi"], doc["gamma"]
    reports = []
    all_ok = True
    for ids in doc["pieces"]:
        g = OrientedGraph()
        for eid in ids:
            u, v = doc["edges"][str(eid)]
            g.add_edge(eid, u, v)
        cert = certify_piece(g, phi, gamma)
        reports.append({"edges": len(ids), "pass": bool(cert.passed),
                        "mode": cert.mode, "achieved": cert.achieved})
        all_ok = all_ok and cert.passed
    return {"kind": "expander-cert", "pass": all_ok, "pieces": reports,
            "phi": phi, "gamma": gamma}


def _verify_dbg_snapshot(args):
    with open(args.subject) as fh:
        snap = json.load(fh)
    problems = []
    live = set(snap["live_ids"])
    if set(snap["signs"]) != live:
        problems.append("signs do not cover exactly the live ids")
    if any(s not in (-1, 1) for s in snap["signs"].values()):
        problems.append("non-integral sign")
    if not set(snap["fractional_root_ids"]) <= live:
        problems.append("fractional ids not live")
    size = snap["phase_size"]
    if args.n:
        block = 2 * args.n
        leaves = size // block
        if size % block != 0 or leaves & (leaves - 1):
            problems.append(f"phase size {size} is not 2n * 2^k")
        if len(snap["fractional_root_ids"]) > args.n:
            problems.append("more than n fractional root ids")
    if len(live) > size:
        problems.append("more live ids than slots")
    return {"kind": "dbg-invariants", "pass": not problems,
            "witness": problems or None}


def _verify_dedup(args):
    with open(args.subject) as fh:
        doc = json.load(fh)
    inner = {}
    for u, v, head in doc["inner"]:
        inner[(u, v) if u < v else (v, u)] = head
    problems = []
    for rec in doc["pairs"]:
        pair = (rec["u"], rec["v"]) if rec["u"] < rec["v"] else (rec["v"], rec["u"])
        heads = rec["heads"]
        total = sum(1 if h == pair[1] else -1 for h in heads)
        if len(heads) % 2 == 0:
            if pair in inner:
                problems.append(f"even pair {pair} present in inner graph")
            if total != 0:
                problems.append(f"even pair {pair} unbalanced")
        else:
            if pair not in inner:
                problems.append(f"odd pair {pair} missing from inner graph")
            elif total != (1 if inner[pair] == pair[1] else -1):
                problems.append(f"odd pair {pair} disagrees with inner sign")
    return {"kind": "dedup-invariants", "pass": not problems,
            "witness": problems or None}


VERIFY_KINDS = {
    "vector-local-opt": _verify_vector_local_opt,
    "graph-local-opt": _verify_graph_local_opt,
    "expander-cert": _verify_expander_cert,
    "dbg-invariants": _verify_dbg_snapshot,
    "dedup-invariants": _verify_dedup,
}


def cmd_verify(args):
    report = VERIFY_KINDS[args.kind](args)
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK if report["pass"] else EXIT_INVARIANT


def cmd_decompose(args):
    g = OrientedGraph.load(args.subject)
    result = decompose(g, phi=args.phi)
    if args.out:
        result.dump(args.out)
    print(json.dumps({
        "pieces": len(result.pieces),
        "phi": result.phi,
        "gamma": result.gamma,
        "membership_histogram": {str(k): v for k, v in
                                 sorted(result.membership_histogram().items())},
        "certified": sum(1 for c in result.certificates if c.passed),
    }))
    return EXIT_OK


def cmd_certify(args):
    g = OrientedGraph.load(args.subject)
    phi = args.phi if args.phi is not None else 1.0 / math.ceil(
        math.log2(max(len(g.incident), 2)))
    gamma = args.gamma if args.gamma is not None else phi / 4.0
    cert = certify_piece(g, phi, gamma)
    report = {
        "pass": bool(cert.passed), "weakly_regular": bool(cert.weakly_regular),
        "expansion_ok": bool(cert.expansion_ok), "mode": cert.mode,
        "achieved": cert.achieved, "phi": phi, "gamma": gamma,
        "witness": list(cert.witness) if cert.witness else None,
    }
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK if cert.passed else EXIT_INVARIANT


def make_parser():
    p = argparse.ArgumentParser(prog="dyndisc",
                                description="dynamic discrepancy harness")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replay a workload through an engine")
    run.add_argument("--config")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output prefix (.csv / .json)")
    run.add_argument("--algo", choices=ALGOS)
    run.add_argument("--phi", type=float)
    run.add_argument("--gamma", type=float)
    run.add_argument("--trials", type=int)
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("gen", help="write a stream or instance file")
    gen.add_argument("--workload", required=True)
    gen.add_argument("--n", type=int, default=8)
    gen.add_argument("--T", type=int, default=256)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--k", type=int, default=4)
    gen.add_argument("--L", type=int, default=1)
    gen.add_argument("--d", type=int)
    gen.add_argument("--s", type=int)
    gen.add_argument("--p-insert", dest="p_insert", type=float)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    ver = sub.add_parser("verify", help="check a dumped artifact")
    ver.add_argument("--kind", choices=sorted(VERIFY_KINDS), required=True)
    ver.add_argument("subject")
    ver.add_argument("--n", type=int)
    ver.add_argument("--L", type=int, default=1)
    ver.add_argument("--delta", type=int, default=2)
    ver.set_defaults(func=cmd_verify)

    dec = sub.add_parser("decompose", help="expander-decompose a graph dump")
    dec.add_argument("subject")
    dec.add_argument("--phi", type=float)
    dec.add_argument("--out")
    dec.set_defaults(func=cmd_decompose)

    cert = sub.add_parser("certify", help="certify one piece")
    cert.add_argument("subject")
    cert.add_argument("--phi", type=float)
    cert.add_argument("--gamma", type=float)
    cert.set_defaults(func=cmd_certify)
    return p


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
