"""Event streams, replay drivers, and metrics records.

Streams are JSON lines: vector events carry an id (inserts also the
vector); graph events carry the endpoint pair.  Replay drivers run one
engine over a stream and emit one metrics record per event plus a
summary; all randomness comes from explicit seeds.
"""

import hashlib
import json
import os
import time

import numpy as np

from . import instances
from .dyadic import DyadicResigner
from .graph import OrientedGraph, path_local_search, threshold_local_search
from .orientation import DedupWrapper
from .signtree import SigningTree

CSV_COLUMNS = {
    "dbg": ["t", "disc", "changed_coords", "recourse", "cum_recourse",
            "rebuilds", "phase_size", "frac_root"],
    "orient": ["t", "max_disc", "flips_this_event", "cum_recourse",
               "level_rebuilds", "pieces_live", "pruned_vol_cum"],
    "dyadic": ["t", "disc", "flips", "cum_recourse", "window", "intervals",
               "interval_disc"],
    "local-search-variant": ["t", "max_disc", "flips_this_event",
                             "cum_recourse", "edges"],
}


def write_events(path, events):
    with open(path, "w") as fh:
        for ev in events:
            fh.write(json.dumps(ev, sort_keys=True) + "\n")


def read_events(path):
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_csv(path, columns, rows):
    parent = os.path.dirname(str(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


class RandomSigningBaseline:
    """No-recourse baseline: every inserted vector keeps one random sign."""

    def __init__(self, n, rng):
        self.n = n
        self.rng = rng
        self.signs = {}
        self.vectors = {}
        self.sum = np.zeros(n)

    def insert(self, vid, vector):
        v = np.asarray(vector, dtype=float)
        s = 1 if self.rng.random() < 0.5 else -1
        self.signs[vid] = s
        self.vectors[vid] = v
        self.sum = self.sum + s * v

    def delete(self, vid):
        self.sum = self.sum - self.signs.pop(vid) * self.vectors.pop(vid)

    def signed_sum(self):
        return self.sum.copy()

    def disc(self):
        return float(np.abs(self.sum).max(initial=0.0))


# -- replay drivers ---------------------------------------------------------


def replay_dbg(events, n, seed):
    """Drive a SigningTree over vector events."""
    tree = SigningTree(n, rng=np.random.default_rng(seed))
    rows = []
    cum = 0
    t0 = time.perf_counter()
    for t, ev in enumerate(events, start=1):
        if ev["op"] == "insert":
            met = tree.insert(np.asarray(ev["vector"], dtype=float),
                              vid=ev.get("id", None))
        elif ev["op"] == "delete":
            met = tree.delete(ev["id"])
        else:
            raise ValueError(f"unknown op {ev['op']!r}")
        cum += met["recourse"]
        rows.append({
            "t": t, "disc": met["disc"], "changed_coords": met["changed_coords"],
            "recourse": met["recourse"], "cum_recourse": cum,
            "rebuilds": tree.phase_rebuilds, "phase_size": met["phase_size"],
            "frac_root": met["frac_root"],
        })
    wall = time.perf_counter() - t0
    summary = {
        "max_disc": max((r["disc"] for r in rows), default=0.0),
        "amortized_recourse": cum / max(len(events), 1),
        "wall_time": wall,
        "events": len(events),
        "rebuilds": tree.phase_rebuilds,
    }
    return rows, summary, tree


def replay_orient(events, n_hint, phi=None, scan_every=0):
    """Drive the dedup-wrapped orientation engine over graph events."""
    w = DedupWrapper(n_hint=n_hint, phi=phi)
    rows = []
    cum = 0
    t0 = time.perf_counter()
    prev_flips = 0
    for t, ev in enumerate(events, start=1):
        if ev["op"] == "insert":
            met = w.insert(ev["u"], ev["v"])
        elif ev["op"] == "delete":
            met = w.delete(ev["u"], ev["v"])
        else:
            raise ValueError(f"unknown op {ev['op']!r}")
        ls_flips = w.inner.cum_flips - prev_flips
        prev_flips = w.inner.cum_flips
        this = met["reorients"] + met["copy_flips"] + ls_flips
        cum += this
        rows.append({
            "t": t, "max_disc": w.inner.max_discrepancy(),
            "flips_this_event": this, "cum_recourse": cum,
            "level_rebuilds": w.inner.level_rebuilds,
            "pieces_live": len(w.inner.live_pieces()),
            "pruned_vol_cum": w.inner.pruned_vol_cum,
        })
        if scan_every and t % scan_every == 0:
            w.inner.scan_invariants()
            w.scan_dedup()
    wall = time.perf_counter() - t0
    summary = {
        "max_disc": max((r["max_disc"] for r in rows), default=0),
        "amortized_recourse": cum / max(len(events), 1),
        "wall_time": wall,
        "events": len(events),
        "level_rebuilds": w.inner.level_rebuilds,
        "flagged_pieces": w.inner.flagged_pieces,
    }
    return rows, summary, w


def replay_dyadic(events, n, seed):
    """Drive the dyadic resigner over an insert-only vector stream."""
    engine = DyadicResigner(n, rng=np.random.default_rng(seed))
    rows = []
    cum = 0
    t0 = time.perf_counter()
    for ev in events:
        if ev["op"] != "insert":
            raise ValueError("the dyadic resigner is insert-only")
        met = engine.insert(np.asarray(ev["vector"], dtype=float))
        cum += met["flips"]
        rows.append({
            "t": met["t"], "disc": met["disc"], "flips": met["flips"],
            "cum_recourse": cum, "window": met["window"],
            "intervals": met["intervals"], "interval_disc": met["interval_disc"],
        })
    wall = time.perf_counter() - t0
    summary = {
        "max_disc": max((r["disc"] for r in rows), default=0.0),
        "amortized_recourse": cum / max(len(events), 1),
        "wall_time": wall,
        "events": len(events),
        "max_interval_disc": engine.max_interval_disc,
    }
    return rows, summary, engine


def replay_local_search_variant(events, path_len=1, delta=2):
    """Maintain an orientation by path/threshold local search per event."""
    g = OrientedGraph()
    next_eid = 0
    pair_eids = {}
    rows = []
    cum = 0
    t0 = time.perf_counter()
    for t, ev in enumerate(events, start=1):
        pair = (min(ev["u"], ev["v"]), max(ev["u"], ev["v"]))
        if ev["op"] == "insert":
            g.add_edge(next_eid, ev["u"], ev["v"])
            pair_eids.setdefault(pair, []).append(next_eid)
            next_eid += 1
        else:
            eid = pair_eids[pair].pop()
            if not pair_eids[pair]:
                del pair_eids[pair]
            g.remove_edge(eid, drop_isolated=True)
        worklist = [v for v in (ev["u"], ev["v"]) if v in g.incident]
        if path_len <= 1:
            flips = threshold_local_search(g, delta, worklist=worklist)
        else:
            flips = path_local_search(g, path_len, worklist=worklist, delta=delta)
        cum += flips
        rows.append({
            "t": t, "max_disc": g.max_disc(), "flips_this_event": flips,
            "cum_recourse": cum, "edges": len(g.edges),
        })
    wall = time.perf_counter() - t0
    summary = {
        "max_disc": max((r["max_disc"] for r in rows), default=0),
        "amortized_recourse": cum / max(len(events), 1),
        "wall_time": wall,
        "events": len(events),
    }
    return rows, summary, g


def run_adaptive_adversary(t_total, n, seed, algo="dbg"):
    """Drive the rotation adversary against a signing algorithm.

    Returns (rows, summary, engine); the baseline algorithm is the
    no-recourse random signer, whose squared 2-norm grows exactly
    linearly on this stream.
    """
    if algo == "dbg":
        engine = SigningTree(n, rng=np.random.default_rng(seed))
        callback = lambda: engine.signed_sum
    elif algo == "baseline":
        engine = RandomSigningBaseline(n, rng=np.random.default_rng(seed))
        callback = engine.signed_sum
    else:
        raise ValueError(f"unknown adversary target {algo!r}")
    rows = []
    cum = 0
    for ev in instances.gen_orthogonal_adversary(t_total, callback, n=n):
        v = np.asarray(ev["vector"], dtype=float)
        if algo == "dbg":
            met = engine.insert(v, vid=ev["id"])
            cum += met["recourse"]
            disc = met["disc"]
        else:
            engine.insert(ev["id"], v)
            disc = engine.disc()
        rows.append({"t": ev["id"] + 1, "disc": disc, "cum_recourse": cum,
                     "norm2": float(np.linalg.norm(
                         engine.signed_sum if algo == "dbg"
                         else engine.signed_sum()))})
    summary = {
        "max_disc": max((r["disc"] for r in rows), default=0.0),
        "amortized_recourse": cum / max(t_total, 1),
        "final_norm2": rows[-1]["norm2"] if rows else 0.0,
    }
    return rows, summary, engine


# -- workload construction ---------------------------------------------------


VECTOR_KINDS = {"uniform-box", "unit-l2", "sparse-pm1"}
GRAPH_KINDS = {"graph-random", "graph-regular", "forest"}


def generate_workload(kind, n, t_total, seed, p_insert=None, d=None, s=None):
    """Events for the named workload kind, fully determined by the seed."""
    rng = np.random.default_rng(seed)
    if kind in VECTOR_KINDS:
        p = 1.0 if p_insert is None else p_insert
        return instances.gen_vector_stream(kind, n, t_total, rng,
                                           p_insert=p, s=s)
    if kind == "graph-random":
        p = 0.5 if p_insert is None else p_insert
        return instances.gen_graph_workload(n, t_total, rng, p_insert=p)
    if kind == "forest":
        p = 0.6 if p_insert is None else p_insert
        return instances.gen_forest_stream(n, t_total, rng, p_insert=p)
    if kind == "graph-regular":
        if d is None:
            raise ValueError("graph-regular needs a degree d")
        edges = instances.gen_random_regular(n, d, rng)
        return [{"op": "insert", "u": u, "v": v} for u, v in edges]
    raise ValueError(f"unknown workload kind {kind!r}")
