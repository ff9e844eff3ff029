"""Fully-dynamic low-discrepancy edge orientation.

Edges live on levels with capacity 2^i.  An insert lands on the
smallest level whose prefix fits, emptying lower levels into it; the
rebuilt level is decomposed into weakly-regular expander pieces, each
oriented to discrepancy at most 1.  A delete either dissolves its piece
(once the piece's deletion budget is spent) and re-inserts the
survivors, or prunes the piece and repairs the orientation through fake
vertices plus local search.  A dedup wrapper on top handles parallel
edges so the inner engine always sees a simple graph.
"""

import math
from dataclasses import dataclass, field

from .errors import InvariantViolation, UnknownEdge
from .expanders import decompose
from .graph import (OrientedGraph, discrepancy_one_orientation, local_search,
                    verify_local_opt)
from .pruning import PrunedExpander


@dataclass
class Piece:
    pid: int
    level: int
    created: int                      # engine moment of creation
    pruned: PrunedExpander            # owns the oriented piece graph
    certified: bool
    cert_mode: str

    @property
    def graph(self):
        return self.pruned.g


@dataclass
class Level:
    index: int
    eids: set = field(default_factory=set)
    pieces: dict = field(default_factory=dict)   # pid -> Piece
    created: int = 0


def reorient_with_fakes(graph, delta_p_count, boundary_records, seed_worklist=()):
    """Replace pruned-vertex boundary edges by fake-vertex edges, then
    local-search the fakes away one at a time.

    `graph` is the piece orientation after the pruned vertices and all
    their edges were removed.  `boundary_records` are (eid, u, v, head)
    tuples of the removed edges with exactly one surviving endpoint; the
    surviving endpoint keeps its orientation role, so real imbalances are
    unchanged by the redistribution.  Returns a diagnostics dict with
    flip counts, the potential before local search, and the fake
    imbalances right after redistribution.
    """
    n_fake = delta_p_count
    survivors = set(graph.incident)
    out_recs = []   # oriented from a surviving vertex into the pruned set
    in_recs = []    # oriented from the pruned set into a surviving vertex
    for eid, u, v, head in boundary_records:
        real = u if u in survivors else v
        if head == real:
            in_recs.append((real, eid))
        else:
            out_recs.append((real, eid))
    # edges of one real vertex stay consecutive; round-robin over fakes
    out_recs.sort()
    in_recs.sort()
    fake_ids = [-(j + 1) for j in range(n_fake)]
    for f in fake_ids:
        graph.add_vertex(f)
    for i, (real, eid) in enumerate(out_recs, start=1):
        fake = fake_ids[i % n_fake]
        graph.add_edge(eid, real, fake, head=fake)
    for i, (real, eid) in enumerate(in_recs, start=1):
        fake = fake_ids[i % n_fake]
        graph.add_edge(eid, fake, real, head=real)
    fake_imbalances = [graph.imbalance[f] for f in fake_ids]
    phi_after_redistribution = graph.potential
    flips = 0
    touched = set(r for r, _ in out_recs) | set(r for r, _ in in_recs) | set(fake_ids)
    touched.update(v for v in seed_worklist if v in graph.incident)
    flips += local_search(graph, worklist=touched)
    ok, _ = verify_local_opt(graph)
    if not ok:
        flips += local_search(graph)
    for f in fake_ids:
        neighbors = set()
        for eid in list(graph.incident[f]):
            u, v, _ = graph.edges[eid]
            neighbors.add(u if u != f else v)
        graph.remove_vertex(f)
        flips += local_search(graph, worklist=neighbors)
    ok, _ = verify_local_opt(graph)
    if not ok:
        flips += local_search(graph)
    return {
        "flips": flips,
        "phi_after_redistribution": phi_after_redistribution,
        "fake_imbalances": fake_imbalances,
        "out_deg": len(out_recs),
        "in_deg": len(in_recs),
    }


class OrientationEngine:
    """Level/scale table over a simple graph (no parallel edges)."""

    def __init__(self, n_hint=256, phi=None):
        if phi is None:
            phi = 1.0 / math.ceil(math.log2(max(n_hint, 2)))
        self.phi = phi
        self.gamma = phi / 4.0
        self.levels = {}              # index -> Level
        self.edge_pair = {}           # eid -> (u, v)
        self.pair_eid = {}            # (u, v) sorted -> eid
        self.edge_piece = {}          # eid -> (level index, pid)
        self.orient = {}              # eid -> head
        self.imbalance = {}           # vertex -> in - out over live edges
        self.next_eid = 0
        self.next_pid = 0
        self.moment = 0               # internal clock
        self.level_rebuilds = 0
        self.cum_flips = 0
        self.pruned_vol_cum = 0
        self.flagged_pieces = 0
        self._prev_heads = {}

    # -- bookkeeping -------------------------------------------------------

    def _note_prev(self, eid):
        if eid in self.orient and eid not in self._prev_heads:
            self._prev_heads[eid] = self.orient[eid]

    def _set_orientation(self, eid, u, v, head):
        old = self.orient.get(eid)
        if old is not None:
            tail_old = u if old == v else v
            self.imbalance[old] -= 1
            self.imbalance[tail_old] += 1
        tail = u if head == v else v
        self.imbalance.setdefault(head, 0)
        self.imbalance.setdefault(tail, 0)
        self.imbalance[head] += 1
        self.imbalance[tail] -= 1
        self.orient[eid] = head

    def _drop_orientation(self, eid):
        head = self.orient.pop(eid)
        u, v = self.edge_pair[eid]
        tail = u if head == v else v
        self.imbalance[head] -= 1
        self.imbalance[tail] += 1

    def _reconcile_piece(self, piece):
        """Mirror a piece's current orientations into the global view."""
        g = piece.graph
        for eid in g.edges:
            head = g.head(eid)
            if self.orient.get(eid) != head:
                self._note_prev(eid)
                u, v = self.edge_pair[eid]
                self._set_orientation(eid, u, v, head)

    # -- events ------------------------------------------------------------

    def insert_edge(self, u, v, eid=None):
        """Adversarial or internal insert; returns the edge id used."""
        if u == v:
            raise ValueError("self-loop rejected")
        pair = (u, v) if u < v else (v, u)
        if pair in self.pair_eid:
            raise ValueError(f"edge {pair} already present; wrap with dedup")
        if eid is None:
            eid = self.next_eid
            self.next_eid += 1
        self.edge_pair[eid] = pair
        self.pair_eid[pair] = eid
        target = 0
        cum = 1
        while True:
            cum_next = cum + len(self.levels.get(target, Level(target)).eids)
            if cum_next <= (1 << target):
                break
            cum = cum_next
            target += 1
        gathered = {eid}
        for i in range(target + 1):
            lev = self.levels.get(i)
            if lev is None:
                continue
            gathered.update(lev.eids)
            for pc in lev.pieces.values():
                for e2 in pc.graph.edges:
                    self.edge_piece.pop(e2, None)
            lev.eids.clear()
            lev.pieces.clear()
        self.moment += 1
        self._rebuild_level(target, gathered)
        return eid

    def _rebuild_level(self, index, eids):
        lev = self.levels.setdefault(index, Level(index))
        lev.eids = set(eids)
        lev.created = self.moment
        lev.pieces = {}
        self.level_rebuilds += 1
        if not eids:
            return
        sub = OrientedGraph()
        for e2 in sorted(eids):
            u, v = self.edge_pair[e2]
            head = self.orient.get(e2, v)
            self._note_prev(e2)
            sub.add_edge(e2, u, v, head)
        result = decompose(sub, phi=self.phi)
        for pg, cert in zip(result.pieces, result.certificates):
            discrepancy_one_orientation(pg)
            piece = Piece(pid=self.next_pid, level=index, created=self.moment,
                          pruned=PrunedExpander(pg, self.phi),
                          certified=cert.passed, cert_mode=cert.mode)
            self.next_pid += 1
            if not cert.passed:
                self.flagged_pieces += 1
            lev.pieces[piece.pid] = piece
            for e2 in pg.edges:
                self.edge_piece[e2] = (index, piece.pid)
            self._reconcile_piece(piece)

    def delete_edge(self, u, v):
        pair = (u, v) if u < v else (v, u)
        eid = self.pair_eid.get(pair)
        if eid is None:
            raise UnknownEdge(pair)
        level_idx, pid = self.edge_piece[eid]
        lev = self.levels[level_idx]
        piece = lev.pieces[pid]
        self._note_prev(eid)
        # unregister the deleted edge globally
        self._drop_orientation(eid)
        del self.pair_eid[pair]
        del self.edge_pair[eid]
        del self.edge_piece[eid]
        lev.eids.discard(eid)
        if piece.pruned.deletions + 1 >= piece.pruned.budget:
            self._dissolve(piece, eid)
        else:
            delta_p, removed, _ = piece.pruned.prune(eid)
            self.pruned_vol_cum += sum(piece.pruned.vol0[x] for x in delta_p)
            boundary = [r for r in removed
                        if (r[1] in piece.graph.incident)
                        != (r[2] in piece.graph.incident)]
            # records with both endpoints pruned are interior
            diag = reorient_with_fakes(piece.graph, len(delta_p), boundary,
                                       seed_worklist=pair)
            self.moment += 1
            self.cum_flips += diag["flips"]
            self._reconcile_piece(piece)
            if not piece.graph.edges:
                del lev.pieces[piece.pid]
            for e2 in sorted(r[0] for r in removed):
                self._internal_reinsert(e2)
        return eid

    def _dissolve(self, piece, deleted_eid):
        lev = self.levels[piece.level]
        survivors = sorted(e for e in piece.graph.edges if e != deleted_eid)
        for e2 in list(piece.graph.edges):
            if e2 in self.edge_piece:
                del self.edge_piece[e2]
            lev.eids.discard(e2)
        del lev.pieces[piece.pid]
        if deleted_eid in piece.graph.edges:
            piece.graph.remove_edge(deleted_eid)
        for e2 in survivors:
            self._internal_reinsert(e2)

    def _internal_reinsert(self, eid):
        """Move an edge that fell out of its piece back through Insert."""
        u, v = self.edge_pair[eid]
        self._note_prev(eid)
        # withdraw from global view and from its previous registration
        if eid in self.orient:
            self._drop_orientation(eid)
        where = self.edge_piece.pop(eid, None)
        if where is not None:
            self.levels[where[0]].eids.discard(eid)
        del self.edge_pair[eid]
        del self.pair_eid[(u, v) if u < v else (v, u)]
        self.insert_edge(u, v, eid=eid)

    # -- reporting -----------------------------------------------------------

    def begin_event(self):
        self._prev_heads = {}

    def end_event(self):
        """(reorientations, flips are tracked separately on cum_flips)."""
        changed = []
        for eid, old in self._prev_heads.items():
            if eid in self.orient and self.orient[eid] != old:
                changed.append(eid)
        self._prev_heads = {}
        return changed

    def max_discrepancy(self):
        return max((abs(x) for x in self.imbalance.values()), default=0)

    def recompute_discrepancy(self):
        """Oracle: recompute vertex imbalances from the live edge list."""
        acc = {}
        for eid, (u, v) in self.edge_pair.items():
            head = self.orient[eid]
            tail = u if head == v else v
            acc[head] = acc.get(head, 0) + 1
            acc[tail] = acc.get(tail, 0) - 1
        return max((abs(x) for x in acc.values()), default=0)

    def live_pieces(self):
        return [p for lev in self.levels.values() for p in lev.pieces.values()]

    def scan_invariants(self, check_fixpoints=True):
        """(I1) level capacities, (I2) pieces only lose edges, piece
        registration consistency, and optionally per-piece fixpoints.
        Raises InvariantViolation on failure."""
        for i, lev in self.levels.items():
            if len(lev.eids) > (1 << i):
                raise InvariantViolation(f"level {i} holds {len(lev.eids)} > 2^{i}")
            piece_eids = set()
            for piece in lev.pieces.values():
                cur = set(piece.graph.edges)
                if not cur <= piece.pruned.snapshot_eids:
                    raise InvariantViolation(
                        f"piece {piece.pid} gained edges after creation")
                if piece_eids & cur:
                    raise InvariantViolation("pieces overlap")
                piece_eids |= cur
                if check_fixpoints:
                    ok, wit = verify_local_opt(piece.graph)
                    if not ok:
                        raise InvariantViolation(
                            f"piece {piece.pid} not at a local optimum: {wit}")
            if piece_eids != lev.eids:
                raise InvariantViolation(
                    f"level {i} edge registry disagrees with its pieces")
        if set(self.edge_pair) != set(self.orient):
            raise InvariantViolation("orientation mirror out of sync")
        if self.max_discrepancy() != self.recompute_discrepancy():
            raise InvariantViolation("incremental imbalance out of sync")
        return True

    def membership_counts(self):
        counts = {}
        for piece in self.live_pieces():
            for v in piece.graph.incident:
                counts[v] = counts.get(v, 0) + 1
        return counts


class DedupWrapper:
    """Parallel-edge front end: repeated copies of an undirected pair are
    oriented half-and-half; only an odd leftover copy is delegated to the
    inner simple-graph engine.

    Invariants: an even copy multiset is balanced and absent from the
    inner engine; an odd multiset is present, and its orientation sum
    equals the inner orientation.  The wrapper therefore contributes the
    same vertex discrepancies as the inner engine.
    """

    def __init__(self, inner=None, n_hint=256, phi=None):
        self.inner = inner if inner is not None else OrientationEngine(
            n_hint=n_hint, phi=phi)
        self.copies = {}              # pair -> list of head vertices
        self.events = 0
        self.copy_flips_cum = 0

    @staticmethod
    def _pair(u, v):
        return (u, v) if u < v else (v, u)

    def _sync_inner_changes(self, changed_eids):
        """Flip exactly one copy for every inner edge whose net orientation
        changed this event, keeping invariant (b)."""
        flips = 0
        for eid in changed_eids:
            pair = self.inner.edge_pair.get(eid)
            if pair is None or pair not in self.copies:
                continue
            want = self.inner.orient[eid]
            heads = self.copies[pair]
            total = sum(1 if h == pair[1] else -1 for h in heads)
            want_sum = 1 if want == pair[1] else -1
            if total != want_sum:
                wrong = pair[1] if want == pair[0] else pair[0]
                heads[heads.index(wrong)] = want
                flips += 1
        return flips

    def insert(self, u, v):
        """Insert one copy of undirected edge (u, v); returns metrics."""
        if u == v:
            raise ValueError("self-loop rejected")
        pair = self._pair(u, v)
        heads = self.copies.setdefault(pair, [])
        self.inner.begin_event()
        flips = 0
        if len(heads) % 2 == 0:
            self.inner.insert_edge(*pair)
            eid = self.inner.pair_eid[pair]
            heads.append(self.inner.orient[eid])
        else:
            # even now: balance the copies, drop from the inner engine
            eid = self.inner.pair_eid[pair]
            inner_head = self.inner.orient[eid]
            heads.append(pair[0] if inner_head == pair[1] else pair[1])
            self.inner.delete_edge(*pair)
        changed = self.inner.end_event()
        flips += self._sync_inner_changes(changed)
        self.copy_flips_cum += flips
        self.events += 1
        return {"reorients": len(changed), "copy_flips": flips}

    def delete(self, u, v):
        """Delete one copy (most recent first); returns metrics."""
        pair = self._pair(u, v)
        heads = self.copies.get(pair)
        if not heads:
            raise UnknownEdge(pair)
        self.inner.begin_event()
        flips = 0
        was_odd = len(heads) % 2 == 1
        if was_odd:
            eid = self.inner.pair_eid[pair]
            inner_head = self.inner.orient[eid]
            removed = heads.pop()
            if removed != inner_head:
                # leftover sums to 2*inner; flip one copy at the inner head
                heads[heads.index(inner_head)] = (
                    pair[0] if inner_head == pair[1] else pair[1])
                flips += 1
            self.inner.delete_edge(*pair)
        else:
            removed = heads.pop()
            self.inner.insert_edge(*pair)
            eid = self.inner.pair_eid[pair]
            want = self.inner.orient[eid]
            total = sum(1 if h == pair[1] else -1 for h in heads)
            want_sum = 1 if want == pair[1] else -1
            if total != want_sum:
                wrong = pair[1] if want == pair[0] else pair[0]
                heads[heads.index(wrong)] = want
                flips += 1
        if not heads:
            del self.copies[pair]
        changed = self.inner.end_event()
        flips += self._sync_inner_changes(changed)
        self.copy_flips_cum += flips
        self.events += 1
        return {"reorients": len(changed), "copy_flips": flips}

    # -- verification ---------------------------------------------------------

    def vertex_discrepancies(self):
        """Oracle: recompute signed imbalances from every copy."""
        acc = {}
        for (u, v), heads in self.copies.items():
            for head in heads:
                tail = u if head == v else v
                acc[head] = acc.get(head, 0) + 1
                acc[tail] = acc.get(tail, 0) - 1
        return acc

    def max_discrepancy(self):
        return max((abs(x) for x in self.vertex_discrepancies().values()),
                   default=0)

    def scan_dedup(self, pairs=None):
        """Check invariants (a)/(b) for the given pairs (default: all)."""
        items = self.copies.items() if pairs is None else (
            (p, self.copies[p]) for p in pairs if p in self.copies)
        for pair, heads in items:
            total = sum(1 if h == pair[1] else -1 for h in heads)
            eid = self.inner.pair_eid.get(pair)
            if len(heads) % 2 == 0:
                if eid is not None:
                    raise InvariantViolation(f"even multiset {pair} in inner engine")
                if total != 0:
                    raise InvariantViolation(f"even multiset {pair} unbalanced")
            else:
                if eid is None:
                    raise InvariantViolation(f"odd multiset {pair} missing from inner")
                want = 1 if self.inner.orient[eid] == pair[1] else -1
                if total != want:
                    raise InvariantViolation(
                        f"odd multiset {pair} sums to {total}, inner wants {want}")
        return True

    def dump(self):
        return {
            "pairs": [{"u": p[0], "v": p[1],
                       "heads": list(h)} for p, h in sorted(self.copies.items())],
            "inner": [[*self.inner.edge_pair[eid], self.inner.orient[eid]]
                      for eid in sorted(self.inner.edge_pair)],
        }
