"""Expander pruning under adversarial deletions.

A `PrunedExpander` snapshots a piece at creation and, per deleted edge,
removes the smaller side of any cut that falls below (phi/6) times its
snapshot volume, so the remainder stays a strong expander relative to
the initial volumes.  Cut tests always use snapshot volumes, never
current ones.
"""

import math

from .errors import BudgetExceeded, UnknownEdge
from .expanders import EXACT_LIMIT, strong_cut_search, sweep_cut


def deletion_budget(phi, m_edges):
    """floor(phi^2 m / 20), floored at 1 so single-edge pieces dissolve
    on their first deletion."""
    return max(1, math.floor(phi * phi * m_edges / 20.0))


class PrunedExpander:
    """State machine for one snapshot piece undergoing deletions."""

    def __init__(self, graph, phi):
        self.g = graph                      # current graph, mutated in place
        self.phi = phi
        self.vol0 = {v: graph.degree(v) for v in graph.incident}
        self.m0 = len(graph.edges)
        self.snapshot_eids = frozenset(graph.edges)
        self.budget = deletion_budget(phi, self.m0)
        self.deletions = 0                  # primary (adversarial) deletions
        self.pruned = set()                 # P_t, grows monotonically

    # -- cut discovery ---------------------------------------------------

    def _threshold(self):
        return self.phi / 6.0

    def _exact_violating_cut(self):
        rep = strong_cut_search(self.g, self.vol0)
        if rep is None:
            return None
        if rep.cut_edges < self._threshold() * rep.min_volume:
            return rep.cut_set
        return None

    def _heuristic_violating_cut(self):
        # singleton cuts exactly, then a snapshot-volume weighted sweep
        thr = self._threshold()
        for v in sorted(self.g.incident):
            if self.g.degree(v) < thr * self.vol0[v]:
                return (v,)
        if len(self.g.incident) >= 2 and len(self.g.edges) >= 1:
            rep = sweep_cut(self.g, den_by_vertex=self.vol0)
            if rep.cut_set and rep.cut_edges < thr * rep.min_volume:
                # normalize to the smaller snapshot-volume side
                side = set(rep.cut_set)
                vol_s = sum(self.vol0[v] for v in side)
                vol_r = sum(self.vol0[v] for v in self.g.incident) - vol_s
                if vol_r < vol_s:
                    side = set(self.g.incident) - side
                return tuple(sorted(side))
        return None

    def find_violating_cut(self):
        """Smaller-by-snapshot-volume side of a cut violating the phi/6
        strong-expansion condition, or None.  Exact for |V| <= 24."""
        if len(self.g.incident) < 2:
            return None
        if len(self.g.incident) <= EXACT_LIMIT:
            return self._exact_violating_cut()
        return self._heuristic_violating_cut()

    # -- operations --------------------------------------------------------

    def prune(self, eid):
        """Delete edge eid, then peel violating cut sides until the strong
        expansion condition holds again.

        Returns (delta_p, removed_records, phi_after_primary) where
        removed_records are (eid, u, v, head) tuples of the surviving
        edges removed because they touched pruned vertices (the secondary
        deletions, with their orientations at removal time) and
        phi_after_primary is the orientation potential right after the
        primary deletion.  Raises BudgetExceeded when the deletion
        counter passes the piece budget; the caller is expected to
        dissolve the piece instead.
        """
        if eid not in self.g.edges:
            raise UnknownEdge(eid)
        if self.deletions + 1 > self.budget:
            raise BudgetExceeded(
                f"deletion {self.deletions + 1} exceeds budget {self.budget}")
        self.deletions += 1
        self.g.remove_edge(eid)
        phi_after_primary = self.g.potential
        delta_p = []
        removed_records = []
        while True:
            side = self.find_violating_cut()
            if not side:
                break
            for v in side:
                for e2 in sorted(self.g.incident.get(v, ())):
                    u2, v2, head2 = self.g.edges[e2]
                    removed_records.append((e2, u2, v2, head2))
                    self.g.remove_edge(e2)
                self.g.incident.pop(v, None)
                self.g.imbalance.pop(v, None)
                self.pruned.add(v)
                delta_p.append(v)
        removed_records.sort()
        return sorted(delta_p), removed_records, phi_after_primary

    def strong_expansion_check(self):
        """(ok, witness): exact enumeration for |V| <= 24, heuristic above.

        Verifies |E_t(A, V_t-A)| >= (phi/6) * min(vol0(A), vol0(V_t-A))
        for every A; the witness is a violating vertex set.
        """
        if len(self.g.incident) < 2:
            return True, None
        side = self.find_violating_cut()
        if side:
            return False, tuple(side)
        return True, None

    def pruned_volume(self):
        return sum(self.vol0[v] for v in self.pruned)

    def live_vertices(self):
        return sorted(self.g.incident)
