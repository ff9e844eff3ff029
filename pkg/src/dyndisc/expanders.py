"""Conductance computation, weak regularity, and expander decomposition.

Exact conductance enumerates all cuts (guarded at 24 vertices, JIT
compiled); beyond that a spectral sweep over the second eigenvector of
the normalized Laplacian provides an upper-bounding cut.  `decompose`
splits a graph into edge-disjoint pieces that are certified (exactly at
small scale, via the Cheeger lower bound otherwise) to be weakly-regular
expanders.
"""

import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceFailure, DecompositionOverflow, TooLarge
from .graph import OrientedGraph

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

EXACT_LIMIT = 24        # hard guard for exhaustive enumeration
_SWEEP_OVER = 16        # decompose switches to sweep above this size


def _best_ratio_cut_kernel(w, cur_deg, den):
    """Minimize cut(S) / min(den(S), den(V-S)) over all proper cuts.

    w is the symmetric integer weight matrix (parallel edges counted),
    cur_deg the weighted degrees, den the per-vertex denominator weights.
    Enumerates subsets not containing vertex 0 so each partition appears
    once; the reported side is the smaller-denominator one.  Ties break
    on smaller denominator, then on the side whose smallest differing
    vertex is present (lexicographic order of the vertex set).
    Returns (mask, cut, den_min); mask == 0 means no usable cut.
    """
    n = w.shape[0]
    half = 1 << (n - 1)
    e_in = np.zeros(half, dtype=np.int64)
    deg_sum = np.zeros(half, dtype=np.int64)
    den_sum = np.zeros(half, dtype=np.int64)
    den_total = np.int64(0)
    for v in range(n):
        den_total += den[v]
    full = (1 << n) - 1
    best_cut = np.int64(-1)
    best_den = np.int64(1)
    best_mask = np.int64(0)
    for s in range(1, half):
        low = s & (-s)
        v = 0
        t = low
        while t > 1:
            t >>= 1
            v += 1
        v += 1  # bit b encodes vertex b+1
        rest = s ^ low
        inner = np.int64(0)
        for u in range(1, n):
            if (rest >> (u - 1)) & 1:
                inner += w[v, u]
        e_in[s] = e_in[rest] + inner
        deg_sum[s] = deg_sum[rest] + cur_deg[v]
        den_sum[s] = den_sum[rest] + den[v]
        cut = deg_sum[s] - 2 * e_in[s]
        d_s = den_sum[s]
        d_r = den_total - d_s
        mask_s = s << 1
        if d_s < d_r:
            side_mask, d_min = mask_s, d_s
        elif d_s > d_r:
            side_mask, d_min = full ^ mask_s, d_r
        else:
            # equal volumes: report the lexicographically smaller side
            other = full ^ mask_s
            diff = mask_s ^ other
            lowdiff = diff & (-diff)
            side_mask = mask_s if (mask_s & lowdiff) else other
            d_min = d_s
        if d_min <= 0:
            continue
        if best_cut < 0:
            best_cut, best_den, best_mask = cut, d_min, side_mask
            continue
        lhs = cut * best_den
        rhs = best_cut * d_min
        take = False
        if lhs < rhs:
            take = True
        elif lhs == rhs:
            if d_min < best_den:
                take = True
            elif d_min == best_den and side_mask != best_mask:
                diff = side_mask ^ best_mask
                lowdiff = diff & (-diff)
                take = bool(side_mask & lowdiff)
        if take:
            best_cut, best_den, best_mask = cut, d_min, side_mask
    return best_mask, best_cut, best_den


if _HAVE_NUMBA:
    _best_ratio_cut = numba.njit(cache=True)(_best_ratio_cut_kernel)
else:  # pragma: no cover
    _best_ratio_cut = _best_ratio_cut_kernel


@dataclass
class CutReport:
    cut_set: tuple          # vertices of the reported (smaller) side
    conductance: float
    method: str             # "exact" or "sweep"
    cut_edges: int = 0
    min_volume: int = 0
    lambda2: float | None = None


def _weight_matrix(g, vertices):
    idx = {v: i for i, v in enumerate(vertices)}
    n = len(vertices)
    w = np.zeros((n, n), dtype=np.int64)
    for u, v, _ in g.edges.values():
        w[idx[u], idx[v]] += 1
        w[idx[v], idx[u]] += 1
    return w


def conductance_exact(g):
    """Global minimum-conductance cut by subset enumeration (|V| <= 24)."""
    vertices = sorted(g.incident)
    n = len(vertices)
    if n > EXACT_LIMIT:
        raise TooLarge(f"{n} vertices exceed the exact-enumeration guard")
    if n < 2 or len(g.edges) == 0:
        raise ValueError("conductance needs >= 2 vertices and >= 1 edge")
    w = _weight_matrix(g, vertices)
    deg = w.sum(axis=1)
    mask, cut, den = _best_ratio_cut(w, deg, deg)
    if mask == 0:
        return CutReport(cut_set=(), conductance=math.inf, method="exact")
    side = tuple(vertices[i] for i in range(n) if (mask >> i) & 1)
    return CutReport(cut_set=side, conductance=cut / den, method="exact",
                     cut_edges=int(cut), min_volume=int(den))


def strong_cut_search(g, den_by_vertex):
    """Best cut under snapshot-volume denominators; exact enumeration.

    Same tie rules as `conductance_exact` but the denominator is an
    arbitrary positive weight per vertex (initial volumes).
    """
    vertices = sorted(g.incident)
    n = len(vertices)
    if n > EXACT_LIMIT:
        raise TooLarge(f"{n} vertices exceed the exact-enumeration guard")
    if n < 2:
        return None
    w = _weight_matrix(g, vertices)
    deg = w.sum(axis=1)
    den = np.array([den_by_vertex[v] for v in vertices], dtype=np.int64)
    mask, cut, dmin = _best_ratio_cut(w, deg, den)
    if mask == 0:
        return None
    side = tuple(vertices[i] for i in range(n) if (mask >> i) & 1)
    return CutReport(cut_set=side, conductance=cut / dmin, method="exact",
                     cut_edges=int(cut), min_volume=int(dmin))


def _normalized_laplacian_second(g, vertices):
    """(lambda2, fiedler vector scaled by D^{-1/2}) of the normalized
    Laplacian; raises ConvergenceFailure if the solver fails."""
    w = _weight_matrix(g, vertices).astype(float)
    deg = w.sum(axis=1)
    if np.any(deg == 0):
        # isolated vertices: treat as their own zero-conductance side
        deg = np.where(deg == 0, 1.0, deg)
    dinv = 1.0 / np.sqrt(deg)
    lap = np.eye(len(vertices)) - (dinv[:, None] * w) * dinv[None, :]
    try:
        evals, evecs = np.linalg.eigh(lap)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise ConvergenceFailure(str(exc)) from exc
    lam2 = float(evals[1])
    vec = evecs[:, 1] * dinv
    # deterministic sign convention
    for x in vec:
        if abs(x) > 1e-12:
            if x < 0:
                vec = -vec
            break
    return lam2, vec


def sweep_cut(g, den_by_vertex=None):
    """Second-eigenvector sweep; returns an upper-bounding cut.

    Orders vertices by the scaled Fiedler vector and takes the best
    prefix cut; the denominator defaults to current volumes but accepts
    snapshot volumes.  The reported conductance is >= the true minimum.
    """
    vertices = sorted(g.incident)
    n = len(vertices)
    if n < 2 or len(g.edges) == 0:
        raise ValueError("sweep needs >= 2 vertices and >= 1 edge")
    lam2, vec = _normalized_laplacian_second(g, vertices)
    order = sorted(range(n), key=lambda i: (vec[i], i))
    idx = {vertices[i]: i for i in range(n)}
    deg = np.zeros(n, dtype=np.int64)
    for u, v, _ in g.edges.values():
        deg[idx[u]] += 1
        deg[idx[v]] += 1
    if den_by_vertex is None:
        den = deg.copy()
    else:
        den = np.array([den_by_vertex[v] for v in vertices], dtype=np.int64)
    den_total = int(den.sum())
    in_side = np.zeros(n, dtype=bool)
    cut = 0
    den_s = 0
    best = None  # (conductance, prefix_len, cut, den_min)
    adj = [[] for _ in range(n)]
    for u, v, _ in g.edges.values():
        adj[idx[u]].append(idx[v])
        adj[idx[v]].append(idx[u])
    for k, i in enumerate(order[:-1]):
        inside = sum(1 for j in adj[i] if in_side[j])
        cut += deg[i] - 2 * inside
        in_side[i] = True
        den_s += int(den[i])
        dmin = min(den_s, den_total - den_s)
        if dmin <= 0:
            continue
        cond = cut / dmin
        if best is None or cond < best[0]:
            best = (cond, k + 1, cut, dmin)
    if best is None:
        return CutReport(cut_set=(), conductance=math.inf, method="sweep",
                         lambda2=lam2)
    cond, k, cut_edges, dmin = best
    side = tuple(sorted(vertices[i] for i in order[:k]))
    return CutReport(cut_set=side, conductance=float(cond), method="sweep",
                     cut_edges=int(cut_edges), min_volume=int(dmin),
                     lambda2=lam2)


def is_weakly_regular(g, gamma):
    """True iff the minimum degree is >= gamma * average degree."""
    if len(g.incident) == 0:
        raise ValueError("empty graph")
    n = len(g.incident)
    m = len(g.edges)
    min_deg = min(g.degree(v) for v in g.incident)
    return min_deg >= gamma * (2.0 * m / n)


@dataclass
class PieceCertificate:
    weakly_regular: bool
    expansion_ok: bool
    mode: str               # "exact" or "spectral"
    achieved: float
    witness: tuple | None = None

    @property
    def passed(self):
        return self.weakly_regular and self.expansion_ok


def certify_piece(piece, phi, gamma):
    """Check the weak-regularity / expansion contract of one piece.

    Weak regularity is exact.  Expansion is exact for |V| <= 24 and
    otherwise certified through the Cheeger lower bound lambda2/2; a
    spectral failure is reported but may be a false negative.
    """
    n = len(piece.incident)
    weak = is_weakly_regular(piece, gamma)
    if len(piece.edges) == 0:
        return PieceCertificate(weak, False, "exact", 0.0)
    if n < 2:
        return PieceCertificate(weak, False, "exact", 0.0)
    if n <= EXACT_LIMIT:
        rep = conductance_exact(piece)
        ok = rep.conductance >= phi
        return PieceCertificate(weak, ok, "exact", rep.conductance,
                                None if ok else rep.cut_set)
    lam2, _ = _normalized_laplacian_second(piece, sorted(piece.incident))
    bound = lam2 / 2.0
    ok = bound >= phi
    return PieceCertificate(weak, ok, "spectral", bound,
                            None if ok else ())


@dataclass
class DecompositionResult:
    pieces: list                    # OrientedGraph per piece
    phi: float
    gamma: float
    membership: dict                # vertex -> number of pieces
    certificates: list = field(default_factory=list)

    def membership_histogram(self):
        hist = {}
        for c in self.membership.values():
            hist[c] = hist.get(c, 0) + 1
        return hist

    def dump(self, path):
        edges = {}
        piece_ids = []
        for p in self.pieces:
            ids = sorted(p.edges)
            piece_ids.append(ids)
            for eid in ids:
                u, v, _ = p.edges[eid]
                edges[str(eid)] = [u, v]
        doc = {
            "pieces": piece_ids,
            "phi": self.phi,
            "gamma": self.gamma,
            "membership_histogram": {str(k): v for k, v in
                                     sorted(self.membership_histogram().items())},
            "edges": edges,
            "certified": [bool(c.passed) for c in self.certificates],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)


def _subgraph(g, eids):
    sub = OrientedGraph()
    for eid in sorted(eids):
        u, v, head = g.edges[eid]
        sub.add_edge(eid, u, v, head)
    return sub


def _edge_components(g, eids):
    """Connected components of the subgraph induced by these edges,
    returned as lists of edge ids."""
    adj = {}
    for eid in eids:
        u, v, _ = g.edges[eid]
        adj.setdefault(u, []).append((eid, v))
        adj.setdefault(v, []).append((eid, u))
    seen_v = set()
    comps = []
    for start in sorted(adj):
        if start in seen_v:
            continue
        seen_v.add(start)
        stack = [start]
        comp_edges = set()
        while stack:
            x = stack.pop()
            for eid, y in adj[x]:
                comp_edges.add(eid)
                if y not in seen_v:
                    seen_v.add(y)
                    stack.append(y)
        comps.append(sorted(comp_edges))
    return comps


def decompose(g, phi=None, exact_limit=_SWEEP_OVER):
    """Split g into edge-disjoint weakly-regular expander pieces.

    Recursively removes cuts of conductance below phi (exact search on
    small components, spectral sweep above `exact_limit` vertices), then
    trims vertices violating gamma = phi/4 weak regularity; trimmed
    vertices leave as pieces of at most two edges.  Edge sets of the
    pieces partition the input edges exactly.
    """
    n_all = max(len(g.incident), 2)
    if phi is None:
        phi = 1.0 / math.ceil(math.log2(n_all))
    gamma = phi / 4.0
    max_depth = math.ceil(4 * math.log2(n_all) ** 2) + 4
    pool = deque()
    pool.append((sorted(g.edges), 0))
    piece_eids = []
    while pool:
        eids, depth = pool.popleft()
        if not eids:
            continue
        if depth > max_depth:
            raise DecompositionOverflow(
                f"recursion depth {depth} exceeded {max_depth}")
        for comp in _edge_components(g, eids):
            if len(comp) <= 2:
                piece_eids.append(comp)
                continue
            sub = _subgraph(g, comp)
            nv = len(sub.incident)
            if nv <= exact_limit:
                rep = conductance_exact(sub)
            else:
                rep = sweep_cut(sub)
            if rep.conductance < phi and rep.cut_set:
                side = set(rep.cut_set)
                e_s, e_t, e_x = [], [], []
                for eid in comp:
                    u, v, _ = g.edges[eid]
                    inside = (u in side) + (v in side)
                    (e_s if inside == 2 else e_t if inside == 0 else e_x).append(eid)
                for grp in (e_s, e_t, e_x):
                    if grp:
                        pool.append((grp, depth + 1))
                continue
            # expander candidate: enforce weak regularity by trimming
            m = len(sub.edges)
            threshold = gamma * 2.0 * m / nv
            bad = sorted(v for v in sub.incident if sub.degree(v) < threshold)
            if bad:
                trimmed = set()
                for v in bad:
                    mine = sorted(e for e in sub.incident[v] if e not in trimmed)
                    for i in range(0, len(mine), 2):
                        piece_eids.append(mine[i:i + 2])
                    trimmed.update(mine)
                rest = [e for e in comp if e not in trimmed]
                if rest:
                    pool.append((rest, depth + 1))
                continue
            piece_eids.append(comp)
    pieces = [_subgraph(g, eids) for eids in piece_eids]
    membership = {}
    for p in pieces:
        for v in p.incident:
            membership[v] = membership.get(v, 0) + 1
    certificates = [certify_piece(p, phi, gamma) for p in pieces]
    return DecompositionResult(pieces=pieces, phi=phi, gamma=gamma,
                               membership=membership, certificates=certificates)
