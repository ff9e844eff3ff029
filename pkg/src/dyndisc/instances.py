"""Workload generators, lower-bound instances, and local-opt verifiers.

All generators are pure functions of their parameters and an explicit
numpy Generator, so the same seed reproduces the same stream or
instance byte for byte.
"""

import numpy as np

from .errors import BadParity, InfeasibleDegree, NotMultipleOf8
from .graph import OrientedGraph


# -- lower-bound instances -----------------------------------------------


def gen_2d_localopt(t_total):
    """T/2 copies of (1, 1/sqrt(T)) and T/2 of (-1, 1/sqrt(T)), signs +1.

    The signed sum is (0, sqrt(T)); flipping any single vector increases
    the squared 2-norm by exactly 4/T, so the all-ones signing is a
    local optimum with discrepancy sqrt(T).
    """
    if t_total % 2 != 0 or t_total <= 0:
        raise BadParity("T must be a positive even integer")
    y = 1.0 / np.sqrt(t_total)
    vectors = np.empty((t_total, 2))
    vectors[: t_total // 2] = (1.0, y)
    vectors[t_total // 2:] = (-1.0, y)
    signs = np.ones(t_total, dtype=np.int64)
    return vectors, signs


def _lower_tri_inverse_times_ones(k):
    """x = B^{-1} 1 for the lower-triangular all-(-1) matrix with unit
    diagonal; the solution is (1, 2, 4, ..., 2^{k-1})."""
    return 2 ** np.arange(k, dtype=object)


def pm1_repetitions(n):
    """Integer repetition counts r and block sums s for the +-1 instance.

    r = (n/4) * (B^{-1})^T B^{-1} 1 and s = 2 B^T r = (n/2) B^{-1} 1,
    computed exactly over Python ints.  Raises if r fails to be even
    integers (asserted, never silently rounded).
    """
    if n % 8 != 0 or n <= 0:
        raise NotMultipleOf8("n must be a positive multiple of 8")
    k = n // 2
    binv1 = _lower_tri_inverse_times_ones(k)          # B^{-1} 1
    # (B^{-1})_{ij} = 1 if i == j else 2^{i-j-1} for i > j
    binv_t_x = []
    for j in range(k):
        acc = binv1[j]
        for i in range(j + 1, k):
            acc += (2 ** (i - j - 1)) * binv1[i]
        binv_t_x.append(acc)
    q = n // 4
    r = [q * v for v in binv_t_x]
    s = [(n // 2) * v for v in binv1]
    for v in r:
        if v % 2 != 0:
            raise ValueError(f"repetition count {v} is not even for n={n}")
    return r, s


def _pm1_unit_rows(i, k):
    """The two rows of repeating unit i (0-based) over n = 2k columns."""
    row_a = []
    row_b = []
    for j in range(k):
        if j < i:
            row_a += [-1, -1]
            row_b += [-1, -1]
        elif j == i:
            row_a += [1, 1]
            row_b += [1, 1]
        else:
            row_a += [1, -1]
            row_b += [-1, 1]
    return row_a, row_b


def gen_pm1_localopt(n):
    """+-1 instance whose all-ones signing is a local optimum with
    discrepancy n/2 * 2^{n/2-1}, while the global optimum is 0.

    Returns (rows, signs) with rows an integer matrix of shape
    (2 * sum(r), n); every row a satisfies <S, a> = n exactly.
    """
    r, _ = pm1_repetitions(n)
    k = n // 2
    rows = []
    for i in range(k):
        row_a, row_b = _pm1_unit_rows(i, k)
        rows.extend([row_a, row_b] * r[i])
    mat = np.array(rows, dtype=np.int64)
    signs = np.ones(len(rows), dtype=np.int64)
    return mat, signs


class Pm1NoRepetitionInstance:
    """Repetition-free extension: pads with alternating rows and appends
    every +-1 pattern on 4n extra columns, giving 2^{4n} distinct rows
    in dimension 5n.  Rows are generated lazily; materializing is
    guarded because the row count is astronomically large.
    """

    def __init__(self, n):
        base, _ = gen_pm1_localopt(n)
        self.n = n
        self.dim = 5 * n
        self.base = base
        self.base_rows = base.shape[0]
        self.n_rows = 2 ** (4 * n)
        s = base.sum(axis=0)
        self.signed_sum = np.concatenate([s, np.zeros(4 * n, dtype=np.int64)])

    def row(self, j):
        if not 0 <= j < self.n_rows:
            raise IndexError(j)
        if j < self.base_rows:
            left = self.base[j]
        else:
            pattern = [1, -1] if (j - self.base_rows) % 2 == 0 else [-1, 1]
            left = np.array(pattern * (self.n // 2), dtype=np.int64)
        bits = [(1 if (j >> b) & 1 else -1) for b in range(4 * self.n - 1, -1, -1)]
        return np.concatenate([left, np.array(bits, dtype=np.int64)])

    def materialize(self, limit=1 << 20):
        if self.n_rows > limit:
            raise ValueError(
                f"{self.n_rows} rows exceed the materialization guard ({limit})")
        return np.stack([self.row(j) for j in range(self.n_rows)])


def gen_layered_graph(k, length=1):
    """Layered oriented graph that is an exact path-local-search fixpoint
    with root discrepancy k.

    Layer sizes follow n0=1, n1=k and
    n_{i+1} = n_{i-1} + k - 2*(floor((i-1)/length) + 1),
    with complete bipartite edges between consecutive layers oriented
    toward the lower layer.  k must be even; length odd when > 1.
    Returns (graph, layer_sizes).
    """
    if k % 2 != 0 or k < 2:
        raise BadParity("k must be a positive even integer")
    if length > 1 and length % 2 == 0:
        raise BadParity("length must be odd when greater than 1")
    sizes = [1, k]
    while True:
        i = len(sizes) - 1
        nxt = sizes[i - 1] + k - 2 * ((i - 1) // length + 1)
        if nxt <= 0:
            break
        sizes.append(nxt)
    g = OrientedGraph()
    offsets = []
    total = 0
    for s in sizes:
        offsets.append(total)
        total += s
    eid = 0
    for i in range(len(sizes) - 1):
        for b in range(sizes[i + 1]):
            for a in range(sizes[i]):
                hi = offsets[i + 1] + b
                lo = offsets[i] + a
                g.add_edge(eid, hi, lo, head=lo)  # oriented toward the lower layer
                eid += 1
    return g, sizes


# -- verifiers ------------------------------------------------------------


def verify_vector_local_opt(vectors, signs, mode="general"):
    """Check the single-flip optimality condition for every vector.

    mode="general": ||S - 2 eps_i a_i||_2 >= ||S||_2 for all i, i.e. the
    flip margin 4||a_i||^2 - 4 eps_i <S, a_i> is nonnegative.
    mode="pm1": the equivalent integer condition <S, eps_i a_i> <= n for
    +-1 vectors in dimension n, checked exactly.
    Returns (ok, witness_index).
    """
    vectors = np.asarray(vectors)
    signs = np.asarray(signs)
    if vectors.ndim != 2 or signs.shape != (vectors.shape[0],):
        raise ValueError("vectors must be (T, n) with one sign per row")
    s = (signs[:, None] * vectors).sum(axis=0)
    if mode == "pm1":
        inner = vectors @ s
        margins = vectors.shape[1] - signs * inner
    elif mode == "general":
        margins = 4.0 * (vectors * vectors).sum(axis=1) - 4.0 * signs * (vectors @ s)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    bad = np.nonzero(margins < 0)[0]
    if bad.size:
        return False, int(bad[0])
    return True, None


def vector_local_search(vectors, signs=None):
    """Flip single signs while the 2-norm of the signed sum decreases.

    Lowest-index improving flip first.  Returns (signs, flip_count) at a
    fixpoint of the single-flip rule.
    """
    vectors = np.asarray(vectors, dtype=float)
    t_total = vectors.shape[0]
    if signs is None:
        signs = np.ones(t_total, dtype=np.int64)
    else:
        signs = np.asarray(signs, dtype=np.int64).copy()
    s = (signs[:, None] * vectors).sum(axis=0)
    norms2 = (vectors * vectors).sum(axis=1)
    flips = 0
    improved = True
    while improved:
        improved = False
        margins = 4.0 * norms2 - 4.0 * signs * (vectors @ s)
        bad = np.nonzero(margins < -1e-12)[0]
        if bad.size:
            i = int(bad[0])
            s = s - 2.0 * signs[i] * vectors[i]
            signs[i] = -signs[i]
            flips += 1
            improved = True
    return signs, flips


# -- stream generators -----------------------------------------------------


def _draw_vector(kind, n, rng, s=None):
    if kind == "uniform-box":
        return rng.uniform(-1.0, 1.0, n)
    if kind == "unit-l2":
        v = rng.standard_normal(n)
        nrm = np.linalg.norm(v)
        while nrm < 1e-12:
            v = rng.standard_normal(n)
            nrm = np.linalg.norm(v)
        return v / nrm
    if kind == "sparse-pm1":
        if not s or s > n:
            raise ValueError("sparse-pm1 needs 1 <= s <= n")
        v = np.zeros(n)
        idx = rng.choice(n, size=s, replace=False)
        v[idx] = rng.choice([-1.0, 1.0], size=s)
        return v
    raise ValueError(f"unknown vector kind {kind!r}")


def gen_vector_stream(kind, n, t_total, rng, p_insert=1.0, s=None):
    """JSON-ready vector events; deletes pick a uniform live id."""
    events = []
    live = []
    next_id = 0
    for _ in range(t_total):
        if live and rng.random() >= p_insert:
            pos = int(rng.integers(0, len(live)))
            vid = live.pop(pos)
            events.append({"op": "delete", "id": vid})
        else:
            vec = _draw_vector(kind, n, rng, s=s)
            events.append({"op": "insert", "id": next_id,
                           "vector": [float(x) for x in vec]})
            live.append(next_id)
            next_id += 1
    return events


def gen_orthogonal_adversary(t_total, signed_sum_callback, n=2):
    """Adaptive arrival-only stream of 2-d unit vectors, each orthogonal
    to the algorithm's current signed sum.

    `signed_sum_callback()` must return the length-2 signed sum held by
    the algorithm under test; the next inserted vector is its 90-degree
    rotation (or (1, 0) at zero).  Yields insert events one at a time.
    """
    if n != 2:
        raise ValueError("the rotation adversary is 2-dimensional")
    for t in range(t_total):
        s = np.asarray(signed_sum_callback(), dtype=float)
        nrm = np.linalg.norm(s)
        if nrm < 1e-12:
            v = np.array([1.0, 0.0])
        else:
            v = np.array([-s[1], s[0]]) / nrm
        yield {"op": "insert", "id": t, "vector": [float(v[0]), float(v[1])]}


def gen_random_regular(n, d, rng):
    """d-regular simple graph via the configuration model.

    Colliding stubs (loops or repeated pairs) are re-shuffled and
    re-matched instead of rejecting the whole matching, so dense degrees
    stay feasible; a full restart only happens when the leftover stubs
    admit no suitable edge at all.
    """
    if (n * d) % 2 != 0:
        raise InfeasibleDegree("n * d must be even")
    if not 0 <= d < n:
        raise InfeasibleDegree("need 0 <= d < n")

    def suitable(edges, leftovers):
        if not leftovers:
            return True
        uniq = sorted(leftovers)
        for i, u in enumerate(uniq):
            for v in uniq[i + 1:]:
                if (u, v) not in edges:
                    return True
        return False

    def try_creation():
        edges = set()
        stubs = list(range(n)) * d
        while stubs:
            leftovers = {}
            idx = rng.permutation(len(stubs))
            for a in range(0, len(stubs) - 1, 2):
                u, v = stubs[idx[a]], stubs[idx[a + 1]]
                if u > v:
                    u, v = v, u
                if u != v and (u, v) not in edges:
                    edges.add((u, v))
                else:
                    leftovers[u] = leftovers.get(u, 0) + 1
                    leftovers[v] = leftovers.get(v, 0) + 1
            if not suitable(edges, leftovers):
                return None
            stubs = [x for x, c in sorted(leftovers.items()) for _ in range(c)]
        return edges

    edges = try_creation()
    while edges is None:
        edges = try_creation()
    return sorted(edges)


def _connected(adj, a, b):
    if a == b:
        return True
    seen = {a}
    stack = [a]
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if y == b:
                return True
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return False


def gen_forest_stream(n, t_total, rng, p_insert=0.6):
    """Insert/delete stream that keeps the undirected graph a forest.

    Inserts draw random pairs and reject those closing a cycle; deletes
    remove a uniform live edge.
    """
    events = []
    live = []                      # list of (u, v)
    adj = {}
    for _ in range(t_total):
        do_insert = not live or rng.random() < p_insert
        if do_insert:
            placed = False
            for _ in range(8 * n):
                u, v = int(rng.integers(0, n)), int(rng.integers(0, n))
                if u != v and not _connected(adj, u, v):
                    placed = True
                    break
            if not placed:
                do_insert = False
            else:
                live.append((u, v))
                adj.setdefault(u, set()).add(v)
                adj.setdefault(v, set()).add(u)
                events.append({"op": "insert", "u": u, "v": v})
        if not do_insert:
            pos = int(rng.integers(0, len(live)))
            u, v = live.pop(pos)
            adj[u].discard(v)
            adj[v].discard(u)
            events.append({"op": "delete", "u": u, "v": v})
    return events


def gen_graph_workload(n, t_total, rng, p_insert=0.5):
    """Mixed random multigraph stream; parallel edges are allowed."""
    events = []
    live = []
    for _ in range(t_total):
        if live and rng.random() >= p_insert:
            pos = int(rng.integers(0, len(live)))
            u, v = live.pop(pos)
            events.append({"op": "delete", "u": u, "v": v})
        else:
            u = int(rng.integers(0, n))
            v = int(rng.integers(0, n))
            while v == u:
                v = int(rng.integers(0, n))
            live.append((u, v))
            events.append({"op": "insert", "u": u, "v": v})
    return events
