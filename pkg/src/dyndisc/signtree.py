"""Hierarchical near-integral signing of a dynamic vector collection.

Slots are grouped into leaf blocks of 2n; a complete binary tree over
the blocks assigns every node a value vector over its slot range such
that (I1) the signed combination of its columns is zero per coordinate
and (I2) at most n values are strictly fractional.  A single slot
change recomputes only the leaf-to-root path, so the root assignment
moves in at most 2n*(depth+1) coordinates.  Fractional root values are
randomly rounded with expectation-preserving bias; live counts crossing
a power of two trigger a phase rebuild onto a re-padded slot array.
"""

import numpy as np

from .errors import IndexOutOfPhase, UnknownId
from .rounding import EPS_INT, EPS_RES_PER_COL, fractional_indices, move_to_basic


def draw_signs(values, rng):
    """Expectation-preserving rounding: +1 with probability (1+y)/2."""
    values = np.asarray(values, dtype=float)
    u = rng.random(values.shape)
    return np.where(u < (1.0 + values) / 2.0, 1, -1).astype(np.int8)


class SigningTree:
    """Fully-dynamic vector balancing state machine.

    Vectors live in [-1,1]^n.  `insert`/`delete` route through a
    single-slot update; `root_sign` reports the integral signing and its
    max-coordinate discrepancy.  One numpy Generator drives all random
    rounding, so a seed reproduces every signing decision.
    """

    def __init__(self, n, rng=None, min_slots=8):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        self.n = n
        self.block = 2 * n
        self.min_slots = min_slots
        self.rng = rng if rng is not None else np.random.default_rng()
        self.id2slot = {}
        self.next_auto_id = 0
        self.live_at_phase_start = 0
        self.phase_rebuilds = 0
        self._alloc(self._slots_for(0))
        self._build()

    # -- sizing ----------------------------------------------------------

    def _slots_for(self, live):
        need = max(self.min_slots, self.block, 2 * max(live, 1))
        m = 1
        while self.block * m < need:
            m <<= 1
        return self.block * m

    def _alloc(self, slots):
        self.slots = slots
        self.leaves = slots // self.block
        self.depth = self.leaves.bit_length() - 1  # leaves is a power of two
        self.matrix = np.zeros((self.n, slots))
        self.slot_ids = [None] * slots
        self.values = [np.zeros(slots) for _ in range(self.depth + 1)]
        self.fsets = [[np.empty(0, dtype=np.int64) for _ in range(1 << d)]
                      for d in range(self.depth + 1)]
        self.signs = np.ones(slots, dtype=np.int8)
        self.draw_y = np.full(slots, np.nan)
        self.signed_sum = np.zeros(self.n)

    # -- tree recomputation ------------------------------------------------

    def _round_node(self, d, node):
        """Recompute node (d, node) from its children (or from scratch at
        a leaf) and store values plus the fractional set."""
        width = self.slots >> d
        lo = node * width
        hi = lo + width
        if d == self.depth:
            y = move_to_basic(self.matrix[:, lo:hi], np.zeros(width))
            self.values[d][lo:hi] = y
            self.fsets[d][node] = lo + fractional_indices(y)
            return
        self.values[d][lo:hi] = self.values[d + 1][lo:hi]
        fidx = np.concatenate((self.fsets[d + 1][2 * node],
                               self.fsets[d + 1][2 * node + 1]))
        fidx.sort()
        if fidx.size:
            y = move_to_basic(self.matrix[:, fidx], self.values[d][fidx])
            self.values[d][fidx] = y
            self.fsets[d][node] = fidx[fractional_indices(y)]
        else:
            self.fsets[d][node] = np.empty(0, dtype=np.int64)

    def _build(self):
        for leaf in range(self.leaves):
            self._round_node(self.depth, leaf)
        for d in range(self.depth - 1, -1, -1):
            for node in range(1 << d):
                self._round_node(d, node)
        self._refresh_signs()

    def _update_path(self, slot, vector):
        """Write the column and recompute the leaf-to-root path.  Returns
        the indices where the root assignment changed."""
        old_root = self.values[0].copy()
        self.matrix[:, slot] = vector
        node = slot // self.block
        self._round_node(self.depth, node)
        for d in range(self.depth - 1, -1, -1):
            node >>= 1
            self._round_node(d, node)
        return np.nonzero(self.values[0] != old_root)[0]

    # -- integral signing ---------------------------------------------------

    def root_fractional(self):
        return self.fsets[0][0]

    def _refresh_signs(self):
        """Deterministic signs off the fractional root set; biased draws
        inside it, redrawn only when a slot enters the set or its value
        moved by more than the integrality tolerance."""
        root = self.values[0]
        new_signs = np.where(root >= 0.0, 1, -1).astype(np.int8)
        fr = self.root_fractional()
        keep_draw = np.zeros(self.slots, dtype=bool)
        for i in fr:
            if np.isfinite(self.draw_y[i]) and abs(root[i] - self.draw_y[i]) <= EPS_INT:
                new_signs[i] = self.signs[i]
                keep_draw[i] = True
            else:
                new_signs[i] = draw_signs(root[i:i + 1], self.rng)[0]
                self.draw_y[i] = root[i]
                keep_draw[i] = True
        self.draw_y[~keep_draw] = np.nan
        self.signs = new_signs
        self.signed_sum = self.matrix @ self.signs.astype(float)

    def root_sign(self):
        """(signs by id, current l-inf discrepancy of the signed sum)."""
        out = {vid: int(self.signs[slot]) for vid, slot in self.id2slot.items()}
        return out, self.discrepancy()

    def discrepancy(self):
        if not self.id2slot:
            return 0.0
        return float(np.abs(self.signed_sum).max())

    # -- dynamic operations ---------------------------------------------------

    def _validate_vector(self, vector):
        v = np.asarray(vector, dtype=float)
        if v.shape != (self.n,) or not np.all(np.isfinite(v)):
            raise ValueError(f"vector must be finite with shape ({self.n},)")
        if np.abs(v).max(initial=0.0) > 1.0 + 1e-12:
            raise ValueError("vector entries must lie in [-1, 1]")
        return v

    def update_slot(self, slot, vector):
        """Low-level single-slot update; returns changed root indices."""
        if not 0 <= slot < self.slots:
            raise IndexOutOfPhase(f"slot {slot} outside 0..{self.slots - 1}")
        vector = np.asarray(vector, dtype=float)
        old_signs = self.signs.copy()
        changed = self._update_path(slot, vector)
        self._refresh_signs()
        self._last_sign_changes = int(np.sum(self.signs != old_signs))
        return changed

    def insert(self, vector, vid=None):
        """Insert a vector; returns a per-event metrics dict."""
        vector = self._validate_vector(vector)
        if vid is None:
            vid = f"auto{self.next_auto_id}"
            self.next_auto_id += 1
        if vid in self.id2slot:
            raise ValueError(f"id {vid!r} already live")
        slot = self._first_free_slot()
        before = {w: int(self.signs[s]) for w, s in self.id2slot.items()}
        changed = self.update_slot(slot, vector)
        self.id2slot[vid] = slot
        self.slot_ids[slot] = vid
        rebuilt = self._maybe_rebuild()
        recourse = self._persisting_recourse(before)
        return self._metrics(vid, changed, recourse, rebuilt)

    def delete(self, vid):
        """Delete by id (routes through a zero-vector update)."""
        if vid not in self.id2slot:
            raise UnknownId(vid)
        slot = self.id2slot.pop(vid)
        self.slot_ids[slot] = None
        before = {w: int(self.signs[s]) for w, s in self.id2slot.items()}
        changed = self.update_slot(slot, np.zeros(self.n))
        rebuilt = self._maybe_rebuild()
        recourse = self._persisting_recourse(before)
        return self._metrics(vid, changed, recourse, rebuilt)

    def _first_free_slot(self):
        for slot, vid in enumerate(self.slot_ids):
            if vid is None:
                return slot
        raise IndexOutOfPhase("no free slot; phase accounting is broken")

    def _persisting_recourse(self, before):
        count = 0
        for vid, old in before.items():
            if vid in self.id2slot and int(self.signs[self.id2slot[vid]]) != old:
                count += 1
        return count

    def _metrics(self, vid, changed, recourse, rebuilt):
        return {
            "id": vid,
            "changed_coords": int(len(changed)),
            "recourse": recourse,
            "rebuild": rebuilt,
            "live": len(self.id2slot),
            "phase_size": self.slots,
            "frac_root": int(self.root_fractional().size),
            "disc": self.discrepancy(),
        }

    # -- phases ----------------------------------------------------------------

    def _maybe_rebuild(self):
        live = len(self.id2slot)
        l0 = self.live_at_phase_start
        if live >= 2 * max(l0, 1) or (l0 >= 1 and live <= l0 // 2):
            self._rebuild()
            return True
        return False

    def _rebuild(self):
        """Start a new phase: re-pad to fresh slots and re-sign everything."""
        live = sorted(self.id2slot.items(), key=lambda kv: kv[1])
        vectors = [self.matrix[:, slot].copy() for _, slot in live]
        old_draw = {vid: (int(self.signs[slot]), float(self.draw_y[slot]))
                    for vid, slot in self.id2slot.items()}
        self.live_at_phase_start = len(live)
        self._alloc(self._slots_for(len(live)))
        self.id2slot = {}
        for slot, ((vid, _), vec) in enumerate(zip(live, vectors)):
            self.matrix[:, slot] = vec
            self.id2slot[vid] = slot
            self.slot_ids[slot] = vid
        # carry prior draws so retained fractional slots keep their sign
        for vid, slot in self.id2slot.items():
            sign, dy = old_draw[vid]
            self.signs[slot] = sign
            self.draw_y[slot] = dy
        self._build()
        self.phase_rebuilds += 1

    # -- inspection ---------------------------------------------------------------

    def invariant_scan(self):
        """Exhaustive (I1)/(I2) check over every node; (ok, detail)."""
        for d in range(self.depth + 1):
            width = self.slots >> d
            nodes = 1 << d
            prod = self.matrix * self.values[d][None, :]
            resid = np.abs(prod.reshape(self.n, nodes, width).sum(axis=2))
            tol = EPS_RES_PER_COL * width
            if resid.max(initial=0.0) > tol:
                node = int(np.unravel_index(np.argmax(resid), resid.shape)[1])
                return False, f"(I1) residual {resid.max():.3e} at depth {d} node {node}"
            fmask = np.zeros(self.slots, dtype=bool)
            for node in range(nodes):
                fs = self.fsets[d][node]
                if fs.size > self.n:
                    return False, f"(I2) {fs.size} fractional at depth {d} node {node}"
                fmask[fs] = True
            actual = np.abs(self.values[d]) < 1.0 - EPS_INT
            if not np.array_equal(fmask, actual):
                return False, f"(I2) fractional-set mismatch at depth {d}"
        return True, None

    def live_ids(self):
        return sorted(self.id2slot, key=str)

    def live_vector_multiset(self):
        return sorted(tuple(np.round(self.matrix[:, s], 12)) for s in
                      self.id2slot.values())

    def to_snapshot(self):
        signs, _ = self.root_sign()
        fr_ids = sorted(
            (str(self.slot_ids[i]) for i in self.root_fractional()
             if self.slot_ids[i] is not None))
        return {
            "phase_size": int(self.slots),
            "live_ids": [str(v) for v in self.live_ids()],
            "signs": {str(k): v for k, v in signs.items()},
            "fractional_root_ids": fr_ids,
        }
