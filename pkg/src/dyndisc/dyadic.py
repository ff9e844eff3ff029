"""Insert-only vector balancing with recourse via dyadic re-signing.

On the t-th arrival the most recent 2^l vectors are re-signed from
scratch, where 2^l is the largest power of two dividing t.  The current
signing is then always a concatenation of signer outputs on the binary
decomposition of [1, t], so each prefix discrepancy is bounded by the
worst per-interval discrepancy times the number of intervals, and every
vector is re-signed at most ceil(log2 T) times.
"""

import numpy as np

from .errors import InvariantViolation
from .rounding import fractional_indices, move_to_basic
from .signtree import draw_signs


def default_signer(matrix, rng):
    """Near-integral rounding from the zero signing plus biased random
    rounding of the at most n leftover fractional values."""
    y = move_to_basic(matrix, np.zeros(matrix.shape[1]))
    signs = np.where(y >= 0.0, 1, -1).astype(np.int64)
    fr = fractional_indices(y)
    if fr.size:
        signs[fr] = draw_signs(y[fr], rng)
    return signs


class DyadicResigner:
    """Arrival-only signing stream with O(log T) amortized recourse."""

    def __init__(self, n, signer=None, rng=None):
        self.n = n
        self.signer = signer if signer is not None else default_signer
        self.rng = rng if rng is not None else np.random.default_rng()
        self.vectors = []           # arrival order
        self.signs = []             # current sign per vector
        self.resign_counts = []     # re-signings after arrival, per vector
        self.intervals = []         # (start, length, disc) tiling [0, t)
        self.total_sign_changes = 0
        self.max_interval_disc = 0.0

    def __len__(self):
        return len(self.vectors)

    def insert(self, vector):
        """Add a vector, re-sign the dyadic suffix; returns metrics."""
        v = np.asarray(vector, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"vector must have shape ({self.n},)")
        self.vectors.append(v)
        self.signs.append(0)
        self.resign_counts.append(-1)  # arrival signing is not a re-sign
        t = len(self.vectors)
        level = (t & -t).bit_length() - 1
        width = 1 << level
        start = t - width
        mat = np.column_stack(self.vectors[start:t])
        new_signs = self.signer(mat, self.rng)
        flips = 0
        for off, s in enumerate(new_signs):
            i = start + off
            if self.signs[i] != int(s):
                flips += 1
            self.signs[i] = int(s)
            self.resign_counts[i] += 1
        self.total_sign_changes += flips
        # fold covered intervals into the new one; they must tile it exactly
        covered = 0
        while self.intervals and self.intervals[-1][0] >= start:
            covered += self.intervals[-1][1]
            self.intervals.pop()
        if covered != width - 1:
            raise InvariantViolation(
                f"dyadic intervals failed to tile [{start}, {t})")
        seg = (new_signs[:, None] * mat.T).sum(axis=0)
        d_call = float(np.abs(seg).max())
        self.intervals.append((start, width, d_call))
        self.max_interval_disc = max(self.max_interval_disc, d_call)
        self._assert_binary_decomposition(t)
        return {
            "t": t,
            "level": level,
            "window": width,
            "flips": flips,
            "interval_disc": d_call,
            "disc": self.discrepancy(),
            "intervals": len(self.intervals),
        }

    def _assert_binary_decomposition(self, t):
        lengths = [w for _, w, _ in self.intervals]
        expected = [1 << b for b in range(t.bit_length() - 1, -1, -1)
                    if (t >> b) & 1]
        if lengths != expected:
            raise InvariantViolation(
                f"interval lengths {lengths} != binary decomposition {expected}")
        pos = 0
        for (s, w, _), want in zip(self.intervals, expected):
            if s != pos or w != want:
                raise InvariantViolation("intervals are not contiguous")
            pos += w

    def signed_sum(self):
        if not self.vectors:
            return np.zeros(self.n)
        mat = np.column_stack(self.vectors)
        return mat @ np.array(self.signs, dtype=float)

    def discrepancy(self):
        if not self.vectors:
            return 0.0
        return float(np.abs(self.signed_sum()).max())

    def discrepancy_bound(self):
        """Sum of recorded per-interval discrepancies (a valid upper
        bound on the current discrepancy by the triangle inequality)."""
        return sum(d for _, _, d in self.intervals)
