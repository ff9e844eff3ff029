"""Near-integral rounding of fractional signings.

Given a matrix A with columns in [-1,1]^n and a fractional signing x in
[-1,1]^k, `move_to_basic` returns y with A y = A x (up to floating-point
drift) and at most n coordinates strictly inside (-1, 1).  It walks along
null-space directions of the currently-fractional columns until the box
constraints pin down a basic solution; large inputs are processed through
a sliding window of at most 2n active columns, which keeps every linear
algebra call O(n) sized regardless of k.

The walk kernel is JIT-compiled when numba is available; a vectorized
numpy fallback gives identical results.
"""

import numpy as np

from .errors import DimensionMismatch, NumericalFailure

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

EPS_INT = 1e-9          # |value| >= 1 - EPS_INT counts as integral
EPS_RES_PER_COL = 1e-7  # residual budget: EPS_RES_PER_COL * n_cols
EPS_CLIP = 1e-12        # tolerated overshoot of |entry| beyond 1

_PIVOT_TOL = 1e-12
_DIR_TOL = 1e-13
_EPS_MACH = float(np.finfo(float).eps)


def residual_budget(n_cols):
    return EPS_RES_PER_COL * max(n_cols, 1)


def fractional_indices(values, eps=EPS_INT):
    """Indices whose value lies strictly inside (-1+eps, 1-eps)."""
    v = np.asarray(values, dtype=float)
    return np.nonzero(np.abs(v) < 1.0 - eps)[0]


def _validate_matrix(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1:
        raise DimensionMismatch(f"matrix must be 2-d with >= 1 row, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch("matrix entries must be finite")
    if np.abs(a).max(initial=0.0) > 1.0 + EPS_CLIP:
        raise DimensionMismatch("matrix entries must lie in [-1, 1]")
    return a


def _walk_kernel(cols, y, budget):
    """Clamp coordinates to +-1 along null directions of their columns.

    cols is n x f (contiguous), y holds the f working values and is
    modified in place.  Returns steps used, or -1 on a stall.  Written
    with explicit loops so numba can compile it; the arrays involved
    have at most 2n columns.
    """
    n, f = cols.shape
    act = np.empty(f, np.int64)
    for i in range(f):
        act[i] = i
    nact = f
    basis = np.zeros((f, f))
    q = 0
    fresh = False  # whether basis was just recomputed
    steps = 0
    while nact > 0:
        if q <= 0:
            if fresh:
                break  # fresh basis was empty: no null direction remains
            sub = np.empty((n, nact))
            for j in range(nact):
                for r in range(n):
                    sub[r, j] = cols[r, act[j]]
            _, s, vh = np.linalg.svd(sub)
            smax = s[0] if s.size > 0 else 0.0
            tol = max(n, nact) * _EPS_MACH * smax
            rank = 0
            for i in range(s.size):
                if s[i] > tol:
                    rank += 1
            q = nact - rank
            fresh = True
            if q <= 0:
                break
            for j in range(q):
                for i in range(nact):
                    basis[i, j] = vh[rank + j, i]
            continue
        if steps >= budget:
            return -1
        steps += 1
        fresh = False
        # step lengths to the first boundary along +d and -d, d = basis[:, 0]
        alpha_p = np.inf
        alpha_m = np.inf
        for i in range(nact):
            di = basis[i, 0]
            yi = y[act[i]]
            if di > _DIR_TOL:
                ap = (1.0 - yi) / di
                am = (1.0 + yi) / di
            elif di < -_DIR_TOL:
                ap = (-1.0 - yi) / di
                am = (yi - 1.0) / di
            else:
                continue
            if ap < alpha_p:
                alpha_p = ap
            if am < alpha_m:
                alpha_m = am
        if alpha_p == np.inf and alpha_m == np.inf:
            # numerically zero direction: drop it
            for j in range(1, q):
                for r in range(nact):
                    basis[r, j - 1] = basis[r, j]
            q -= 1
            continue
        if alpha_p <= alpha_m:
            sgn, alpha = 1.0, alpha_p
        else:
            sgn, alpha = -1.0, alpha_m
        if alpha < 0.0:
            alpha = 0.0
        best_dist = np.inf
        for i in range(nact):
            yi = y[act[i]] + sgn * alpha * basis[i, 0]
            if yi > 1.0:
                yi = 1.0
            elif yi < -1.0:
                yi = -1.0
            y[act[i]] = yi
            dist = 1.0 - abs(yi)
            if dist < best_dist:
                best_dist = dist
        if best_dist > EPS_INT:
            return -1  # the step should have landed on a boundary
        # clamp every coordinate at the boundary (simultaneous hits included)
        for i in range(nact - 1, -1, -1):
            yi = y[act[i]]
            if 1.0 - abs(yi) > EPS_INT:
                continue
            y[act[i]] = 1.0 if yi >= 0.0 else -1.0
            # eliminate row i from the basis, spending one column
            if q > 0:
                piv = 0
                mx = abs(basis[i, 0])
                for j in range(1, q):
                    if abs(basis[i, j]) > mx:
                        mx = abs(basis[i, j])
                        piv = j
                if mx > _PIVOT_TOL:
                    for j in range(q):
                        if j == piv:
                            continue
                        fct = basis[i, j] / basis[i, piv]
                        if fct != 0.0:
                            for r in range(nact):
                                basis[r, j] -= basis[r, piv] * fct
                    for j in range(piv, q - 1):
                        for r in range(nact):
                            basis[r, j] = basis[r, j + 1]
                    q -= 1
            for r in range(i, nact - 1):
                act[r] = act[r + 1]
                for j in range(q):
                    basis[r, j] = basis[r + 1, j]
            nact -= 1
        # renormalize surviving directions, dropping degenerate ones
        j = 0
        while j < q:
            nrm = 0.0
            for r in range(nact):
                nrm += basis[r, j] * basis[r, j]
            nrm = np.sqrt(nrm)
            if nrm < 1e-10:
                for jj in range(j, q - 1):
                    for r in range(nact):
                        basis[r, jj] = basis[r, jj + 1]
                q -= 1
            else:
                inv = 1.0 / nrm
                for r in range(nact):
                    basis[r, j] *= inv
                j += 1
    return steps


if _HAVE_NUMBA:
    _walk = numba.njit(cache=True)(_walk_kernel)
else:  # pragma: no cover
    _walk = _walk_kernel


def move_to_basic(a, x, max_steps=None):
    """Round x to a signing y with A y = A x and <= n fractional coordinates.

    Coordinates of x already at +-1 are never touched; zero columns that
    are still fractional are signed +1 outright.  Raises NumericalFailure
    if the walk stalls, DimensionMismatch on shape errors.
    """
    a = _validate_matrix(a)
    n, k = a.shape
    x = np.asarray(x, dtype=float)
    if x.shape != (k,):
        raise DimensionMismatch(f"signing has shape {x.shape}, expected ({k},)")
    y = np.clip(x, -1.0, 1.0)
    frac = np.abs(y) < 1.0 - EPS_INT
    zero_cols = np.abs(a).max(axis=0) <= EPS_CLIP
    y[frac & zero_cols] = 1.0
    pending = list(np.nonzero(frac & ~zero_cols)[0])
    if max_steps is None:
        max_steps = 4 * k + 64
    window = 2 * n
    active: list[int] = []
    steps_left = max_steps
    while pending or active:
        while pending and len(active) < window:
            active.append(pending.pop(0))
        idx = np.array(active, dtype=np.int64)
        yblock = y[idx].copy()
        used = _walk(np.ascontiguousarray(a[:, idx]), yblock, steps_left)
        if used < 0:
            raise NumericalFailure(
                f"null-space walk stalled with {len(active)} fractional columns")
        steps_left -= used
        y[idx] = yblock
        active = [i for i, v in zip(active, yblock) if abs(v) < 1.0 - EPS_INT]
        if not pending:
            break
    return y


def residual_check(a, x, y, tol):
    """True iff ||A y - A x||_inf <= tol and y has at most n fractional coords."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch("matrix must be 2-d")
    n, k = a.shape
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (k,) or y.shape != (k,):
        raise DimensionMismatch("signing length does not match column count")
    resid = np.abs(a @ (y - x)).max(initial=0.0)
    return bool(resid <= tol and fractional_indices(y).size <= n)
