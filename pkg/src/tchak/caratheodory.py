"""Moment-preserving reduction of non-negative weighted point sets.

Given a real r x M matrix and M non-negative weights, the reduction
keeps at most rank-many columns while preserving the weighted column sum
m @ w.  The engine repeatedly picks a null-space direction z of the
active columns, moves the weights along it until the first one hits
zero (t* = min w_i / z_i over positive z_i), and drops the columns
driven to zero.  Appending an all-ones row before reducing additionally
preserves the total weight, at the cost of one extra column.

Complex systems must be expanded into real row pairs by the caller;
this module is real-only.
"""

from __future__ import annotations

import numpy as np

from .errors import NegativeWeight, NullspaceNotFound
from .systems import DEFAULT_RANK_TOL, EvaluationMatrix, numerical_rank

#: Relative weight-zero threshold: after each update, weights at or
#: below ``tol * max(w)`` are removed.
DEFAULT_TOL = 1e-12

# Entries of a unit null vector below this fraction of its largest
# component are too noisy to divide by.
_Z_FLOOR = 1e-14


def _as_array(m) -> np.ndarray:
    entries = m.entries if isinstance(m, EvaluationMatrix) else np.asarray(m)
    if np.iscomplexobj(entries):
        raise ValueError("reduction operates on real matrices; expand complex input first")
    return np.asarray(entries, dtype=float)


def _null_vector(sub: np.ndarray):
    """Smallest right singular vector and the singular-value ratio."""
    _, s, vt = np.linalg.svd(sub)
    ncols = sub.shape[1]
    if s.size < ncols:  # more columns than rows: exact dependence
        return vt[-1], 0.0
    return vt[-1], (s[-1] / s[0] if s[0] > 0.0 else 0.0)


def reduce(m, w, tol: float = DEFAULT_TOL, rank_tol: float = DEFAULT_RANK_TOL):
    """Reduce (matrix, weights) to at most rank-many columns, conic version.

    Returns ``(indices, new_weights)`` with ``indices`` sorted, all new
    weights non-negative, and ``m[:, indices] @ new_weights`` matching
    ``m @ w`` up to the elimination tolerance.

    Raises
    ------
    NullspaceNotFound
        if the active columns are numerically full-rank while their
        count still exceeds the rank bound of the full matrix.
    NegativeWeight
        if an update drives a kept weight below ``-tol * max(w)``.
    """
    mat = _as_array(m)
    w = np.asarray(w, dtype=float)
    r, cols = mat.shape
    if w.shape != (cols,):
        raise ValueError(f"matrix has {cols} columns but {w.shape} weights")
    if w.size and w.min() < 0.0:
        raise ValueError("weights must be non-negative")

    w = w.copy()
    active = np.flatnonzero(w > 0.0)
    bound = numerical_rank(mat, rank_tol)
    if active.size == 0 or bound == 0:
        # a zero rank bound means the matrix is exactly zero, so the
        # weighted sum is zero and needs no support at all
        empty = np.array([], dtype=int)
        return empty, w[empty]

    while active.size > bound:
        k = active.size
        if k > r:
            # Any r+1 columns of an r-row matrix are exactly dependent,
            # so a leading block suffices and keeps the SVD cost O(r^3).
            block = active[: r + 1]
            z_local, _ = _null_vector(mat[:, block])
        else:
            block = active
            z_local, ratio = _null_vector(mat[:, block])
            if ratio > rank_tol:
                raise NullspaceNotFound(
                    f"{k} active columns are numerically independent but the rank"
                    f" bound is {bound}; rank/elimination tolerances disagree"
                )

        scale = np.max(np.abs(z_local))
        pos = z_local > _Z_FLOOR * scale
        if not np.any(pos):
            z_local = -z_local
            pos = z_local > _Z_FLOOR * scale

        ratios = w[block][pos] / z_local[pos]
        t = ratios.min()
        updated = w[block] - t * z_local
        wmax = max(np.max(w), 1e-300)
        if updated.min() < -tol * wmax:
            raise NegativeWeight(
                f"update would set a weight to {updated.min():.3e}"
                f" (threshold {-tol * wmax:.3e}); retry with tighter tolerance"
            )
        w[block] = np.maximum(updated, 0.0)

        wmax = max(np.max(w), 1e-300)
        dead = block[w[block] <= tol * wmax]
        if dead.size == 0:
            # rounding left the minimizer marginally positive; drop it
            dead = np.array([block[pos][int(np.argmin(ratios))]])
        w[dead] = 0.0
        keep = np.ones(active.size, dtype=bool)
        keep[np.searchsorted(active, dead)] = False
        active = active[keep]

    return active, w[active]


def reduce_convex(m, w, tol: float = DEFAULT_TOL, rank_tol: float = DEFAULT_RANK_TOL):
    """Reduction that also preserves the total weight.

    Implemented by appending an all-ones row, so the subset may need one
    more column than the plain rank bound.
    """
    mat = _as_array(m)
    augmented = np.vstack([mat, np.ones((1, mat.shape[1]))])
    return reduce(augmented, w, tol=tol, rank_tol=rank_tol)
