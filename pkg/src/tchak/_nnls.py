"""Lawson-Hanson active-set non-negative least squares.

Lives in its own module so that both the feasibility layer and the
brute-force search can use it without import cycles; the public name is
re-exported as ``tchak.cones.nnls``.
"""

from __future__ import annotations

import numpy as np

from .errors import Indeterminate


def nnls(a, b, maxiter: int | None = None):
    """Minimize ||a @ x - b|| subject to x >= 0; returns ``(x, rnorm)``.

    At convergence the KKT conditions hold: a.T @ (b - a @ x) is zero on
    the support and non-positive (up to rounding) elsewhere, which is
    what makes the residual direction a clean separating certificate.

    Raises Indeterminate, carrying the best residual seen, if the
    iteration cap (default 10 times the column count) is exceeded.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m_rows, n_cols = a.shape
    if maxiter is None:
        maxiter = 10 * max(n_cols, 1)

    x = np.zeros(n_cols)
    passive = np.zeros(n_cols, dtype=bool)
    resid = b.copy()
    grad = a.T @ resid
    # dual feasibility slack, scaled like a.T @ residual
    kkt_tol = 10.0 * np.finfo(float).eps * max(m_rows, n_cols) * max(
        1.0, float(np.abs(a).sum(axis=0).max(initial=0.0))
    ) * max(1.0, float(np.linalg.norm(b)))

    iters = 0
    while not passive.all() and grad[~passive].max(initial=-np.inf) > kkt_tol:
        j = int(np.flatnonzero(~passive)[np.argmax(grad[~passive])])
        passive[j] = True
        while True:
            iters += 1
            if iters > maxiter:
                raise Indeterminate(
                    f"active-set cap {maxiter} exceeded",
                    best_residual=float(np.linalg.norm(b - a @ x)),
                )
            cols = np.flatnonzero(passive)
            z, *_ = np.linalg.lstsq(a[:, cols], b, rcond=None)
            if z.min(initial=np.inf) > 0.0:
                x = np.zeros(n_cols)
                x[cols] = z
                break
            # step back to the boundary and drop the vanishing entries
            neg = z <= 0.0
            alpha = np.min(x[cols][neg] / (x[cols][neg] - z[neg]))
            x[cols] += alpha * (z - x[cols])
            drop = cols[x[cols] <= np.finfo(float).eps * max(1.0, x.max())]
            passive[drop] = False
            x[drop] = 0.0
        resid = b - a @ x
        grad = a.T @ resid
    return x, float(np.linalg.norm(b - a @ x))
