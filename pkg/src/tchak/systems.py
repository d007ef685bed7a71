"""Function systems and their evaluation into matrices.

A function system is a finite family of scalar-valued functions
phi_1, ..., phi_n over the reals or the complex numbers, presented as a
single vector-valued evaluator x -> (phi_1(x), ..., phi_n(x)).  All
downstream machinery (quadrature, feasibility, norm discretization)
consumes systems only through their evaluation matrices on finite point
lists, so the one non-trivial notion here is the *effective real
dimension*: the real dimension of the span of the real parts, computed
as the numerical rank of the real expansion of an evaluation matrix.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import EvaluationError

REAL = "real"
COMPLEX = "complex"

#: Default relative rank tolerance.  Singular values at or below this
#: fraction of the largest one are treated as zero.
DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class FunctionSystem:
    """A vector-valued evaluator for n scalar functions over one field.

    The evaluator maps an array of M points to an (n, M) matrix whose
    column j is the value vector at point j.  Evaluators must be
    deterministic: evaluating the same points twice yields bit-identical
    matrices.
    """

    field: str
    n: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    family_tag: str = "custom"
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.field not in (REAL, COMPLEX):
            raise ValueError(f"field must be 'real' or 'complex', got {self.field!r}")
        if self.n < 1:
            raise ValueError("a function system needs at least one function")

    def spec(self) -> dict:
        """JSON-ready description {family, n, params} of a built-in system."""
        return {"family": self.family_tag, "n": self.n, "params": self.params}


@dataclass(frozen=True)
class EvaluationMatrix:
    """An n x M matrix of function values, column j = phi(point j)."""

    entries: np.ndarray
    point_ids: list
    field: str

    @property
    def shape(self):
        return self.entries.shape


def evaluate(system: FunctionSystem, points) -> EvaluationMatrix:
    """Evaluate a system on a point list into an n x M matrix.

    Evaluation failures (exceptions or non-finite values) are reported
    with the identifier of the offending point.
    """
    points = np.asarray(points)
    m = points.shape[0] if points.ndim else 0
    if m == 0:
        dtype = complex if system.field == COMPLEX else float
        return EvaluationMatrix(np.zeros((system.n, 0), dtype=dtype), [], system.field)
    try:
        entries = np.asarray(system.evaluator(points))
    except EvaluationError:
        raise
    except Exception as exc:  # pin down the failing point for the report
        for j in range(m):
            try:
                np.asarray(system.evaluator(points[j : j + 1]))
            except Exception:
                raise EvaluationError(
                    f"evaluation failed at point {j} ({points[j]!r}): {exc}", point_id=j
                ) from exc
        raise EvaluationError(f"evaluation failed: {exc}") from exc
    if entries.shape != (system.n, m):
        raise EvaluationError(
            f"evaluator returned shape {entries.shape}, expected {(system.n, m)}"
        )
    finite_cols = np.all(np.isfinite(entries.real) & np.isfinite(entries.imag), axis=0) \
        if entries.dtype.kind == "c" else np.all(np.isfinite(entries), axis=0)
    if not finite_cols.all():
        bad = int(np.flatnonzero(~finite_cols)[0])
        raise EvaluationError(
            f"non-finite function value at point {bad} ({points[bad]!r})",
            point_id=bad,
        )
    if system.field == REAL:
        entries = entries.astype(float, copy=False)
    else:
        entries = entries.astype(complex, copy=False)
    return EvaluationMatrix(entries, list(range(m)), system.field)


def realify(m: EvaluationMatrix) -> EvaluationMatrix:
    """Expand a complex matrix into its real/imaginary row pairs.

    A complex n x M matrix becomes a real 2n x M matrix with rows
    ordered (Re phi_1, Im phi_1, ..., Re phi_n, Im phi_n).  Real input
    is returned unchanged, which makes the operation idempotent.
    """
    if m.field == REAL:
        return m
    n, cols = m.entries.shape
    out = np.empty((2 * n, cols), dtype=float)
    out[0::2] = m.entries.real
    out[1::2] = m.entries.imag
    return EvaluationMatrix(out, m.point_ids, REAL)


def realify_vector(b: np.ndarray, field: str) -> np.ndarray:
    """Expand a target vector consistently with :func:`realify` rows."""
    b = np.asarray(b)
    if field == REAL:
        return b.astype(float, copy=False)
    out = np.empty(2 * b.shape[0], dtype=float)
    out[0::2] = b.real
    out[1::2] = b.imag
    return out


def numerical_rank(m, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Count singular values exceeding ``rel_tol`` times the largest.

    Returns 0 for empty and zero matrices.
    """
    if not 0.0 <= rel_tol < 1.0:
        raise ValueError("rel_tol must lie in [0, 1)")
    entries = m.entries if isinstance(m, EvaluationMatrix) else np.asarray(m)
    if entries.size == 0:
        return 0
    s = np.linalg.svd(entries, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def effective_real_dimension(system: FunctionSystem, candidate_points, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Real dimension of the span of real parts, probed on candidate points.

    The candidate grid must be rich enough to expose the rank of the
    system; this is the caller's responsibility.  The result is clamped
    to [0, 2n], and for real systems it never exceeds n.
    """
    r = numerical_rank(realify(evaluate(system, candidate_points)), rel_tol)
    return int(min(max(r, 0), 2 * system.n))


def select_independent_points(m: EvaluationMatrix, rel_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Pick column indices making the evaluation submatrix full column-rank.

    Uses QR with column pivoting; the subset size equals the numerical
    rank of the matrix.
    """
    entries = m.entries if isinstance(m, EvaluationMatrix) else np.asarray(m)
    rank = numerical_rank(entries, rel_tol)
    if rank == 0:
        return np.array([], dtype=int)
    _, _, piv = scipy.linalg.qr(entries, pivoting=True, mode="economic")
    return np.sort(piv[:rank])


# ---------------------------------------------------------------------------
# Built-in families


def _monomial(n):
    def ev(x):
        x = np.asarray(x, dtype=float)
        return np.vstack([x**k for k in range(n)])

    return ev


def _legendre(n):
    def ev(x):
        x = np.asarray(x, dtype=float)
        rows = []
        for k in range(n):
            c = np.zeros(k + 1)
            c[k] = 1.0
            rows.append(np.polynomial.legendre.legval(x, c))
        return np.vstack(rows)

    return ev


def _chebyshev(n):
    def ev(x):
        x = np.asarray(x, dtype=float)
        rows = []
        for k in range(n):
            c = np.zeros(k + 1)
            c[k] = 1.0
            rows.append(np.polynomial.chebyshev.chebval(x, c))
        return np.vstack(rows)

    return ev


def _default_wavenumbers(n):
    # 0, 1, -1, 2, -2, ...
    ks = [0]
    k = 1
    while len(ks) < n:
        ks.append(k)
        if len(ks) < n:
            ks.append(-k)
        k += 1
    return ks[:n]


def _trig(n, ks):
    ks = np.asarray(ks, dtype=float)

    def ev(x):
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.outer(ks, x))

    return ev


def _trigreal(n):
    # 1, sqrt(2) cos(2 pi x), sqrt(2) sin(2 pi x), sqrt(2) cos(4 pi x), ...
    # orthonormal w.r.t. the uniform measure on [0, 1).
    def ev(x):
        x = np.asarray(x, dtype=float)
        rows = [np.ones_like(x)]
        k = 1
        while len(rows) < n:
            rows.append(np.sqrt(2.0) * np.cos(2.0 * np.pi * k * x))
            if len(rows) < n:
                rows.append(np.sqrt(2.0) * np.sin(2.0 * np.pi * k * x))
            k += 1
        return np.vstack(rows[:n])

    return ev


def _piecewise(n, m):
    # On (0, n): m characteristic functions of the unit intervals
    # (j-1, j), j = 1..m, followed by n - m linear bumps
    # (x - k + 1/2) restricted to (k-1, k), k = m+1..n.  The bumps are
    # centered, so they integrate to zero over their interval.
    if not 1 <= m <= n:
        raise ValueError("piecewise family needs 1 <= m <= n")

    def ev(x):
        x = np.asarray(x, dtype=float)
        rows = []
        for j in range(1, m + 1):
            rows.append(((x > j - 1) & (x < j)).astype(float))
        for k in range(m + 1, n + 1):
            ind = (x > k - 1) & (x < k)
            rows.append(np.where(ind, x - k + 0.5, 0.0))
        return np.vstack(rows)

    return ev


def _kernel_features(centers, bandwidth):
    centers = np.asarray(centers, dtype=float)

    def ev(x):
        x = np.asarray(x, dtype=float)
        d = x[None, :] - centers[:, None]
        return np.exp(-(d**2) / (2.0 * bandwidth**2))

    return ev


def _matrix_backed(entries):
    entries = np.asarray(entries)

    def ev(pts):
        ids = np.asarray(pts)
        if ids.dtype.kind == "f":
            if not np.all(ids == np.round(ids)):
                raise EvaluationError("matrix-backed systems evaluate only at stored point indices")
            ids = ids.astype(int)
        if ids.size and (ids.min() < 0 or ids.max() >= entries.shape[1]):
            bad = int(np.flatnonzero((ids < 0) | (ids >= entries.shape[1]))[0])
            raise EvaluationError(
                f"point index {ids[bad]} outside stored range [0, {entries.shape[1]})",
                point_id=bad,
            )
        return entries[:, ids]

    return ev


def matrix_system(entries, field=None) -> FunctionSystem:
    """System backed by an explicit n x M value matrix (points are ids 0..M-1)."""
    entries = np.asarray(entries)
    if field is None:
        field = COMPLEX if np.iscomplexobj(entries) else REAL
    entries = entries.astype(complex if field == COMPLEX else float)
    return FunctionSystem(
        field=field,
        n=entries.shape[0],
        evaluator=_matrix_backed(entries),
        family_tag="matrix-backed",
        params={"m": int(entries.shape[1])},
    )


_FAMILIES = {
    "monomial": lambda n, p: (REAL, _monomial(n)),
    "legendre": lambda n, p: (REAL, _legendre(n)),
    "chebyshev": lambda n, p: (REAL, _chebyshev(n)),
    "trig": lambda n, p: (COMPLEX, _trig(n, p.get("ks", _default_wavenumbers(n)))),
    "trigreal": lambda n, p: (REAL, _trigreal(n)),
    "piecewise": lambda n, p: (REAL, _piecewise(n, int(p["m"]))),
    "kernel-feature": lambda n, p: (
        REAL,
        _kernel_features(p["centers"], float(p.get("bandwidth", 1.0))),
    ),
}


def build_system(spec: dict) -> FunctionSystem:
    """Construct a built-in family from a {family, n, params} description.

    Matrix-backed systems pass entries either as plain numbers (real) or
    as [re, im] pairs (complex).
    """
    family = spec["family"]
    n = int(spec["n"])
    params = dict(spec.get("params", {}))
    if family in ("matrix", "matrix-backed"):
        raw = np.asarray(params["entries"])
        if raw.ndim == 3:  # (re, im) pairs
            entries = raw[..., 0] + 1j * raw[..., 1]
        else:
            entries = raw.astype(float)
        if entries.shape[0] != n:
            raise ValueError(f"matrix has {entries.shape[0]} rows but the description says n={n}")
        return matrix_system(entries)
    if family not in _FAMILIES:
        raise ValueError(f"unknown family {family!r}; known: {sorted(_FAMILIES)} + matrix")
    field, ev = _FAMILIES[family](n, params)
    return FunctionSystem(field=field, n=n, evaluator=ev, family_tag=family, params=params)


def load_system(path) -> FunctionSystem:
    """Load a system description from a JSON file."""
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}") from exc
    return build_system(spec)


def load_matrix_csv(path) -> FunctionSystem:
    """Load a matrix-backed system from CSV (one row per function)."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric entry ({exc})") from exc
    if not rows:
        raise ValueError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged rows (widths {sorted(widths)})")
    return matrix_system(np.asarray(rows))
