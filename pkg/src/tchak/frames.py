"""Finite-dimensional frame analysis and operator-preserving reweighting.

A family of vectors in K^n together with a non-negative weight per
vector has a frame operator S = sum_j w_j v_j v_j*.  Whether weights
exist that push S to the identity (or to any prescribed positive
definite target) is a cone-membership question on the rank-1 outer
products, made computable by embedding Hermitian matrices isometrically
into a real coordinate space.  The same embedding lets the
moment-preserving reduction subsample a weighted family without moving
its frame operator, hence without moving its frame bounds.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import caratheodory
from .cones import FeasibilityResult, cone_membership
from .errors import NonPositiveTarget
from .measures import DiscreteMeasure
from .systems import COMPLEX, REAL

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class FrameFamily:
    """Indexed family of vectors in K^n (columns of ``vectors``)."""

    vectors: np.ndarray
    field: str

    def __post_init__(self):
        v = np.asarray(self.vectors)
        if v.ndim != 2:
            raise ValueError("vectors must form an n x M matrix")
        v = v.astype(complex if self.field == COMPLEX else float)
        if not np.all(np.isfinite(v.real)) or (self.field == COMPLEX and not np.all(np.isfinite(v.imag))):
            raise ValueError("non-finite vector entries")
        if not np.any(np.abs(v).sum(axis=0) > 0):
            raise ValueError("need at least one nonzero vector")
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def __len__(self):
        return self.vectors.shape[1]

    @staticmethod
    def from_array(vectors) -> "FrameFamily":
        vectors = np.asarray(vectors)
        field = COMPLEX if np.iscomplexobj(vectors) else REAL
        return FrameFamily(vectors, field)

    # -- I/O -----------------------------------------------------------------

    @staticmethod
    def from_csv(path) -> "FrameFamily":
        """One row per vector, columns are real components."""
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
        return FrameFamily.from_array(np.asarray(rows).T)

    @staticmethod
    def from_json(path) -> "FrameFamily":
        """JSON {"vectors": [...]}; complex components as [re, im] pairs."""
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}") from exc
        raw = np.asarray(obj["vectors"])
        if raw.ndim == 3:
            vecs = raw[..., 0] + 1j * raw[..., 1]
        else:
            vecs = raw.astype(float)
        return FrameFamily.from_array(vecs.T)


@dataclass(frozen=True)
class FrameOperator:
    """Hermitian PSD operator with its spectral frame bounds."""

    matrix: np.ndarray
    eigen_bounds: tuple

    @staticmethod
    def from_matrix(s: np.ndarray) -> "FrameOperator":
        s = np.asarray(s)
        herm_defect = np.linalg.norm(s - s.conj().T)
        if herm_defect > 1e-12 * max(1.0, np.linalg.norm(s)):
            raise ValueError(f"operator is not Hermitian (defect {herm_defect:.2e})")
        eig = np.linalg.eigvalsh(s)
        return FrameOperator(matrix=s, eigen_bounds=(float(eig[0]), float(eig[-1])))


def frame_operator(family: FrameFamily, mu: DiscreteMeasure) -> FrameOperator:
    """S = sum_j w_j v_j v_j*, with the frame bounds as its extreme eigenvalues.

    The measure's points index into the family (integer ids).
    """
    ids = np.asarray(mu.points, dtype=int)
    v = family.vectors[:, ids]
    s = (v * mu.weights) @ v.conj().T
    s = 0.5 * (s + s.conj().T)  # kill rounding skew
    return FrameOperator.from_matrix(s)


def gram_dimension(n: int, field: str) -> int:
    """Real dimension of the Hermitian matrix space over the field."""
    return n * n if field == COMPLEX else n * (n + 1) // 2


def hermitian_vectorize(h: np.ndarray, field: str) -> np.ndarray:
    """Isometric real coordinates of a Hermitian matrix.

    Diagonal entries map to themselves; off-diagonal entries carry a
    sqrt(2) factor (real and imaginary parts separately in the complex
    case), so that <vec(A), vec(B)> = Re tr(A B*) exactly.
    """
    h = np.asarray(h)
    n = h.shape[0]
    iu = np.triu_indices(n, k=1)
    if field == COMPLEX:
        return np.concatenate([h.diagonal().real, _SQRT2 * h[iu].real, _SQRT2 * h[iu].imag])
    return np.concatenate([h.diagonal().real, _SQRT2 * h[iu].real])


def hermitian_devectorize(vec: np.ndarray, n: int, field: str) -> np.ndarray:
    """Inverse of :func:`hermitian_vectorize`."""
    vec = np.asarray(vec, dtype=float)
    iu = np.triu_indices(n, k=1)
    k = iu[0].size
    if field == COMPLEX:
        h = np.zeros((n, n), dtype=complex)
        h[np.diag_indices(n)] = vec[:n]
        h[iu] = (vec[n : n + k] + 1j * vec[n + k :]) / _SQRT2
        h += np.tril(h.conj().T, k=-1)
        return h
    h = np.zeros((n, n))
    h[np.diag_indices(n)] = vec[:n]
    h[iu] = vec[n:] / _SQRT2
    h += np.tril(h.T, k=-1)
    return h


def gram_vectorize(v: np.ndarray, field: str | None = None) -> np.ndarray:
    """Real coordinates of the rank-1 outer product v v*."""
    v = np.asarray(v)
    if field is None:
        field = COMPLEX if np.iscomplexobj(v) else REAL
    return hermitian_vectorize(np.outer(v, v.conj()), field)


def gram_vectorize_family(family: FrameFamily) -> np.ndarray:
    """Stacked outer-product coordinates, one column per family vector."""
    v = family.vectors
    n, m = v.shape
    iu = np.triu_indices(n, k=1)
    prods = v[:, None, :] * v.conj()[None, :, :]  # (n, n, M), entry (k,l) = v_k conj(v_l)
    diag = prods[np.diag_indices(n)].real
    off = prods[iu]
    if family.field == COMPLEX:
        return np.vstack([diag, _SQRT2 * off.real, _SQRT2 * off.imag])
    return np.vstack([diag, _SQRT2 * off.real])


def scalability_test(family: FrameFamily, tol: float = 1e-9) -> FeasibilityResult:
    """Can the family be reweighted into a Parseval family?

    Feasible exactly when the identity lies in the cone of the outer
    products.  The returned weights are already reduced to a support of
    at most n^2 (complex) or n(n+1)/2 (real) vectors.  On infeasibility
    the certificate decodes, via :func:`certificate_matrix`, to a
    Hermitian witness H with <H, v v*> <= 0 for every family vector and
    tr H > 0.
    """
    cols = gram_vectorize_family(family)
    target = hermitian_vectorize(np.eye(family.n), family.field)
    verdict = cone_membership(cols, target, tol)
    if not verdict.feasible:
        return verdict
    idx, w_new = caratheodory.reduce(cols, verdict.weights)
    weights = np.zeros(len(family))
    weights[idx] = w_new
    achieved = cols[:, idx] @ w_new if len(idx) else np.zeros(cols.shape[0])
    return FeasibilityResult(
        status=verdict.status,
        residual=float(np.linalg.norm(target - achieved)),
        weights=weights,
    )


def certificate_matrix(result: FeasibilityResult, n: int, field: str) -> np.ndarray:
    """Hermitian separating witness decoded from an infeasibility certificate."""
    if result.certificate is None:
        raise ValueError("result carries no certificate")
    return hermitian_devectorize(result.certificate, n, field)


def measure_from_weights(weights: np.ndarray) -> DiscreteMeasure:
    """Weights over family ids as a discrete measure on the support."""
    weights = np.asarray(weights, dtype=float)
    ids = np.flatnonzero(weights > 0)
    return DiscreteMeasure(ids, weights[ids])


def _inverse_sqrt(f: np.ndarray, tol: float) -> np.ndarray:
    eig, basis = np.linalg.eigh(f)
    if eig[0] <= tol * max(eig[-1], 0.0):
        raise NonPositiveTarget(
            f"target operator has smallest eigenvalue {eig[0]:.3e}; it must be positive definite"
        )
    return (basis * (eig**-0.5)) @ basis.conj().T


def tune_to_target(family: FrameFamily, f: np.ndarray, tol: float = 1e-9):
    """Weights giving the family a prescribed frame operator, if any exist.

    Transforms the vectors by the inverse square root of the target and
    asks for Parseval weights of the transformed family; the same
    weights give the original family the operator F.  Returns the
    measure over family ids, or the infeasibility result.
    """
    f = np.asarray(f)
    herm_defect = np.linalg.norm(f - f.conj().T)
    if herm_defect > 1e-12 * max(1.0, np.linalg.norm(f)):
        raise ValueError("target operator must be Hermitian")
    froot = _inverse_sqrt(f, tol)
    transformed = FrameFamily(froot @ family.vectors, family.field)
    verdict = scalability_test(transformed, tol)
    if not verdict.feasible:
        return verdict
    return measure_from_weights(verdict.weights)


def subsample_frame(family: FrameFamily, mu: DiscreteMeasure, tol: float = 1e-12):
    """Shrink a weighted family while preserving its frame operator.

    Runs the moment-preserving reduction on the outer-product
    coordinates, so S (and hence both frame bounds) is kept to rounding.
    Returns the reduced measure over family ids and the scaling factors
    s_j = sqrt(w_j) that turn the kept vectors into the discrete frame
    {s_j v_j} with the same operator.
    """
    ids = np.asarray(mu.points, dtype=int)
    sub = FrameFamily(family.vectors[:, ids], family.field)
    cols = gram_vectorize_family(sub)
    idx, w_new = caratheodory.reduce(cols, mu.weights, tol=tol)
    reduced = DiscreteMeasure(ids[idx], w_new)
    return reduced, np.sqrt(w_new)
