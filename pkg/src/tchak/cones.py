"""Conic and linear feasibility with witnesses.

Deciding whether a target vector is a non-negative combination of given
columns is a non-negative least-squares problem.  A small optimal
residual yields the witness weights; a large one yields a separating
certificate: the normalized residual direction c satisfies c'X <= 0
componentwise (up to rounding) and c'b = ||residual|| > 0, proving that
the target lies outside the cone.  On top of this sit the functional
discretization routines: exact rules with free, real, or non-negative
weights for a linear functional given by its values on a basis.

Every verdict here is relative to the finite point set supplied by the
caller: feasibility on a larger domain can only be probed through a
richer grid, never decided abstractly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import caratheodory
from ._nnls import nnls
from .errors import SpanViolation
from .measures import DiscreteMeasure
from .systems import (
    COMPLEX,
    EvaluationMatrix,
    FunctionSystem,
    evaluate,
    numerical_rank,
    realify,
    realify_vector,
    select_independent_points,
)
from .tchakaloff import (
    WEIGHTS_GENERAL,
    WEIGHTS_NONNEG,
    WEIGHTS_REAL,
    QuadratureRule,
)

#: Default relative feasibility tolerance.
DEFAULT_FEAS_TOL = 1e-9

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class FeasibilityResult:
    """Witness weights (feasible) or a separating certificate (infeasible).

    Exactly one of ``weights`` / ``certificate`` is populated.  The
    certificate is normalized to unit length.
    """

    status: str
    residual: float
    weights: np.ndarray | None = None
    certificate: np.ndarray | None = None

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    def __post_init__(self):
        if (self.weights is None) == (self.certificate is None):
            raise ValueError("exactly one of weights/certificate must be set")


def _entries(m) -> np.ndarray:
    return m.entries if isinstance(m, EvaluationMatrix) else np.asarray(m)


def cone_membership(m, b, tol: float = DEFAULT_FEAS_TOL, maxiter: int | None = None) -> FeasibilityResult:
    """Decide b in cone{columns of m} by non-negative least squares.

    Feasible iff the optimal residual is at most ``tol * (1 + ||b||)``.
    On infeasibility, the certificate is the normalized residual
    direction.
    """
    mat = np.asarray(_entries(m), dtype=float)
    b = np.asarray(b, dtype=float)
    if mat.shape[0] != b.shape[0]:
        raise ValueError(f"matrix has {mat.shape[0]} rows but target has {b.shape[0]}")
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return FeasibilityResult(FEASIBLE, 0.0, weights=np.zeros(mat.shape[1]))
    w, rnorm = nnls(mat, b, maxiter=maxiter)
    if rnorm <= tol * (1.0 + bnorm):
        return FeasibilityResult(FEASIBLE, float(rnorm), weights=w)
    resid = b - mat @ w
    certificate = resid / np.linalg.norm(resid)
    return FeasibilityResult(INFEASIBLE, float(rnorm), certificate=certificate)


@dataclass(frozen=True)
class SuitabilityReport:
    """Feasibility of exact discretization on one point set, per weight class."""

    k_weights: FeasibilityResult
    r_weights: FeasibilityResult
    nonneg_weights: FeasibilityResult


def _lstsq_feasibility(mat, b, tol):
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return FeasibilityResult(FEASIBLE, 0.0, weights=np.zeros(mat.shape[1], dtype=mat.dtype))
    w, *_ = np.linalg.lstsq(mat, b, rcond=None)
    resid = b - mat @ w
    rnorm = float(np.linalg.norm(resid))
    if rnorm <= tol * (1.0 + bnorm):
        return FeasibilityResult(FEASIBLE, rnorm, weights=w)
    certificate = resid / np.linalg.norm(resid)
    return FeasibilityResult(INFEASIBLE, rnorm, certificate=certificate)


def suitability(m_p, b, field: str = None, tol: float = DEFAULT_FEAS_TOL) -> SuitabilityReport:
    """Three independent verdicts for a point set: K, real, non-negative weights.

    ``m_p`` is the evaluation matrix at the candidate points, ``b`` the
    target values of the functional on the basis.  K-weight suitability
    is least squares over the system's field; real-weight suitability is
    least squares on the real expansion; non-negative suitability is
    cone membership.
    """
    if field is None:
        field = m_p.field if isinstance(m_p, EvaluationMatrix) else (
            COMPLEX if np.iscomplexobj(_entries(m_p)) else "real"
        )
    mat = _entries(m_p)
    b = np.asarray(b)
    k_res = _lstsq_feasibility(mat.astype(complex if field == COMPLEX else float), b, tol)
    if isinstance(m_p, EvaluationMatrix):
        rmat = realify(m_p).entries
    else:
        rmat = realify(EvaluationMatrix(mat, list(range(mat.shape[1])), field)).entries
    rb = realify_vector(b, field)
    r_res = _lstsq_feasibility(rmat, rb, tol)
    nn_res = cone_membership(rmat, rb, tol)
    return SuitabilityReport(k_weights=k_res, r_weights=r_res, nonneg_weights=nn_res)


def discretize_functional(
    system: FunctionSystem,
    omega_points,
    l_values,
    tol: float = DEFAULT_FEAS_TOL,
):
    """Non-negative discretization of a functional on a finite domain.

    ``l_values`` holds the functional applied to each basis function.
    Returns an exact rule with at most effdim-many nodes when the target
    lies in the cone of the point evaluations, else the infeasibility
    result with its certificate.
    """
    omega_points = np.asarray(omega_points)
    emat = realify(evaluate(system, omega_points))
    b = realify_vector(np.asarray(l_values), system.field)
    verdict = cone_membership(emat, b, tol)
    if not verdict.feasible:
        return verdict
    idx, w_new = caratheodory.reduce(emat, verdict.weights)
    achieved = emat.entries[:, idx] @ w_new if len(idx) else np.zeros_like(b)
    return QuadratureRule(
        node_ids=idx,
        nodes=omega_points[idx],
        weights=w_new,
        weight_class=WEIGHTS_NONNEG,
        residual=float(np.linalg.norm(b - achieved)),
        target_norm=float(np.linalg.norm(b)),
        node_bound_used=numerical_rank(emat),
        meta={"functional": True},
    )


def discretize_linear(
    system: FunctionSystem,
    omega_points,
    b,
    field: str = "K",
    tol: float = DEFAULT_FEAS_TOL,
) -> QuadratureRule:
    """Exact rule with freely signed weights via point selection + solve.

    With ``field="K"`` the weights live in the system's scalar field and
    at most n nodes are used; with ``field="R"`` they are real and at
    most effdim-many nodes are used.  Raises SpanViolation when the
    target is not in the reachable span.
    """
    omega_points = np.asarray(omega_points)
    emat = evaluate(system, omega_points)
    b = np.asarray(b)
    if field == "R":
        mat = realify(emat).entries
        target = realify_vector(b, system.field)
        weight_class = WEIGHTS_REAL
    elif field == "K":
        mat = emat.entries
        target = b.astype(mat.dtype)
        weight_class = WEIGHTS_GENERAL if system.field == COMPLEX else WEIGHTS_REAL
    else:
        raise ValueError("field must be 'K' or 'R'")
    idx = select_independent_points(EvaluationMatrix(mat, emat.point_ids, "real" if field == "R" else system.field))
    sub = mat[:, idx]
    w, *_ = np.linalg.lstsq(sub, target, rcond=None)
    resid = float(np.linalg.norm(target - sub @ w))
    tnorm = float(np.linalg.norm(target))
    if resid > tol * (1.0 + tnorm):
        raise SpanViolation(
            f"target leaves the span by {resid:.3e} (tolerance {tol * (1.0 + tnorm):.3e})"
        )
    return QuadratureRule(
        node_ids=idx,
        nodes=omega_points[idx],
        weights=w,
        weight_class=weight_class,
        residual=resid,
        target_norm=tnorm,
        node_bound_used=len(idx),
        meta={"field": field},
    )


def functional_measure(rule: QuadratureRule) -> DiscreteMeasure:
    """The rule's node-weight pairs as a measure (non-negative rules only)."""
    if rule.weight_class != WEIGHTS_NONNEG:
        raise ValueError("only non-negative rules define a measure")
    return rule.as_measure()
