"""Exact quadrature with non-negative weights on discrete measures.

For any finite-dimensional function system and any finite point-weight
measure, there is an exact rule supported on at most effdim-many of the
measure's own points, where effdim is the effective real dimension of
the system on those points.  The rule is obtained by expanding the
evaluation matrix over the reals and running the moment-preserving
reduction on the measure's weights.  A mass-preserving variant adjoins
the constant function, paying one extra node.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import caratheodory
from ._nnls import nnls
from .errors import NegativeWeight
from .measures import DiscreteMeasure, MomentVector
from .systems import (
    COMPLEX,
    DEFAULT_RANK_TOL,
    FunctionSystem,
    evaluate,
    numerical_rank,
    realify,
)

WEIGHTS_GENERAL = "general"
WEIGHTS_REAL = "real"
WEIGHTS_NONNEG = "nonneg"


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights, with the moment residual they achieve.

    ``node_ids`` index into the source measure's point list; nodes are
    never invented, only selected.  ``residual`` is the 2-norm of the
    moment mismatch against the target this rule was built for, and
    ``target_norm`` the 2-norm of that target (for relative readings).
    """

    node_ids: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    weight_class: str
    residual: float
    target_norm: float
    node_bound_used: int
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "node_ids", np.asarray(self.node_ids, dtype=int))
        object.__setattr__(self, "nodes", np.asarray(self.nodes))
        object.__setattr__(self, "weights", np.asarray(self.weights))
        if self.weight_class == WEIGHTS_NONNEG and len(self.weights) and np.min(self.weights.real) < 0:
            raise ValueError("non-negative rule with a negative weight")

    def __len__(self):
        return len(self.weights)

    def as_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.nodes, self.weights.real)

    def recomputed_residual(self, system: FunctionSystem, target: MomentVector) -> float:
        """2-norm of the moment mismatch, recomputed from scratch."""
        achieved = rule_moments(system, self)
        return float(np.linalg.norm(achieved.entries - target.entries))

    # -- I/O ---------------------------------------------------------------

    def to_json_obj(self) -> dict:
        # complex scalars become [re, im] pairs; the *_complex flags keep
        # the decoding unambiguous for rules on multi-coordinate points
        def enc(arr):
            if np.iscomplexobj(arr):
                return [[float(v.real), float(v.imag)] for v in arr]
            return np.asarray(arr, dtype=float).tolist()

        return {
            "node_ids": self.node_ids.tolist(),
            "nodes": enc(self.nodes),
            "nodes_complex": bool(np.iscomplexobj(self.nodes)),
            "weights": enc(self.weights),
            "weights_complex": bool(np.iscomplexobj(self.weights)),
            "weight_class": self.weight_class,
            "residual": float(self.residual),
            "target_norm": float(self.target_norm),
            "node_bound_used": int(self.node_bound_used),
            "meta": self.meta,
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "QuadratureRule":
        def dec(raw, is_complex):
            arr = np.asarray(raw)
            if is_complex:
                return arr[:, 0] + 1j * arr[:, 1]
            return arr

        return QuadratureRule(
            node_ids=np.asarray(obj["node_ids"], dtype=int),
            nodes=dec(obj["nodes"], obj.get("nodes_complex", False)),
            weights=dec(obj["weights"], obj.get("weights_complex", False)),
            weight_class=obj["weight_class"],
            residual=float(obj["residual"]),
            target_norm=float(obj["target_norm"]),
            node_bound_used=int(obj["node_bound_used"]),
            meta=obj.get("meta", {}),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "QuadratureRule":
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(
                    f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}"
                ) from exc
        return QuadratureRule.from_json_obj(obj)


def rule_moments(system: FunctionSystem, rule: QuadratureRule) -> MomentVector:
    """Moments of the rule treated as a measure (complex weights allowed)."""
    emat = evaluate(system, rule.nodes)
    w = rule.weights
    if np.iscomplexobj(w) or system.field == COMPLEX:
        vals = emat.entries.astype(complex) @ np.asarray(w, dtype=complex)
        return MomentVector(vals, COMPLEX)
    re = np.array([math.fsum(row * w) for row in emat.entries])
    return MomentVector(re, system.field)


def _finish_nonneg(system, mu, idx, w_new, real_target, bound, tol, meta):
    achieved = realify(evaluate(system, mu.points[idx])).entries @ w_new if len(idx) else np.zeros_like(real_target)
    residual = float(np.linalg.norm(real_target - achieved))
    target_norm = float(np.linalg.norm(real_target))
    if residual > tol * (1.0 + target_norm):
        raise NegativeWeight(  # pragma: no cover - reduce keeps residuals far below this
            f"reduction residual {residual:.3e} exceeds tolerance {tol:.1e}"
        )
    return QuadratureRule(
        node_ids=idx,
        nodes=mu.points[idx],
        weights=w_new,
        weight_class=WEIGHTS_NONNEG,
        residual=residual,
        target_norm=target_norm,
        node_bound_used=bound,
        meta=meta,
    )


def tchakaloff_rule(system: FunctionSystem, mu: DiscreteMeasure, tol: float = 1e-9) -> QuadratureRule:
    """Exact non-negative rule with at most effdim-many nodes.

    The pipeline evaluates the system on the measure's points, expands
    over the reals, and reduces the measure's weights; node count is
    bounded by the effective real dimension on those points.
    """
    emat = realify(evaluate(system, mu.points))
    bound = numerical_rank(emat)
    idx, w_new = caratheodory.reduce(emat, mu.weights)
    target = emat.entries @ mu.weights
    return _finish_nonneg(system, mu, idx, w_new, target, bound, tol, {"normalized": False})


def tchakaloff_rule_normalized(system: FunctionSystem, mu: DiscreteMeasure, tol: float = 1e-9) -> QuadratureRule:
    """Mass-preserving variant: adjoins the constant function.

    Node count is bounded by effdim + 1 and the weights sum to the
    measure's total mass.
    """
    emat = realify(evaluate(system, mu.points))
    bound = numerical_rank(emat) + 1
    idx, w_new = caratheodory.reduce_convex(emat, mu.weights)
    target = emat.entries @ mu.weights
    return _finish_nonneg(system, mu, idx, w_new, target, bound, tol, {"normalized": True})


def minimal_rule_bruteforce(
    system: FunctionSystem,
    mu: DiscreteMeasure,
    max_support: int,
    tol: float = 1e-9,
    rank_tol: float = DEFAULT_RANK_TOL,
):
    """Exhaustive search for the smallest exact non-negative rule.

    Tries every support of size 1, 2, ..., ``max_support`` drawn from
    the measure's points and solves a non-negative least-squares problem
    on each.  Returns the first exact rule found, or None.  Only viable
    for tiny grids; quadrature construction proper goes through
    :func:`tchakaloff_rule`.
    """
    emat = realify(evaluate(system, mu.points))
    target = emat.entries @ mu.weights
    scale = 1.0 + float(np.linalg.norm(target))
    m = len(mu)
    for size in range(1, max_support + 1):
        for support in itertools.combinations(range(m), size):
            cols = emat.entries[:, list(support)]
            w, rnorm = nnls(cols, target)
            if rnorm <= tol * scale:
                idx = np.asarray(support, dtype=int)
                return QuadratureRule(
                    node_ids=idx,
                    nodes=mu.points[idx],
                    weights=w,
                    weight_class=WEIGHTS_NONNEG,
                    residual=float(rnorm),
                    target_norm=scale - 1.0,
                    node_bound_used=size,
                    meta={"bruteforce": True},
                )
    return None
