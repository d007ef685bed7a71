"""Exact discrete representations of integral p-norms for even p.

For even p, |f|^p is a product of p/2 copies of f and p/2 copies of its
conjugate, so it lives in the span of products of monomials of degree
p/2 in the basis functions.  An exact non-negative rule for that product
space turns the p-norm integral into a finite sum with equality, for
every f in the original space.  For non-even p no such exact rule exists
in general, so those exponents are rejected outright.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .measures import DiscreteMeasure
from .systems import COMPLEX, REAL, FunctionSystem, evaluate
from .tchakaloff import QuadratureRule, tchakaloff_rule

#: Hard cap on generated product/power dimensions.
MAX_FUNCTIONS = 10**6


def product_system(system: FunctionSystem) -> FunctionSystem:
    """Span of all pairwise products f * conj(g) of the basis functions.

    Complex systems produce all n^2 ordered products phi_k * conj(phi_l);
    real systems produce the n(n+1)/2 symmetric products.  No symbolic
    deduplication happens here: rank collapse is left to the numerical
    reduction downstream.
    """
    n = system.n
    base = system.evaluator
    if system.field == COMPLEX:
        pairs = [(k, l) for k in range(n) for l in range(n)]

        def ev(x):
            vals = np.asarray(base(x))
            return np.vstack([vals[k] * np.conj(vals[l]) for k, l in pairs])

        return FunctionSystem(
            field=COMPLEX,
            n=n * n,
            evaluator=ev,
            family_tag=f"product({system.family_tag})",
            params={"base": system.spec(), "pairs": "ordered"},
        )
    pairs = [(k, l) for k in range(n) for l in range(k, n)]

    def ev(x):
        vals = np.asarray(base(x))
        return np.vstack([vals[k] * vals[l] for k, l in pairs])

    return FunctionSystem(
        field=REAL,
        n=len(pairs),
        evaluator=ev,
        family_tag=f"product({system.family_tag})",
        params={"base": system.spec(), "pairs": "symmetric"},
    )


def power_system(system: FunctionSystem, half_p: int) -> FunctionSystem:
    """All degree-(p/2) monomials in the basis functions.

    One function per weak composition k_1 + ... + k_n = half_p, so the
    count is binom(n + half_p - 1, half_p).
    """
    if half_p < 1:
        raise ValueError("half_p must be at least 1")
    if half_p == 1:
        return system
    n = system.n
    count = comb(n + half_p - 1, half_p)
    if count > MAX_FUNCTIONS:
        raise ValueError(f"power system would need {count} functions (cap {MAX_FUNCTIONS})")
    combos = list(itertools.combinations_with_replacement(range(n), half_p))
    base = system.evaluator

    def ev(x):
        vals = np.asarray(base(x))
        rows = np.empty((len(combos), vals.shape[1]), dtype=vals.dtype)
        for i, combo in enumerate(combos):
            acc = vals[combo[0]].copy()
            for idx in combo[1:]:
                acc = acc * vals[idx]
            rows[i] = acc
        return rows

    return FunctionSystem(
        field=system.field,
        n=count,
        evaluator=ev,
        family_tag=f"power({system.family_tag},{half_p})",
        params={"base": system.spec(), "half_p": half_p},
    )


def node_count_bound(n: int, p: int, field: str) -> int:
    """Largest node count an exact p-norm rule can need for dimension n."""
    if field == COMPLEX:
        return comb(n + p // 2 - 1, p // 2) ** 2
    return comb(n + p - 1, p)


def mz_rule(system: FunctionSystem, mu: DiscreteMeasure, p: int, tol: float = 1e-9) -> QuadratureRule:
    """Exact rule for sum_j w_j |f(x_j)|^p = integral of |f|^p, f in the span.

    Only even p >= 2 is supported: for non-even exponents exact discrete
    p-norm identities fail to exist already in simple spaces, so the
    request is rejected rather than approximated.
    """
    if p < 2 or p % 2 != 0:
        raise ValueError(
            f"p={p}: exact p-norm discretization requires an even exponent;"
            " for non-even p exact rules do not exist in general"
        )
    carrier = product_system(power_system(system, p // 2))
    rule = tchakaloff_rule(carrier, mu, tol)
    bound = node_count_bound(system.n, p, system.field)
    if len(rule) > bound:
        raise AssertionError(  # pragma: no cover - rank bound implies the count bound
            f"{len(rule)} nodes exceed the dimension bound {bound}"
        )
    meta = dict(rule.meta)
    meta.update({"p": p, "count_bound": bound})
    return QuadratureRule(
        node_ids=rule.node_ids,
        nodes=rule.nodes,
        weights=rule.weights,
        weight_class=rule.weight_class,
        residual=rule.residual,
        target_norm=rule.target_norm,
        node_bound_used=rule.node_bound_used,
        meta=meta,
    )


@dataclass(frozen=True)
class MZVerification:
    max_relative_error: float
    trials: int
    seed: int


def mz_verify(
    rule: QuadratureRule,
    system: FunctionSystem,
    mu: DiscreteMeasure,
    p: int,
    trials: int = 1000,
    seed: int = 0,
) -> MZVerification:
    """Max relative p-norm error over random coefficient draws.

    Draws standard-normal coefficients (circularly symmetric in the
    complex case), forms f = sum c_k phi_k, and compares the rule's
    discrete p-norm against the reference sum on the source measure.
    Deterministic for a fixed seed.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    vals_ref = evaluate(system, mu.points).entries
    vals_rule = evaluate(system, rule.nodes).entries
    if system.field == COMPLEX:
        coeffs = (rng.standard_normal((trials, system.n)) + 1j * rng.standard_normal((trials, system.n))) / np.sqrt(2.0)
    else:
        coeffs = rng.standard_normal((trials, system.n))
    f_ref = coeffs @ vals_ref
    f_rule = coeffs @ vals_rule
    ref = (np.abs(f_ref) ** p) @ mu.weights
    got = (np.abs(f_rule) ** p) @ rule.weights.real
    denom = np.maximum(np.maximum(np.abs(ref), np.abs(got)), 1e-300)
    max_err = float(np.max(np.abs(got - ref) / denom))
    return MZVerification(max_relative_error=max_err, trials=trials, seed=seed)
