"""Determinant maximization route to Parseval weights.

Rescaling every candidate vector to squared norm n puts all rank-1
outer products on the trace-n slice, where the convex hull of the
products has determinant at most 1 with equality exactly at the
identity.  Maximizing log det over simplex weights by Frank-Wolfe
steps with the closed-form line search therefore drives the moment
matrix to the identity precisely when the family is scalable; the
leverage gap max kappa - n certifies how far from stationarity the
design still is.  The extracted weights are alpha_j / gamma(x_j), the
simplex weights undone by the norm rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg

from . import caratheodory
from .errors import AllDegenerate, NotConverged, SingularStart
from .frames import FrameFamily, gram_vectorize_family
from .measures import DiscreteMeasure

#: Refresh the cached inverse and log-determinant from scratch this often.
_REFRESH_EVERY = 512


@dataclass(frozen=True)
class RescaledFamily:
    """Candidates scaled to squared norm n, with the scaling bookkeeping.

    ``kept`` are the indices of non-degenerate candidates inside the
    original family; ``omega`` holds the squared scaling factor per
    original candidate (zero for degenerate ones) and ``gamma`` the
    normalized squared norms the scaling inverts.
    """

    family: FrameFamily
    psi: np.ndarray
    kept: np.ndarray
    omega: np.ndarray
    gamma: np.ndarray

    @property
    def n(self) -> int:
        return self.psi.shape[0]


def christoffel_rescale(family: FrameFamily, tol: float = 1e-14) -> RescaledFamily:
    """Scale every candidate to squared norm n; drop the degenerate ones.

    gamma(x) = ||v(x)||^2 / n; candidates with gamma below ``tol`` times
    the largest are flagged degenerate, get omega = 0, and are excluded
    from the design.
    """
    v = family.vectors
    n = family.n
    gamma = (np.abs(v) ** 2).sum(axis=0) / n
    gmax = gamma.max()
    if gmax <= 0.0:
        raise AllDegenerate("every candidate vector has zero norm")
    kept = np.flatnonzero(gamma > tol * gmax)
    omega = np.zeros_like(gamma)
    omega[kept] = 1.0 / gamma[kept]
    psi = v[:, kept] * np.sqrt(omega[kept])
    return RescaledFamily(family=family, psi=psi, kept=kept, omega=omega, gamma=gamma)


@dataclass
class DesignState:
    """Simplex weights over candidates and the moment matrix they induce."""

    rescaled: RescaledFamily
    alpha: np.ndarray  # over kept candidates
    a_matrix: np.ndarray
    a_inv: np.ndarray
    log_det: float
    leverage: np.ndarray  # kappa(x) over kept candidates, last evaluation
    gap: float
    iteration: int
    epsilon: float
    converged: bool
    history: list = dc_field(default_factory=list)  # (log_det, trace, gap) per iteration

    @property
    def det(self) -> float:
        return float(np.exp(self.log_det))

    @property
    def support(self) -> np.ndarray:
        """Original-family indices carrying positive design weight."""
        return self.rescaled.kept[self.alpha > 0.0]


def _initial_design(psi, rng):
    """Greedy volume-maximizing start: pivoted QR column selection."""
    n, m = psi.shape
    _, _, piv = scipy.linalg.qr(psi, pivoting=True, mode="economic")
    sel = list(piv[:n])
    alpha = np.zeros(m)
    alpha[sel] = 1.0 / n
    a = (psi[:, sel] @ psi[:, sel].conj().T) / n
    tries = 0
    while np.linalg.matrix_rank(a, tol=1e-12 * np.linalg.norm(a, 2)) < n:
        tries += 1
        if tries > 8 or len(sel) == m:
            raise SingularStart("candidate family does not span the space")
        extra = int(rng.integers(0, m))
        if extra not in sel:
            sel.append(extra)
        alpha = np.zeros(m)
        alpha[sel] = 1.0 / len(sel)
        a = (psi[:, sel] * alpha[sel]) @ psi[:, sel].conj().T
    return alpha, a


def dopt_maximize(
    family,
    epsilon: float = 1e-6,
    max_iter: int = 100_000,
    seed: int = 0,
    away_steps: bool = False,
) -> DesignState:
    """Maximize det of the design moment matrix over simplex weights.

    Each step moves toward the candidate with the largest leverage
    kappa(x) = psi(x)* A^{-1} psi(x), with the closed-form step
    lambda = (kappa/n - 1) / (kappa - 1); away steps (shrinking the
    weight of the lowest-leverage support point) can be enabled for
    sparser supports.  Terminates when the leverage gap max kappa - n
    drops to ``epsilon``, which pins the determinant within a factor
    e^{-epsilon} of its maximum, or at ``max_iter``.

    The trace stays at most n and the determinant at most 1 throughout;
    both are recorded per iteration in ``history`` together with the
    log-determinant, which never decreases along the exact line search.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    rescaled = family if isinstance(family, RescaledFamily) else christoffel_rescale(family)
    psi = rescaled.psi
    n, m = psi.shape
    rng = np.random.default_rng(seed)
    alpha, a = _initial_design(psi, rng)
    a_inv = np.linalg.inv(a)
    _, log_det = np.linalg.slogdet(a)
    history = []
    gap = np.inf
    kappa = np.zeros(m)
    it = 0
    for it in range(1, max_iter + 1):
        kappa = np.einsum("ij,ij->j", psi.conj(), a_inv @ psi).real
        j_fw = int(np.argmax(kappa))
        gap = float(kappa[j_fw] - n)
        history.append((log_det, float(np.trace(a).real), gap))
        if gap <= epsilon:
            break

        use_away = False
        if away_steps:
            sup = np.flatnonzero(alpha > 0.0)
            j_aw = int(sup[np.argmin(kappa[sup])])
            use_away = (n - kappa[j_aw]) > gap and kappa[j_aw] < n - 1e-15
        if use_away:
            # away update alpha <- (1 + lam) alpha - lam e_j, capped at
            # the boundary where the support point drops out
            k = kappa[j_aw]
            lam_max = alpha[j_aw] / (1.0 - alpha[j_aw]) if alpha[j_aw] < 1.0 else 1.0
            lam_star = (n - k) / (n * max(k - 1.0, 1e-300)) if k > 1.0 else lam_max
            lam = min(lam_star, lam_max)
            alpha *= 1.0 + lam
            alpha[j_aw] = max(alpha[j_aw] - lam, 0.0)
            a = (psi * alpha) @ psi.conj().T
            a_inv = np.linalg.inv(a)
            _, log_det = np.linalg.slogdet(a)
        else:
            k = kappa[j_fw]
            lam = (k / n - 1.0) / (k - 1.0)
            v = psi[:, j_fw]
            alpha *= 1.0 - lam
            alpha[j_fw] += lam
            u = a_inv @ v
            c = lam / (1.0 - lam)
            a_inv = (a_inv - (c / (1.0 + c * k)) * np.outer(u, u.conj())) / (1.0 - lam)
            a = (1.0 - lam) * a + lam * np.outer(v, v.conj())
            log_det += n * np.log1p(-lam) + np.log1p(c * k)
        if it % _REFRESH_EVERY == 0:
            a = (psi * alpha) @ psi.conj().T
            a_inv = np.linalg.inv(a)
            _, log_det = np.linalg.slogdet(a)

    converged = gap <= epsilon
    return DesignState(
        rescaled=rescaled,
        alpha=alpha,
        a_matrix=a,
        a_inv=a_inv,
        log_det=float(log_det),
        leverage=kappa,
        gap=float(gap),
        iteration=it,
        epsilon=epsilon,
        converged=converged,
        history=history,
    )


def extract_rule(state: DesignState) -> DiscreteMeasure:
    """Weights over original candidates whose frame operator is the identity.

    Requires the design to have certified det >= 1 - epsilon; otherwise
    no partial output is produced.  The support is first trimmed by the
    convex moment-preserving reduction (which keeps the moment matrix
    and the weight sum bit-for-bit within rounding), then the simplex
    weights are mapped back through the norm rescaling,
    mu_j = alpha_j / gamma(x_j).
    """
    if state.log_det < np.log1p(-state.epsilon):
        raise NotConverged(
            f"design determinant {state.det:.12f} is below 1 - epsilon"
            f" = {1.0 - state.epsilon:.12f}; no weights are extracted"
        )
    rescaled = state.rescaled
    sub = FrameFamily(rescaled.psi, rescaled.family.field)
    cols = gram_vectorize_family(sub)
    idx, alpha_new = caratheodory.reduce_convex(cols, state.alpha)
    kept_ids = rescaled.kept[idx]
    mu = alpha_new * rescaled.omega[kept_ids]
    order = np.argsort(kept_ids)
    return DiscreteMeasure(kept_ids[order], mu[order])
