"""Discrete measures, samplers, and moment computation.

Every measure handled by this package is a finite list of points with
non-negative weights.  Continuous measures enter only as samplers or as
fine grids; this deliberate restriction makes every downstream identity
exactly checkable in floating point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .errors import EvaluationError
from .systems import COMPLEX, FunctionSystem, evaluate

#: Weights below this fraction of the total mass may be pruned, but only
#: on explicit request (the ``compact`` flag), never silently.
PRUNE_REL = 1e-15


def _fsum(values) -> float:
    """Compensated sum of a 1-D array."""
    return math.fsum(np.asarray(values, dtype=float))


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite point list with non-negative weights."""

    points: np.ndarray
    weights: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points)
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or pts.shape[0] != w.shape[0]:
            raise ValueError(f"{pts.shape[0]} points but {w.shape} weights")
        if w.size and w.min() < 0.0:
            raise ValueError(f"negative weight {w.min()} at index {int(np.argmin(w))}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_total_mass", _fsum(w))

    @property
    def total_mass(self) -> float:
        return self._total_mass

    def __len__(self):
        return self.weights.shape[0]

    def restrict(self, indices) -> "DiscreteMeasure":
        indices = np.asarray(indices, dtype=int)
        return DiscreteMeasure(self.points[indices], self.weights[indices], dict(self.meta))

    def support(self) -> np.ndarray:
        """Indices of strictly positive weights."""
        return np.flatnonzero(self.weights > 0.0)

    def compact(self, rel_threshold: float = PRUNE_REL) -> "DiscreteMeasure":
        """Drop weights below ``rel_threshold`` times the total mass."""
        keep = self.weights > rel_threshold * self.total_mass
        return self.restrict(np.flatnonzero(keep))

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, self.weights * factor, dict(self.meta))

    # -- I/O ---------------------------------------------------------------

    def to_json_obj(self) -> dict:
        pts = self.points
        return {
            "points": pts.tolist(),
            "weights": self.weights.tolist(),
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "DiscreteMeasure":
        return DiscreteMeasure(np.asarray(obj["points"]), np.asarray(obj["weights"], dtype=float))

    @staticmethod
    def from_csv(path) -> "DiscreteMeasure":
        """One row per point, final column is the weight."""
        pts = []
        ws = []
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or all(not c.strip() for c in row):
                    continue
                try:
                    vals = [float(c) for c in row]
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: non-numeric entry ({exc})") from exc
                if len(vals) < 2:
                    raise ValueError(f"{path}:{lineno}: need at least one coordinate and a weight")
                pts.append(vals[:-1])
                ws.append(vals[-1])
        points = np.asarray(pts)
        if points.shape[1] == 1:
            points = points[:, 0]
        return DiscreteMeasure(points, np.asarray(ws))

    def to_csv(self, path):
        pts = self.points if self.points.ndim > 1 else self.points[:, None]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for p, w in zip(pts, self.weights):
                writer.writerow([repr(float(v)) for v in p] + [repr(float(w))])


def uniform_grid_measure(
    a: float, b: float, m: int, mass: float | None = None, midpoint: bool = False
) -> DiscreteMeasure:
    """Uniform grid on [a, b] with equal weights summing to ``mass``.

    By default the mass is b - a, the length of the interval, so the
    measure is the Riemann-sum stand-in for the Lebesgue measure.  With
    ``midpoint=True`` the points sit at cell centers, which makes the
    equal-weight sum a composite midpoint rule (second-order accurate
    for smooth integrands).
    """
    if midpoint:
        h = (b - a) / m
        points = a + h * (np.arange(m) + 0.5)
    else:
        points = np.linspace(a, b, m)
    total = (b - a) if mass is None else mass
    return DiscreteMeasure(points, np.full(m, total / m))


@dataclass(frozen=True)
class MomentVector:
    """Vector of weighted sums of the basis functions."""

    entries: np.ndarray
    field: str

    def __post_init__(self):
        e = np.asarray(self.entries)
        if not np.all(np.isfinite(np.abs(e))):
            raise ValueError("non-finite moment entries")
        object.__setattr__(self, "entries", e)


def moments(system: FunctionSystem, mu: DiscreteMeasure) -> MomentVector:
    """Weighted sums sum_j w_j phi_k(x_j), one entry per basis function.

    Uses compensated summation so that fine grids with many near-equal
    contributions do not lose digits.
    """
    emat = evaluate(system, mu.points)
    w = mu.weights
    if system.field == COMPLEX:
        re = np.array([math.fsum(row.real * w) for row in emat.entries])
        im = np.array([math.fsum(row.imag * w) for row in emat.entries])
        return MomentVector(re + 1j * im, COMPLEX)
    vals = np.array([math.fsum(row * w) for row in emat.entries])
    return MomentVector(vals, system.field)


@dataclass(frozen=True)
class Sampler:
    """Random point source standing in for a continuous measure.

    ``draw(rng, m)`` returns m points; ``total_mass`` is the mass the
    sampled measure should carry; ``density`` (optional) maps points to
    the sampling density relative to the represented base measure and is
    recorded in the sampled measure's metadata for reweighting.
    """

    draw: Callable[[np.random.Generator, int], np.ndarray]
    total_mass: float = 1.0
    density: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "sampler"


def uniform_sampler(a: float, b: float, mass: float = 1.0) -> Sampler:
    return Sampler(
        draw=lambda rng, m: rng.uniform(a, b, size=m),
        total_mass=mass,
        name=f"uniform[{a},{b}]",
    )


def atom_sampler(base: DiscreteMeasure, density_values=None, name: str = "atoms") -> Sampler:
    """Draw atoms of a discrete measure, optionally tilted by a density.

    With ``density_values`` given (one value per atom, relative to the
    base measure), atom i is drawn with probability proportional to
    w_i * density_values[i]; the density at the drawn points is recorded
    so callers can reweight.
    """
    w = base.weights / base.total_mass
    if density_values is None:
        probs = w
        dens = None
    else:
        density_values = np.asarray(density_values, dtype=float)
        probs = w * density_values
        probs = probs / probs.sum()
        dens = density_values

    def draw(rng, m):
        idx = rng.choice(len(base), size=m, p=probs)
        return base.points[idx] if base.points.ndim == 1 else base.points[idx, :]

    density = _grid_density(base, dens) if dens is not None else None
    return Sampler(draw=draw, total_mass=base.total_mass, density=density, name=name)


def _grid_density(base: DiscreteMeasure, density_values: np.ndarray):
    pts = base.points

    def density(x):
        x = np.asarray(x)
        if pts.ndim == 1:
            idx = np.searchsorted(pts, x)
            idx = np.clip(idx, 0, len(pts) - 1)
            left = np.clip(idx - 1, 0, len(pts) - 1)
            use_left = np.abs(pts[left] - x) < np.abs(pts[idx] - x)
            idx = np.where(use_left, left, idx)
            return density_values[idx]
        raise EvaluationError("density lookup implemented for 1-D grids only")

    return density


def sample_measure(sampler: Sampler, m: int, seed: int) -> DiscreteMeasure:
    """Draw m iid points, each carrying weight total_mass / m.

    Deterministic for a fixed seed.  If the sampler exposes a density,
    its values at the drawn points land in the measure's metadata under
    ``"density"``.
    """
    if m < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    points = np.asarray(sampler.draw(rng, m))
    meta = {"seed": seed, "sampler": sampler.name}
    if sampler.density is not None:
        meta["density"] = np.asarray(sampler.density(points), dtype=float)
    return DiscreteMeasure(points, np.full(m, sampler.total_mass / m), meta)
