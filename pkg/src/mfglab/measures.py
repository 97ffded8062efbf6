"""Empirical probability measures with uniform weights.

Only one class of measures is supported: uniform sums of n Dirac masses in
R^d, stored as an ordered (n, d) float array.  The order is meaningful — a
measure doubles as the state vector of n labelled particles — but every
law-level quantity (distances, moments) must be invariant under permuting
the points.  Sums are accumulated with ``math.fsum`` so that invariance
holds exactly, not just to rounding.

Wasserstein-2 distances between equal-count uniform empirical measures are
exact: the optimal coupling is a permutation, found either by sorting (1D)
or by an O(n^3) optimal-assignment solve.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError, NumericsError


def _stable_sum(values) -> float:
    """Order-independent (correctly rounded) sum of a float iterable."""
    return math.fsum(np.asarray(values, dtype=float).ravel())


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """n uniformly weighted points in R^d, kept in a fixed order."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidInputError("points must form a nonempty (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("points must be finite")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_json(self) -> str:
        """JSON array of point arrays, order preserved."""
        return json.dumps([[float(c) for c in p] for p in self.points])

    @staticmethod
    def from_json(text: str) -> "EmpiricalMeasure":
        return EmpiricalMeasure(np.asarray(json.loads(text), dtype=float))

    def to_csv(self, path) -> None:
        """CSV export with columns index,x_1..x_d."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index"] + [f"x_{k + 1}" for k in range(self.dim)])
            for i, p in enumerate(self.points):
                writer.writerow([i] + [format(float(c), ".17g") for c in p])


def measure(points) -> EmpiricalMeasure:
    """Convenience constructor accepting (n,), (n, d) or nested lists."""
    return EmpiricalMeasure(np.asarray(points, dtype=float))


def w2_sorted_1d(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """W_2 between 1D equal-count measures via monotone (sorted) matching."""
    if mu.dim != 1 or nu.dim != 1:
        raise InvalidInputError("w2_sorted_1d requires 1-dimensional measures")
    if mu.n != nu.n:
        raise InvalidInputError(f"point counts differ: {mu.n} vs {nu.n}")
    a = np.sort(mu.points[:, 0])
    b = np.sort(nu.points[:, 0])
    return math.sqrt(_stable_sum((a - b) ** 2) / mu.n)


def w2_assignment(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Exact W_2 between equal-count measures via optimal assignment.

    Solves the square assignment problem on squared Euclidean costs
    (cubic-time, exact); for uniform empirical measures with equal n the
    optimal coupling is a permutation, so this equals the Wasserstein-2
    distance exactly.
    """
    if mu.dim != nu.dim:
        raise InvalidInputError(f"dimensions differ: {mu.dim} vs {nu.dim}")
    if mu.n != nu.n:
        raise InvalidInputError(f"point counts differ: {mu.n} vs {nu.n}")
    diff = mu.points[:, None, :] - nu.points[None, :, :]
    cost = np.einsum("ijk,ijk->ij", diff, diff)
    rows, cols = linear_sum_assignment(cost)
    return math.sqrt(_stable_sum(cost[rows, cols]) / mu.n)


def push_forward(m: EmpiricalMeasure, f: Callable[[np.ndarray], np.ndarray]) -> EmpiricalMeasure:
    """Pointwise image measure f#m, preserving order and count."""
    images = [np.atleast_1d(np.asarray(f(p), dtype=float)) for p in m.points]
    out = np.stack(images)
    if not np.all(np.isfinite(out)):
        raise NumericsError("map produced non-finite values under push_forward")
    return EmpiricalMeasure(out)


def second_moment(m: EmpiricalMeasure) -> float:
    """(1/n) sum of squared Euclidean norms of the points."""
    return _stable_sum(m.points**2) / m.n
