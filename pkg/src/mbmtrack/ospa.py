"""Optimal sub-pattern assignment (OSPA) distance between finite state sets.

The metric combines a localization term (optimal one-to-one matching of the
smaller set into the larger, with per-pair distances cut off at ``c``) and a
cardinality term charging ``c`` per unmatched element. Base distances are
Euclidean on planar positions; 4-d state inputs use their position
coordinates and velocities are ignored.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment


def euclidean_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distance matrix between position arrays."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff**2, axis=-1))


@dataclass(frozen=True)
class OspaParams:
    cutoff: float = 10.0
    order: float = 2.0
    base_distance: Callable[[np.ndarray, np.ndarray], np.ndarray] = euclidean_distances

    def __post_init__(self):
        if self.cutoff <= 0.0:
            raise ValueError("cutoff must be positive")
        if self.order < 1.0:
            raise ValueError("order must be at least 1")


class OspaDistance(NamedTuple):
    total: float
    localization: float
    cardinality: float


def optimal_assignment(costs: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimum-cost perfect matching on a square cost matrix.

    Returns the permutation ``perm`` (row ``i`` matched to column
    ``perm[i]``) and the minimal total cost.

    Raises:
        ValueError: for non-square or non-finite input.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
        raise ValueError("assignment requires a square cost matrix")
    if not np.all(np.isfinite(costs)):
        raise ValueError("assignment requires finite costs")
    rows, cols = linear_sum_assignment(costs)
    perm = np.empty(costs.shape[0], dtype=int)
    perm[rows] = cols
    return perm, float(costs[rows, cols].sum())


def _positions(states) -> np.ndarray:
    states = np.asarray(states, dtype=float)
    if states.size == 0:
        return np.empty((0, 2))
    states = np.atleast_2d(states)
    if states.shape[1] == 4:
        return states[:, [0, 2]]
    if states.shape[1] == 2:
        return states
    raise ValueError("states must be 4-d state vectors or 2-d positions")


def ospa_distance(x, y, params: OspaParams = OspaParams()) -> OspaDistance:
    """OSPA distance and its localization/cardinality decomposition.

    Accepts state sets as arrays of shape (n, 4) or (n, 2) (possibly empty).
    Two empty sets are at distance zero; otherwise, with the smaller set of
    size ``n`` and the larger of size ``m``::

        total^p = ( min-cost matching of cutoff-clipped distances^p
                    + cutoff^p * (m - n) ) / m

    and the two summands give the localization and cardinality terms.
    """
    a, b = _positions(x), _positions(y)
    if a.shape[0] > b.shape[0]:
        a, b = b, a
    n, m = a.shape[0], b.shape[0]
    if m == 0:
        return OspaDistance(0.0, 0.0, 0.0)
    c, p = params.cutoff, params.order
    loc_cost = 0.0
    if n > 0:
        clipped = np.minimum(params.base_distance(a, b), c) ** p
        # dummy rows at c^p reproduce the cardinality charge for unmatched columns
        padded = np.full((m, m), c**p)
        padded[:n, :] = clipped
        perm, _ = optimal_assignment(padded)
        loc_cost = float(clipped[np.arange(n), perm[:n]].sum())
    card_cost = (m - n) * c**p
    total = ((loc_cost + card_cost) / m) ** (1.0 / p)
    localization = (loc_cost / m) ** (1.0 / p)
    cardinality = (card_cost / m) ** (1.0 / p)
    return OspaDistance(float(total), float(localization), float(cardinality))
