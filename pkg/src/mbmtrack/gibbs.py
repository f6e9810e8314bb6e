"""Gibbs sampling over target-to-measurement associations.

An association for ``n`` targets and ``m`` measurements is an n-tuple of
integers in ``{0, ..., m}``; entry ``i`` names the measurement explaining
target ``i`` (0 means missed), and positive entries are pairwise distinct.
Each sweep redraws one entry at a time from its conditional distribution,
which is proportional to the per-target contribution factors collected in a
cost matrix; the distinct associations visited become the retained posterior
hypotheses. An exhaustive enumerator doubles as the test oracle for small
problems.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .mbm import CostMatrix

Association = tuple[int, ...]

ENUMERATION_GUARD = 1_000_000


@dataclass(frozen=True)
class GibbsConfig:
    """Sampler knobs: retained-hypothesis budget, burn-in, start rule."""

    max_hypotheses: int = 100
    burn_in: int = 0
    init: str = "all_miss"

    def __post_init__(self):
        if self.max_hypotheses < 1:
            raise ValueError("max_hypotheses must be at least 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.init != "all_miss":
            raise ValueError(f"unknown initialization rule {self.init!r}")


def is_valid_association(theta: Association, n: int, m: int) -> bool:
    """True when entries lie in {0, ..., m} and positive entries are distinct."""
    if len(theta) != n:
        return False
    positives = [j for j in theta if j != 0]
    return all(0 <= j <= m for j in theta) and len(positives) == len(set(positives))


def association_count(n: int, m: int) -> int:
    """Number of valid associations: sum_j C(n,j) C(m,j) j!."""
    return sum(
        math.comb(n, j) * math.comb(m, j) * math.factorial(j)
        for j in range(min(n, m) + 1)
    )


def exhaustive_associations(n: int, m: int) -> list[Association]:
    """Enumerate every valid association (test oracle; guarded for size).

    Raises:
        ValueError: when the association count exceeds the enumeration guard.
    """
    total = association_count(n, m)
    if total > ENUMERATION_GUARD:
        raise ValueError(f"{total} associations exceed the enumeration guard")
    out: list[Association] = []
    for j in range(min(n, m) + 1):
        for detected in combinations(range(n), j):
            for assigned in permutations(range(1, m + 1), j):
                theta = [0] * n
                for target, measurement in zip(detected, assigned):
                    theta[target] = measurement
                out.append(tuple(theta))
    return out


def gibbs_conditional(
    i: int, theta_rest: Association, cost: "CostMatrix"
) -> np.ndarray:
    """Conditional distribution of entry ``i`` given the other entries.

    Returns probabilities over ``{0, ..., m}``: zero for measurements already
    claimed by another target, otherwise proportional to the corresponding
    contribution factor.

    Raises:
        ValueError: if every feasible option has zero contribution.
    """
    taken = {j for j in theta_rest if j != 0}
    log_row = np.concatenate(([cost.log_miss[i]], cost.log_detect[i]))
    if taken:
        log_row[list(taken)] = -np.inf
    peak = log_row.max()
    if peak == -np.inf:
        raise ValueError("no feasible assignment for target")
    probs = np.exp(log_row - peak)
    return probs / probs.sum()


def _linear_rows(cost: "CostMatrix") -> list[list[float]]:
    # Per-target rows [miss, z1, ..., zm], each shifted by its own max so the
    # exponentials stay in range; infeasible entries become exactly 0.0.
    rows = []
    for i in range(cost.n):
        log_row = np.concatenate(([cost.log_miss[i]], cost.log_detect[i]))
        peak = log_row.max()
        if peak == -np.inf:
            raise ValueError("no feasible assignment for target")
        rows.append(np.exp(log_row - peak).tolist())
    return rows


def gibbs_chain(
    cost: "CostMatrix",
    sweeps: int,
    config: GibbsConfig,
    rng: np.random.Generator,
) -> list[Association]:
    """Run the sampler and return the association visited after each sweep.

    The chain starts at the all-miss association, entries are redrawn in the
    fixed order ``i = 0..n-1`` within a sweep, and the first ``burn_in``
    sweeps are discarded.
    """
    if sweeps < 1:
        raise ValueError("need at least one sweep")
    n, m = cost.n, cost.m
    if n == 0:
        return [()] * sweeps
    rows = _linear_rows(cost)
    theta = [0] * n
    in_use = [False] * (m + 1)
    total_sweeps = config.burn_in + sweeps
    uniforms = rng.random((total_sweeps, n))
    visited: list[Association] = []
    for sweep in range(total_sweeps):
        for i in range(n):
            current = theta[i]
            if current:
                in_use[current] = False
            row = rows[i]
            mass = row[0]
            for j in range(1, m + 1):
                if not in_use[j]:
                    mass += row[j]
            if mass <= 0.0:
                raise ValueError("no feasible assignment for target")
            u = uniforms[sweep, i] * mass
            acc = row[0]
            pick = 0
            if acc <= u:
                for j in range(1, m + 1):
                    if in_use[j]:
                        continue
                    acc += row[j]
                    if acc > u:
                        pick = j
                        break
            theta[i] = pick
            if pick:
                in_use[pick] = True
        if sweep >= config.burn_in:
            visited.append(tuple(theta))
    return visited


def gibbs_sample(
    cost: "CostMatrix",
    k: int,
    config: GibbsConfig,
    rng: np.random.Generator,
) -> list[Association]:
    """Distinct associations from ``k`` recorded sweeps, in discovery order."""
    return list(dict.fromkeys(gibbs_chain(cost, k, config, rng)))
