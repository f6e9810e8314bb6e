"""State extraction from the mixture posterior and the pruning rules that
keep the hypothesis tree bounded.

Per scan the tracker runs: update, prune low-weight hypotheses, prune
components whose weight-marginal existence is negligible (keeping component
counts equal across hypotheses), extract states from the highest-weight
hypothesis, then predict.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import GlobalHypothesis, MbmDensity, normalize_weights, weighted_mean


@dataclass(frozen=True)
class FilterParams:
    """Tracker configuration with the benchmark defaults."""

    n_h_max: int = 100
    target_prune: float = 1e-5
    hyp_prune: float = 1e-5
    extract_threshold: float = 0.5
    particles_per_target: int = 1000
    gibbs_burn_in: int = 0

    def __post_init__(self):
        if self.n_h_max < 1 or self.particles_per_target < 1:
            raise ValueError("hypothesis and particle budgets must be at least 1")
        for name in ("target_prune", "hyp_prune", "extract_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.gibbs_burn_in < 0:
            raise ValueError("gibbs_burn_in must be nonnegative")


@dataclass(frozen=True)
class StateEstimate:
    """Extracted target states for one scan."""

    states: np.ndarray = field(default_factory=lambda: np.empty((0, 4)))
    source_hypothesis: int | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "states", np.asarray(self.states, dtype=float).reshape(-1, 4)
        )

    @property
    def cardinality(self) -> int:
        return self.states.shape[0]


def select_map_hypothesis(density: MbmDensity) -> int:
    """Index of the highest-weight hypothesis; ties go to the lowest index."""
    return int(np.argmax(density.weights))


def extract_states(density: MbmDensity, params: FilterParams) -> StateEstimate:
    """Mean states of sufficiently certain components in the MAP hypothesis.

    A component contributes its cloud's weighted mean iff its existence
    probability strictly exceeds ``extract_threshold``.
    """
    map_index = select_map_hypothesis(density)
    hypothesis = density.hypotheses[map_index]
    states = [
        weighted_mean(comp.cloud)
        for comp in hypothesis.components
        if comp.existence > params.extract_threshold
    ]
    stacked = np.array(states) if states else np.empty((0, 4))
    return StateEstimate(states=stacked, source_hypothesis=map_index)


def prune_components(density: MbmDensity, params: FilterParams) -> MbmDensity:
    """Drop components that are negligible under the whole mixture.

    Component slot ``i`` is removed from every hypothesis iff its
    weight-marginal existence ``sum_h w_h r_{h,i}`` falls strictly below
    ``target_prune``; survivors keep their relative order and hypothesis
    weights are untouched, so all hypotheses keep identical component counts.
    """
    count = density.component_count()
    if count == 0:
        return density
    weights = density.weights
    marginals = np.zeros(count)
    for w, hyp in zip(weights, density.hypotheses):
        marginals += w * np.array([c.existence for c in hyp.components])
    keep = marginals >= params.target_prune
    if keep.all():
        return density
    return MbmDensity(
        hypotheses=tuple(
            GlobalHypothesis(
                weight=hyp.weight,
                components=tuple(
                    comp for comp, kept in zip(hyp.components, keep) if kept
                ),
            )
            for hyp in density.hypotheses
        )
    )


def prune_hypotheses(density: MbmDensity, params: FilterParams) -> MbmDensity:
    """Drop hypotheses below the weight threshold and renormalize.

    The highest-weight hypothesis always survives, so the density stays
    nonempty and the estimator keeps a source.
    """
    weights = density.weights
    map_index = select_map_hypothesis(density)
    keep = [
        i for i, w in enumerate(weights) if w >= params.hyp_prune or i == map_index
    ]
    if len(keep) == len(density.hypotheses):
        kept = density.hypotheses
    else:
        kept = tuple(density.hypotheses[i] for i in keep)
    new_weights = normalize_weights([h.weight for h in kept])
    return MbmDensity(
        hypotheses=tuple(
            GlobalHypothesis(weight=float(w), components=h.components)
            for w, h in zip(new_weights, kept)
        )
    )
