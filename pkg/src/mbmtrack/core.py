"""Particle containers for multi-Bernoulli mixture densities and the weight
utilities (normalization, systematic resampling, weighted statistics) shared
by every filter in the package.

All containers are immutable value objects: arrays are copied on construction
and marked read-only. Operations are pure given their random stream, so the
types are safe to share across threads as long as each thread owns its own
``numpy.random.Generator``.

State vectors are ``[px, vx, py, vy]`` (positions in m, velocities in m/s).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STATE_DIM = 4


def _frozen_array(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.flags.writeable = False
    return out


def normalize_weights(weights) -> np.ndarray:
    """Scale nonnegative weights so they sum to one, preserving order.

    The sum is taken after dividing by the largest entry, so vectors whose
    entries sit near the denormal floor (e.g. products of many small
    likelihoods) normalize without underflowing.

    Raises:
        ValueError: if the vector is empty, contains negative or non-finite
            entries, or sums to zero ("degenerate weight vector").
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("degenerate weight vector: empty or not 1-d")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise ValueError("degenerate weight vector: negative or non-finite entries")
    peak = float(w.max())
    if peak <= 0.0:
        raise ValueError("degenerate weight vector: all entries zero")
    scaled = w / peak
    return scaled / scaled.sum()


@dataclass(frozen=True)
class Particle:
    """One weighted single-target state sample."""

    state: np.ndarray
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "state", _frozen_array(self.state))
        if self.state.shape != (STATE_DIM,) or not np.all(np.isfinite(self.state)):
            raise ValueError(f"particle state must be a finite {STATE_DIM}-vector")
        if not np.isfinite(self.weight) or self.weight < 0.0:
            raise ValueError("particle weight must be finite and nonnegative")


@dataclass(frozen=True)
class ParticleCloud:
    """A weighted set of state samples approximating one target density.

    ``states`` has shape ``(n, 4)`` and ``weights`` shape ``(n,)``. Clouds
    produced by the filters always carry equal weights summing to one
    (resampling restores that after every reweighting step).
    """

    states: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        object.__setattr__(self, "states", _frozen_array(states))
        object.__setattr__(self, "weights", _frozen_array(self.weights))
        if self.states.ndim != 2 or self.states.shape[1] != STATE_DIM:
            raise ValueError(f"cloud states must have shape (n, {STATE_DIM})")
        if self.weights.shape != (self.states.shape[0],):
            raise ValueError("cloud weights must match the number of states")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("cloud states must be finite")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0.0):
            raise ValueError("cloud weights must be finite and nonnegative")

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def particles(self) -> list[Particle]:
        return [Particle(s, float(w)) for s, w in zip(self.states, self.weights)]

    @classmethod
    def from_particles(cls, particles) -> "ParticleCloud":
        return cls(
            states=np.array([p.state for p in particles], dtype=float),
            weights=np.array([p.weight for p in particles], dtype=float),
        )

    @classmethod
    def equal_weighted(cls, states) -> "ParticleCloud":
        states = np.atleast_2d(np.asarray(states, dtype=float))
        n = states.shape[0]
        return cls(states=states, weights=np.full(n, 1.0 / n))

    def normalized(self) -> "ParticleCloud":
        return ParticleCloud(self.states, normalize_weights(self.weights))


def weighted_mean(cloud: ParticleCloud) -> np.ndarray:
    """Weight-averaged state of a cloud (assumes normalized weights)."""
    if len(cloud) == 0:
        raise ValueError("cannot average an empty cloud")
    return cloud.weights @ cloud.states


def systematic_resample(
    cloud: ParticleCloud, count: int, rng: np.random.Generator
) -> ParticleCloud:
    """Resample ``count`` equally weighted particles with the systematic scheme.

    A single uniform offset ``u`` places ``count`` evenly spaced pointers on
    the cumulative weight axis, so ancestor ``j`` is copied either
    ``floor(count * W_j)`` or ``ceil(count * W_j)`` times. Zero-weight
    particles may receive zero copies.

    Raises:
        ValueError: for ``count < 1`` or a degenerate (all-zero-weight) cloud.
    """
    if count < 1:
        raise ValueError("resample count must be at least 1")
    if len(cloud) == 0:
        raise ValueError("cannot resample an empty cloud")
    total = float(cloud.weights.sum())
    if total <= 0.0 or not np.isfinite(total):
        raise ValueError("degenerate cloud: weights sum to zero or are non-finite")
    cumulative = np.cumsum(cloud.weights) / total
    cumulative[-1] = 1.0  # guard against round-off shortfall at the tail
    positions = (np.arange(count) + rng.random()) / count
    ancestors = np.searchsorted(cumulative, positions, side="right")
    return ParticleCloud(
        states=cloud.states[ancestors], weights=np.full(count, 1.0 / count)
    )


@dataclass(frozen=True)
class BernoulliComponent:
    """A potential target: existence probability plus a particle cloud."""

    existence: float
    cloud: ParticleCloud

    def __post_init__(self):
        if not (0.0 <= self.existence <= 1.0) or not np.isfinite(self.existence):
            raise ValueError("existence probability must lie in [0, 1]")


@dataclass(frozen=True)
class GlobalHypothesis:
    """One association history: a weight and an ordered component list."""

    weight: float
    components: tuple[BernoulliComponent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not np.isfinite(self.weight) or self.weight < 0.0:
            raise ValueError("hypothesis weight must be finite and nonnegative")


@dataclass(frozen=True)
class MbmDensity:
    """Normalized mixture of global hypotheses over multi-Bernoulli terms."""

    hypotheses: tuple[GlobalHypothesis, ...]

    def __post_init__(self):
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        if len(self.hypotheses) == 0:
            raise ValueError("an MBM density needs at least one hypothesis")

    @property
    def weights(self) -> np.ndarray:
        return np.array([h.weight for h in self.hypotheses])

    def component_count(self) -> int:
        return len(self.hypotheses[0].components)


def empty_density() -> MbmDensity:
    """The no-target density: a single unit-weight hypothesis, no components."""
    return MbmDensity(hypotheses=(GlobalHypothesis(weight=1.0),))


def validate_density(density: MbmDensity, atol: float = 1e-9) -> None:
    """Check every structural invariant of an MBM density.

    Verifies hypothesis weights are nonnegative and sum to one, component
    counts agree across hypotheses, existence probabilities lie in [0, 1],
    and every cloud carries finite states with weights summing to one.

    Raises:
        ValueError: naming the first violated invariant.
    """
    weights = density.weights
    if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
        raise ValueError("hypothesis weights must be finite and nonnegative")
    if abs(float(weights.sum()) - 1.0) > atol:
        raise ValueError(f"hypothesis weights sum to {weights.sum()}, expected 1")
    counts = {len(h.components) for h in density.hypotheses}
    if len(counts) > 1:
        raise ValueError(f"hypotheses disagree on component count: {sorted(counts)}")
    for h_idx, hyp in enumerate(density.hypotheses):
        for c_idx, comp in enumerate(hyp.components):
            if not (0.0 <= comp.existence <= 1.0):
                raise ValueError(
                    f"existence out of [0, 1] at hypothesis {h_idx}, component {c_idx}"
                )
            if len(comp.cloud) == 0:
                raise ValueError(
                    f"empty cloud at hypothesis {h_idx}, component {c_idx}"
                )
            if abs(float(comp.cloud.weights.sum()) - 1.0) > atol:
                raise ValueError(
                    f"cloud weights not normalized at hypothesis {h_idx}, "
                    f"component {c_idx}"
                )
