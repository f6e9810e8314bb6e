"""Sequential Monte Carlo PHD filter, the comparison baseline.

The target intensity is carried by one weighted particle set whose total
mass approximates the expected target count. Weights are never normalized
to one: prediction scales them by survival probability and injects low-mass
birth particles, the corrector splits each particle's mass between the
missed-detection event and the measurements, and resampling redraws a
mass-proportional particle budget while preserving the total mass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ParticleCloud, systematic_resample
from .mbm import CLUTTER_DENSITY_FLOOR
from .models import (
    ModelSet,
    measurement_likelihood,
    sample_birth_particles,
    transition_sample,
)


@dataclass(frozen=True)
class PhdParams:
    """Baseline configuration: particle budget and birth mass."""

    particles_per_target: int = 1000
    birth_mass: float = 1e-5
    max_targets_budget: int = 16
    kmeans_restarts: int = 10
    kmeans_iterations: int = 50

    def __post_init__(self):
        if self.particles_per_target < 1:
            raise ValueError("particles_per_target must be at least 1")
        if self.birth_mass < 0.0:
            raise ValueError("birth_mass must be nonnegative")
        if self.max_targets_budget < 1 or self.kmeans_restarts < 1:
            raise ValueError("budget and restart counts must be at least 1")


@dataclass(frozen=True)
class PhdParticleSet:
    """Weighted particles approximating the target intensity."""

    states: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float).reshape(-1, 4)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)
        if self.weights.shape[0] != self.states.shape[0]:
            raise ValueError("one weight per particle required")
        if np.any(self.weights < 0.0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("states must be finite")

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def mass(self) -> float:
        """Expected target count under this intensity."""
        return float(self.weights.sum())


def empty_phd() -> PhdParticleSet:
    return PhdParticleSet(states=np.empty((0, 4)), weights=np.empty(0))


def phd_predict(
    particles: PhdParticleSet,
    models: ModelSet,
    params: PhdParams,
    rng: np.random.Generator,
) -> PhdParticleSet:
    """Propagate survivors and inject birth particles.

    Surviving particles keep their identity with weight scaled by the
    survival probability; each birth component contributes
    ``particles_per_target`` fresh particles carrying ``birth_mass`` in total.
    """
    states = [np.empty((0, 4))]
    weights = [np.empty(0)]
    if len(particles) > 0:
        p_s = models.detection.survival_prob(particles.states)
        states.append(transition_sample(particles.states, models.motion, rng))
        weights.append(particles.weights * p_s)
    for b in range(len(models.birth)):
        cloud = sample_birth_particles(
            b, models.birth, models.motion, params.particles_per_target, rng
        )
        states.append(cloud.states)
        weights.append(np.full(len(cloud), params.birth_mass / len(cloud)))
    return PhdParticleSet(
        states=np.concatenate(states), weights=np.concatenate(weights)
    )


def phd_update(
    particles: PhdParticleSet, measurements: np.ndarray, models: ModelSet
) -> PhdParticleSet:
    """Standard PHD corrector.

    Each particle keeps ``(1 - p_d)`` of its mass for the missed-detection
    event and receives, per measurement, its share of that measurement's
    unit posterior mass, discounted by the clutter density in the
    denominator.
    """
    if len(particles) == 0:
        return particles
    measurements = np.asarray(measurements, dtype=float).reshape(-1, 2)
    p_d = models.detection.detection_prob(particles.states)
    clutter_density = max(models.clutter.density, CLUTTER_DENSITY_FLOOR)
    new_weights = (1.0 - p_d) * particles.weights
    for z in measurements:
        detected_mass = p_d * measurement_likelihood(z, particles.states, models.measurement)
        detected_mass = detected_mass * particles.weights
        new_weights = new_weights + detected_mass / (clutter_density + detected_mass.sum())
    return PhdParticleSet(states=particles.states, weights=new_weights)


def phd_resample(
    particles: PhdParticleSet, params: PhdParams, rng: np.random.Generator
) -> PhdParticleSet:
    """Redraw a mass-proportional particle budget, preserving total mass.

    The budget is ``particles_per_target`` per estimated target, floored at
    one target's worth (so low-mass stretches keep support) and capped at
    ``max_targets_budget`` targets.
    """
    mass = particles.mass
    if len(particles) == 0 or mass <= 0.0:
        return empty_phd()
    targets = min(max(1, int(math.floor(mass + 0.5))), params.max_targets_budget)
    count = targets * params.particles_per_target
    cloud = systematic_resample(
        ParticleCloud(particles.states, particles.weights / mass), count, rng
    )
    return PhdParticleSet(
        states=cloud.states, weights=np.full(count, mass / count)
    )


def _weighted_kmeans(
    positions: np.ndarray,
    weights: np.ndarray,
    k: int,
    params: PhdParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Lloyd's algorithm with weighted centroids; returns member labels."""
    probs = weights / weights.sum()
    best_labels = None
    best_inertia = np.inf
    for _ in range(params.kmeans_restarts):
        seed_idx = rng.choice(len(positions), size=k, replace=True, p=probs)
        centers = positions[seed_idx]
        labels = np.zeros(len(positions), dtype=int)
        for _ in range(params.kmeans_iterations):
            sq = np.sum((positions[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
            labels = np.argmin(sq, axis=1)
            moved = 0.0
            for c in range(k):
                member = labels == c
                cluster_mass = weights[member].sum()
                if cluster_mass <= 0.0:
                    continue
                new_center = weights[member] @ positions[member] / cluster_mass
                moved = max(moved, float(np.max(np.abs(new_center - centers[c]))))
                centers[c] = new_center
            if moved < 1e-9:
                break
        sq = np.sum((positions[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
        labels = np.argmin(sq, axis=1)
        inertia = float(weights @ sq[np.arange(len(positions)), labels])
        if inertia < best_inertia:
            best_inertia = inertia
            best_labels = labels
    return best_labels


def phd_estimate(
    particles: PhdParticleSet, params: PhdParams, rng: np.random.Generator
) -> np.ndarray:
    """Extract target states: round the mass, cluster, return cluster means.

    Particles are clustered on positions by weighted k-means (seeded, with
    restarts); each cluster contributes the weighted mean of its members'
    full state vectors. Returns an array of shape (n_estimates, 4).
    """
    count = int(math.floor(particles.mass + 0.5))
    if count <= 0 or len(particles) == 0:
        return np.empty((0, 4))
    positions = particles.states[:, [0, 2]]
    labels = _weighted_kmeans(positions, particles.weights, count, params, rng)
    estimates = []
    for c in range(count):
        member = labels == c
        cluster_mass = particles.weights[member].sum()
        if cluster_mass <= 0.0:
            continue
        estimates.append(
            particles.weights[member] @ particles.states[member] / cluster_mass
        )
    return np.array(estimates) if estimates else np.empty((0, 4))
