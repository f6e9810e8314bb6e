"""Single-target motion and range-bearing measurement models, detection and
survival probabilities, Poisson clutter, and the multi-Bernoulli birth model.

Defaults throughout match the bundled benchmark scenario: a nearly constant
velocity target observed by a noisy range-bearing sensor watching the box
[-50, 50] x [0, 100] m.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .core import ParticleCloud, _frozen_array

TWO_PI = 2.0 * math.pi

StateProbability = Union[float, Callable[[np.ndarray], np.ndarray]]


def wrap_angle(angle):
    """Wrap angles (scalar or array) into (-pi, pi]."""
    wrapped = np.mod(angle, TWO_PI)
    wrapped = np.where(wrapped > math.pi, wrapped - TWO_PI, wrapped)
    return wrapped if np.ndim(angle) else float(wrapped)


@dataclass(frozen=True)
class MotionModel:
    """Nearly constant velocity dynamics with per-axis acceleration noise."""

    period: float = 1.0
    accel_variances: np.ndarray = (4e-6, 4e-6)

    def __post_init__(self):
        object.__setattr__(
            self, "accel_variances", _frozen_array(self.accel_variances)
        )
        if self.period <= 0.0:
            raise ValueError("sampling period must be positive")
        if self.accel_variances.shape != (2,) or np.any(self.accel_variances < 0.0):
            raise ValueError("need one nonnegative acceleration variance per axis")

    @property
    def transition_matrix(self) -> np.ndarray:
        t = self.period
        return np.array(
            [[1.0, t, 0.0, 0.0],
             [0.0, 1.0, 0.0, 0.0],
             [0.0, 0.0, 1.0, t],
             [0.0, 0.0, 0.0, 1.0]]
        )

    @property
    def noise_gain(self) -> np.ndarray:
        """Maps per-axis acceleration noise into the 4-d state."""
        t = self.period
        half_t2 = 0.5 * t * t
        return np.array(
            [[half_t2, 0.0],
             [t, 0.0],
             [0.0, half_t2],
             [0.0, t]]
        )


def transition_deterministic(state, model: MotionModel) -> np.ndarray:
    """Noise-free constant velocity step; accepts one state or a batch."""
    state = np.asarray(state, dtype=float)
    return state @ model.transition_matrix.T


def transition_sample(state, model: MotionModel, rng: np.random.Generator) -> np.ndarray:
    """Constant velocity step plus sampled acceleration noise."""
    state = np.asarray(state, dtype=float)
    noise_shape = state.shape[:-1] + (2,)
    accel = rng.standard_normal(noise_shape) * np.sqrt(model.accel_variances)
    return transition_deterministic(state, model) + accel @ model.noise_gain.T


@dataclass(frozen=True)
class MeasurementModel:
    """Independent Gaussian noise on measured range (m) and bearing (rad)."""

    range_variance: float = 0.25
    bearing_variance: float = 0.09

    def __post_init__(self):
        if self.range_variance <= 0.0 or self.bearing_variance <= 0.0:
            raise ValueError("measurement noise variances must be positive")


def range_bearing(px, py) -> np.ndarray:
    """Convert Cartesian positions to (range, bearing); vectorized.

    Bearing uses the four-quadrant arctangent, so trajectories crossing the
    y axis stay continuous; results lie in (-pi, pi].
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    return np.stack([np.hypot(px, py), np.arctan2(py, px)], axis=-1)


def measure(state) -> np.ndarray:
    """Noise-free range-bearing observation of one state vector.

    Raises:
        ValueError: if the position is at the sensor origin (bearing undefined).
    """
    state = np.asarray(state, dtype=float)
    px, py = state[0], state[2]
    if px == 0.0 and py == 0.0:
        raise ValueError("bearing undefined at the sensor origin")
    return range_bearing(px, py)


def measurement_likelihood(z, state, model: MeasurementModel):
    """Density of measurement ``z`` given a state (or batch of states).

    The bearing residual is wrapped into (-pi, pi] before evaluating the
    Gaussian, so observations near the +/-pi seam score identically from
    either side.
    """
    state = np.asarray(state, dtype=float)
    z = np.asarray(z, dtype=float)
    predicted = range_bearing(state[..., 0], state[..., 2])
    range_residual = z[..., 0] - predicted[..., 0]
    bearing_residual = wrap_angle(z[..., 1] - predicted[..., 1])
    quad = (
        range_residual**2 / model.range_variance
        + np.asarray(bearing_residual) ** 2 / model.bearing_variance
    )
    norm = TWO_PI * math.sqrt(model.range_variance * model.bearing_variance)
    density = np.exp(-0.5 * quad) / norm
    return density if density.ndim else float(density)


@dataclass(frozen=True)
class ClutterModel:
    """Poisson clutter, uniform over a rectangular Cartesian field of view.

    ``area_intensity`` is the expected number of false returns per square
    meter, so the mean clutter count per scan is ``area_intensity * area``.
    For association weighting the clutter is treated as uniform over the
    rectangle's induced (range, bearing) support; the interval arithmetic
    below requires a field of view that does not straddle the negative x
    axis (the default, which sits in the y >= 0 half plane, is exact).
    """

    fov_x: tuple[float, float] = (-50.0, 50.0)
    fov_y: tuple[float, float] = (0.0, 100.0)
    area_intensity: float = 5e-4

    def __post_init__(self):
        object.__setattr__(self, "fov_x", (float(self.fov_x[0]), float(self.fov_x[1])))
        object.__setattr__(self, "fov_y", (float(self.fov_y[0]), float(self.fov_y[1])))
        if self.fov_x[0] >= self.fov_x[1] or self.fov_y[0] >= self.fov_y[1]:
            raise ValueError("field of view intervals must be nonempty")
        if self.area_intensity < 0.0:
            raise ValueError("clutter intensity must be nonnegative")
        if self.fov_y[0] < 0.0 < self.fov_y[1] and self.fov_x[0] < 0.0:
            raise ValueError(
                "field of view straddles the negative x axis; the induced "
                "bearing support is not a single interval"
            )

    @property
    def area(self) -> float:
        return (self.fov_x[1] - self.fov_x[0]) * (self.fov_y[1] - self.fov_y[0])

    @property
    def mean_count(self) -> float:
        """Expected clutter points per scan."""
        return self.area_intensity * self.area

    @property
    def support(self) -> tuple[float, float, float, float]:
        """(range_lo, range_hi, bearing_lo, bearing_hi) induced by the box."""
        (x_lo, x_hi), (y_lo, y_hi) = self.fov_x, self.fov_y
        corners = [(x_lo, y_lo), (x_lo, y_hi), (x_hi, y_lo), (x_hi, y_hi)]
        nearest = (min(max(0.0, x_lo), x_hi), min(max(0.0, y_lo), y_hi))
        range_lo = math.hypot(*nearest)
        range_hi = max(math.hypot(x, y) for x, y in corners)
        bearings = [math.atan2(y, x) for x, y in corners if (x, y) != (0.0, 0.0)]
        if y_lo <= 0.0 <= y_hi:
            if x_hi > 0.0:
                bearings.append(0.0)
            if x_lo < 0.0:
                bearings.append(math.pi)
        if x_lo <= 0.0 <= x_hi:
            if y_hi > 0.0:
                bearings.append(0.5 * math.pi)
            if y_lo < 0.0:
                bearings.append(-0.5 * math.pi)
        return range_lo, range_hi, min(bearings), max(bearings)

    @property
    def volume(self) -> float:
        """Measurement-space volume of the induced support."""
        range_lo, range_hi, bearing_lo, bearing_hi = self.support
        return (range_hi - range_lo) * (bearing_hi - bearing_lo)

    @property
    def density(self) -> float:
        """Uniform clutter density over the induced support."""
        return self.mean_count / self.volume


def clutter_intensity(z, model: ClutterModel) -> float:
    """Clutter intensity at a measurement: uniform inside the support, else 0."""
    z = np.asarray(z, dtype=float)
    range_lo, range_hi, bearing_lo, bearing_hi = model.support
    inside = (
        range_lo <= z[0] <= range_hi and bearing_lo <= z[1] <= bearing_hi
    )
    return model.density if inside else 0.0


def sample_clutter(model: ClutterModel, rng: np.random.Generator) -> np.ndarray:
    """Draw one scan of clutter: Poisson count, uniform Cartesian positions.

    Returns an array of shape (k, 2) of (range, bearing) measurements.
    """
    count = rng.poisson(model.mean_count)
    if count == 0:
        return np.empty((0, 2))
    xs = rng.uniform(model.fov_x[0], model.fov_x[1], size=count)
    ys = rng.uniform(model.fov_y[0], model.fov_y[1], size=count)
    return range_bearing(xs, ys)


@dataclass(frozen=True)
class DetectionSurvival:
    """Detection and survival probabilities, constant or state-dependent.

    Either field may be a constant in [0, 1] or a callable mapping a batch
    of states ``(n, 4)`` to probabilities ``(n,)``.
    """

    p_d: StateProbability = 0.9
    p_s: StateProbability = 0.99

    def __post_init__(self):
        for name, value in (("p_d", self.p_d), ("p_s", self.p_s)):
            if not callable(value) and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @staticmethod
    def _evaluate(prob: StateProbability, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if not callable(prob):
            return np.full(states.shape[0], float(prob))
        out = np.asarray(prob(states), dtype=float)
        if out.shape != (states.shape[0],) or np.any(out < 0.0) or np.any(out > 1.0):
            raise ValueError("state probability function must map (n, 4) to [0, 1]^n")
        return out

    def detection_prob(self, states) -> np.ndarray:
        return self._evaluate(self.p_d, states)

    def survival_prob(self, states) -> np.ndarray:
        return self._evaluate(self.p_s, states)


@dataclass(frozen=True)
class BirthModel:
    """Multi-Bernoulli birth: per-component existence and seed states.

    New-target clouds are drawn by pushing each seed state once through the
    motion model, mirroring a tracker told where targets may appear.
    """

    existences: np.ndarray = ()
    states: np.ndarray = field(default_factory=lambda: np.empty((0, 4)))

    def __post_init__(self):
        object.__setattr__(self, "existences", _frozen_array(self.existences))
        states = np.asarray(self.states, dtype=float).reshape(-1, 4)
        object.__setattr__(self, "states", _frozen_array(states))
        if self.existences.shape != (self.states.shape[0],):
            raise ValueError("need one existence probability per birth state")
        if np.any(self.existences < 0.0) or np.any(self.existences > 1.0):
            raise ValueError("birth existence probabilities must lie in [0, 1]")

    def __len__(self) -> int:
        return self.states.shape[0]


def sample_birth_particles(
    component_index: int,
    birth: BirthModel,
    motion: MotionModel,
    count: int,
    rng: np.random.Generator,
) -> ParticleCloud:
    """Equal-weight particles for one birth component."""
    if not 0 <= component_index < len(birth):
        raise ValueError(f"birth component index {component_index} out of range")
    if count < 1:
        raise ValueError("particle count must be at least 1")
    seeds = np.tile(birth.states[component_index], (count, 1))
    return ParticleCloud.equal_weighted(transition_sample(seeds, motion, rng))


@dataclass(frozen=True)
class ModelSet:
    """Everything the filters need to score and propagate targets."""

    motion: MotionModel = MotionModel()
    measurement: MeasurementModel = MeasurementModel()
    clutter: ClutterModel = ClutterModel()
    detection: DetectionSurvival = DetectionSurvival()
    birth: BirthModel = BirthModel()
