import numpy as np
import pytest

from mbmtrack import (
    BernoulliComponent,
    BirthModel,
    ClutterModel,
    DetectionSurvival,
    GlobalHypothesis,
    MbmDensity,
    ModelSet,
    MotionModel,
    ParticleCloud,
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_cloud(rng, center, count=50, spread=1.0):
    """Equal-weight cloud of count particles around a 4-state center."""
    states = np.asarray(center, dtype=float) + spread * rng.standard_normal((count, 4))
    return ParticleCloud.equal_weighted(states)


def point_cloud(state, count=1):
    return ParticleCloud.equal_weighted(np.tile(np.asarray(state, dtype=float), (count, 1)))


def make_models(p_d=0.9, p_s=0.99, area_intensity=5e-4, birth_states=(), birth_r=0.01):
    birth_states = np.asarray(birth_states, dtype=float).reshape(-1, 4)
    return ModelSet(
        motion=MotionModel(),
        clutter=ClutterModel(area_intensity=area_intensity),
        detection=DetectionSurvival(p_d=p_d, p_s=p_s),
        birth=BirthModel(
            existences=np.full(len(birth_states), birth_r), states=birth_states
        ),
    )


def clutter_with_density(density):
    """Default field of view scaled so the uniform clutter density equals ``density``."""
    base = ClutterModel()
    return ClutterModel(area_intensity=density * base.volume / base.area)


def single_hypothesis_density(components):
    return MbmDensity(
        hypotheses=(GlobalHypothesis(weight=1.0, components=tuple(components)),)
    )


def random_component(rng, existence=None, count=40, center=None):
    if existence is None:
        existence = float(rng.uniform(0.2, 0.95))
    if center is None:
        center = np.array(
            [rng.uniform(10.0, 40.0), rng.uniform(-2, 2), rng.uniform(20.0, 80.0), rng.uniform(-2, 2)]
        )
    return BernoulliComponent(existence=existence, cloud=make_cloud(rng, center, count))
