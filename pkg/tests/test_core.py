import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from mbmtrack import (
    BernoulliComponent,
    GlobalHypothesis,
    MbmDensity,
    Particle,
    ParticleCloud,
    empty_density,
    normalize_weights,
    systematic_resample,
    validate_density,
    weighted_mean,
)

from conftest import point_cloud


class FixedOffset:
    """Stand-in random stream yielding one prescribed uniform draw."""

    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u


# ---------------------------------------------------------------------------
# normalize_weights


def test_normalize_proportionality():
    np.testing.assert_allclose(normalize_weights([2, 3, 5]), [0.2, 0.3, 0.5])


def test_normalize_single_entry():
    np.testing.assert_allclose(normalize_weights([1]), [1.0])


def test_normalize_denormal_scale_matches_log_domain():
    w = np.array([1e-300, 1e-300])
    got = normalize_weights(w)
    log_expected = np.exp(np.log(w) - logsumexp(np.log(w)))
    np.testing.assert_allclose(got, log_expected, atol=1e-15)
    np.testing.assert_allclose(got, [0.5, 0.5])


@pytest.mark.parametrize(
    "bad", [[0.0, 0.0], [], [1.0, -0.5], [np.nan, 1.0], [np.inf, 1.0]]
)
def test_normalize_degenerate_inputs(bad):
    with pytest.raises(ValueError, match="degenerate"):
        normalize_weights(bad)


@given(
    st.lists(st.floats(min_value=1e-12, max_value=1e12), min_size=1, max_size=30)
)
@settings(max_examples=200, deadline=None)
def test_normalize_idempotent(weights):
    once = normalize_weights(weights)
    twice = normalize_weights(once)
    np.testing.assert_allclose(twice, once, atol=1e-12)
    assert abs(once.sum() - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# systematic_resample


def test_resample_uniform_weights_copies_each_once(rng):
    cloud = ParticleCloud.equal_weighted(np.arange(400, dtype=float).reshape(100, 4))
    out = systematic_resample(cloud, 100, rng)
    np.testing.assert_array_equal(out.states, cloud.states)
    np.testing.assert_allclose(out.weights, np.full(100, 0.01))


def test_resample_point_mass(rng):
    cloud = ParticleCloud(states=np.eye(3, 4), weights=[1.0, 0.0, 0.0])
    out = systematic_resample(cloud, 3, rng)
    np.testing.assert_array_equal(out.states, np.tile(cloud.states[0], (3, 1)))


def test_resample_multiplicity_seven_for_every_offset():
    cloud = ParticleCloud(
        states=np.array([[0.0] * 4, [1.0] * 4]), weights=[0.7, 0.3]
    )
    for u in np.linspace(0.0, 0.999999, 97):
        out = systematic_resample(cloud, 10, FixedOffset(u))
        copies_of_first = int(np.sum(out.states[:, 0] == 0.0))
        assert copies_of_first == 7, f"offset {u}"


def test_resample_rejects_degenerate_cloud(rng):
    cloud = ParticleCloud(states=np.zeros((3, 4)), weights=[0.0, 0.0, 0.0])
    with pytest.raises(ValueError, match="degenerate"):
        systematic_resample(cloud, 3, rng)
    with pytest.raises(ValueError):
        systematic_resample(cloud, 0, rng)


def test_resample_preserves_mean_in_expectation(rng):
    states = rng.normal(size=(100, 4))
    cloud = ParticleCloud(states=states, weights=normalize_weights(rng.uniform(0.1, 1.0, 100)))
    target = weighted_mean(cloud)
    trials = 10_000
    means = np.empty((trials, 4))
    for t in range(trials):
        means[t] = weighted_mean(systematic_resample(cloud, 100, rng))
    error = means.mean(axis=0) - target
    stderr = means.std(axis=0, ddof=1) / np.sqrt(trials)
    assert np.all(np.abs(error) <= 3.0 * stderr + 1e-12)


# ---------------------------------------------------------------------------
# weighted_mean


def test_weighted_mean_identity():
    s = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(weighted_mean(point_cloud(s)), s)


def test_weighted_mean_symmetry():
    v = np.array([3.0, -1.0, 2.0, 0.5])
    cloud = ParticleCloud(states=np.stack([v, -v]), weights=[0.5, 0.5])
    np.testing.assert_allclose(weighted_mean(cloud), np.zeros(4), atol=1e-15)


def test_weighted_mean_convex_combination():
    cloud = ParticleCloud(
        states=np.array([[0.0, 1.0, 2.0, 3.0], [4.0, 1.0, 2.0, 3.0]]),
        weights=[0.25, 0.75],
    )
    assert weighted_mean(cloud)[0] == pytest.approx(3.0)


def test_weighted_mean_empty_cloud_errors():
    cloud = ParticleCloud(states=np.empty((0, 4)), weights=np.empty(0))
    with pytest.raises(ValueError, match="empty"):
        weighted_mean(cloud)


# ---------------------------------------------------------------------------
# containers and validation


def test_particle_cloud_round_trip():
    particles = [Particle(np.array([1.0, 0, 0, 0]), 0.4), Particle(np.array([0, 0, 1.0, 0]), 0.6)]
    cloud = ParticleCloud.from_particles(particles)
    assert [p.weight for p in cloud.particles] == [0.4, 0.6]
    assert len(cloud) == 2


def test_containers_are_read_only():
    cloud = point_cloud([1.0, 0, 0, 0], count=3)
    with pytest.raises(ValueError):
        cloud.states[0, 0] = 7.0
    with pytest.raises(ValueError):
        cloud.weights[0] = 7.0


@pytest.mark.parametrize("existence", [-0.1, 1.1, np.nan])
def test_bernoulli_existence_bounds(existence):
    with pytest.raises(ValueError):
        BernoulliComponent(existence=existence, cloud=point_cloud([0, 0, 1, 0]))


def test_validate_density_accepts_empty_density():
    validate_density(empty_density())


def test_validate_density_rejects_bad_weight_sum():
    bad = MbmDensity(
        hypotheses=(GlobalHypothesis(weight=0.5), GlobalHypothesis(weight=0.1))
    )
    with pytest.raises(ValueError, match="sum"):
        validate_density(bad)


def test_validate_density_rejects_uneven_component_counts():
    comp = BernoulliComponent(existence=0.5, cloud=point_cloud([0, 0, 1, 0]))
    bad = MbmDensity(
        hypotheses=(
            GlobalHypothesis(weight=0.5, components=(comp,)),
            GlobalHypothesis(weight=0.5),
        )
    )
    with pytest.raises(ValueError, match="component count"):
        validate_density(bad)


def test_mbm_density_must_be_nonempty():
    with pytest.raises(ValueError):
        MbmDensity(hypotheses=())
