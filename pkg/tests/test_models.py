import math

import numpy as np
import pytest

from mbmtrack import (
    BirthModel,
    ClutterModel,
    DetectionSurvival,
    MeasurementModel,
    MotionModel,
    clutter_intensity,
    measure,
    measurement_likelihood,
    sample_birth_particles,
    sample_clutter,
    transition_deterministic,
    transition_sample,
    weighted_mean,
    wrap_angle,
)

PEAK_LIKELIHOOD = 1.0 / (2.0 * math.pi * math.sqrt(0.25 * 0.09))


# ---------------------------------------------------------------------------
# motion


def test_transition_unit_step():
    np.testing.assert_array_equal(
        transition_deterministic([0.0, 1.0, 0.0, 1.0], MotionModel(period=1.0)),
        [1.0, 1.0, 1.0, 1.0],
    )


def test_transition_zero_velocity_fixed_point():
    state = np.array([5.0, 0.0, -3.0, 0.0])
    np.testing.assert_array_equal(transition_deterministic(state, MotionModel()), state)


def test_transition_benchmark_initial_state():
    got = transition_deterministic([-50.0, 1.65, 100.0, -1.65], MotionModel(period=1.0))
    np.testing.assert_allclose(got, [-48.35, 1.65, 98.35, -1.65], rtol=0, atol=1e-12)


def test_transition_semigroup():
    state = np.array([0.5, 0.25, -2.0, 1.5])
    twice = transition_deterministic(
        transition_deterministic(state, MotionModel(period=0.5)), MotionModel(period=0.5)
    )
    once = transition_deterministic(state, MotionModel(period=1.0))
    np.testing.assert_array_equal(twice, once)
    generic = np.array([0.1, 0.3, 0.7, -0.2])
    np.testing.assert_allclose(
        transition_deterministic(
            transition_deterministic(generic, MotionModel(period=0.7)),
            MotionModel(period=0.7),
        ),
        transition_deterministic(generic, MotionModel(period=1.4)),
        rtol=1e-12,
    )


def test_transition_sample_zero_noise_is_deterministic(rng):
    model = MotionModel(accel_variances=(0.0, 0.0))
    state = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(
        transition_sample(state, model, rng), transition_deterministic(state, model)
    )


def test_transition_sample_moments(rng):
    model = MotionModel()
    state = np.array([10.0, 1.0, 20.0, -1.0])
    draws = transition_sample(np.tile(state, (100_000, 1)), model, rng)
    expected = transition_deterministic(state, model)
    stderr = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
    assert np.all(np.abs(draws.mean(axis=0) - expected) <= 3.0 * stderr)
    var_px = draws[:, 0].var(ddof=1)
    expected_var = (0.5**2) * 4e-6  # (T^2/2)^2 times the axis variance, T = 1
    var_se = expected_var * math.sqrt(2.0 / (draws.shape[0] - 1))
    assert abs(var_px - expected_var) <= 3.0 * var_se


# ---------------------------------------------------------------------------
# measurement


def test_measure_three_four_five():
    z = measure([3.0, 0.0, 4.0, 0.0])
    assert z[0] == pytest.approx(5.0)
    assert z[1] == pytest.approx(math.atan2(4.0, 3.0))


def test_measure_axis_and_four_quadrant_cases():
    np.testing.assert_allclose(measure([0.0, 0, 1.0, 0]), [1.0, math.pi / 2])
    # a two-quadrant arctangent would report bearing 0 here
    np.testing.assert_allclose(measure([-1.0, 0, 0.0, 0]), [1.0, math.pi])


def test_measure_origin_errors():
    with pytest.raises(ValueError, match="bearing"):
        measure([0.0, 1.0, 0.0, 1.0])


def test_wrap_angle_convention():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)
    np.testing.assert_allclose(wrap_angle(np.array([0.0, 2 * math.pi])), [0.0, 0.0], atol=1e-15)


def test_likelihood_peak_value():
    model = MeasurementModel()
    state = np.array([30.0, 0.0, 40.0, 0.0])
    got = measurement_likelihood(measure(state), state, model)
    assert got == pytest.approx(PEAK_LIKELIHOOD, rel=1e-12)
    assert got == pytest.approx(1.0610, abs=5e-5)


def test_likelihood_wraps_bearing_residual():
    model = MeasurementModel()
    state = np.array([1.0, 0.0, 0.0, 0.0])  # bearing 0
    rng_true = measure(state)[0]
    near_pi = measurement_likelihood([rng_true, math.pi - 0.01], state, model)
    near_minus_pi = measurement_likelihood([rng_true, -math.pi + 0.01], state, model)
    assert near_pi == pytest.approx(near_minus_pi, rel=1e-12)
    # the wrapped gap between the two bearings is 0.02
    state_near_seam = np.array([-1.0, 0.0, 1e-12, 0.0])
    direct = measurement_likelihood(
        [1.0, measure(state_near_seam)[1] - 0.02], state_near_seam, model
    )
    wrapped = measurement_likelihood(
        [1.0, wrap_angle(measure(state_near_seam)[1] + 0.02)], state_near_seam, model
    )
    assert direct == pytest.approx(wrapped, rel=1e-9)


def test_likelihood_far_tail():
    model = MeasurementModel()
    state = np.array([30.0, 0.0, 40.0, 0.0])
    z = measure(state) + np.array([10.0 * math.sqrt(model.range_variance), 0.0])
    assert measurement_likelihood(z, state, model) < 1e-20


def test_likelihood_integrates_to_one():
    model = MeasurementModel()
    state = np.array([20.0, 0.0, 30.0, 0.0])
    center = measure(state)
    sigma_r = math.sqrt(model.range_variance)
    ranges = np.linspace(center[0] - 8 * sigma_r, center[0] + 8 * sigma_r, 801)
    bearings = np.linspace(-math.pi, math.pi, 1601)
    grid_r, grid_b = np.meshgrid(ranges, bearings, indexing="ij")
    z = np.stack([grid_r, grid_b], axis=-1).reshape(-1, 2)
    density = np.array([measurement_likelihood(zi, state, model) for zi in z])
    integral = density.sum() * (ranges[1] - ranges[0]) * (bearings[1] - bearings[0])
    assert integral == pytest.approx(1.0, abs=1e-3)


# ---------------------------------------------------------------------------
# clutter


def test_clutter_intensity_inside_support():
    model = ClutterModel()
    assert model.mean_count == pytest.approx(5.0)
    range_span = math.hypot(50.0, 100.0)
    assert model.volume == pytest.approx(range_span * math.pi)
    inside = clutter_intensity([50.0, 1.0], model)
    assert inside == pytest.approx(5.0 / (range_span * math.pi), rel=1e-12)
    assert inside == pytest.approx(0.014235, abs=5e-7)


def test_clutter_intensity_outside_support():
    model = ClutterModel()
    assert clutter_intensity([120.0, 1.0], model) == 0.0
    assert clutter_intensity([50.0, -1.0], model) == 0.0


def test_clutter_intensity_integrates_to_mean_count():
    model = ClutterModel()
    r_lo, r_hi, b_lo, b_hi = model.support
    ranges = np.linspace(r_lo, r_hi, 401, endpoint=False) + (r_hi - r_lo) / 802
    bearings = np.linspace(b_lo, b_hi, 401, endpoint=False) + (b_hi - b_lo) / 802
    total = sum(
        clutter_intensity([r, b], model) for r in ranges for b in bearings
    ) * ((r_hi - r_lo) / 401) * ((b_hi - b_lo) / 401)
    assert total == pytest.approx(model.mean_count, rel=1e-3)


def test_sample_clutter_zero_rate(rng):
    model = ClutterModel(area_intensity=0.0)
    for _ in range(20):
        assert sample_clutter(model, rng).shape == (0, 2)


def test_sample_clutter_mean_count(rng):
    model = ClutterModel()
    counts = [sample_clutter(model, rng).shape[0] for _ in range(10_000)]
    stderr = np.std(counts, ddof=1) / math.sqrt(len(counts))
    assert abs(np.mean(counts) - 5.0) <= 3.0 * stderr


def test_sample_clutter_points_map_back_into_fov(rng):
    model = ClutterModel()
    for _ in range(200):
        for r, b in sample_clutter(model, rng):
            x, y = r * math.cos(b), r * math.sin(b)
            assert model.fov_x[0] - 1e-9 <= x <= model.fov_x[1] + 1e-9
            assert model.fov_y[0] - 1e-9 <= y <= model.fov_y[1] + 1e-9


def test_polar_round_trip(rng):
    model = ClutterModel()
    xs = rng.uniform(*model.fov_x, 500)
    ys = rng.uniform(*model.fov_y, 500)
    keep = (np.abs(xs) > 1e-6) | (np.abs(ys) > 1e-6)
    for x, y in zip(xs[keep], ys[keep]):
        r, b = measure([x, 0.0, y, 0.0])
        np.testing.assert_allclose([r * math.cos(b), r * math.sin(b)], [x, y], atol=1e-9)


def test_fov_straddling_negative_x_axis_rejected():
    with pytest.raises(ValueError, match="negative x axis"):
        ClutterModel(fov_x=(-50.0, 50.0), fov_y=(-10.0, 10.0))


# ---------------------------------------------------------------------------
# detection / survival / birth


def test_detection_survival_constants_and_callables():
    ds = DetectionSurvival(p_d=0.9, p_s=0.99)
    states = np.zeros((4, 4))
    np.testing.assert_array_equal(ds.detection_prob(states), np.full(4, 0.9))
    np.testing.assert_array_equal(ds.survival_prob(states), np.full(4, 0.99))
    ranged = DetectionSurvival(p_d=lambda s: np.where(s[:, 0] > 0, 1.0, 0.0))
    np.testing.assert_array_equal(
        ranged.detection_prob(np.array([[1.0, 0, 0, 0], [-1.0, 0, 0, 0]])), [1.0, 0.0]
    )
    with pytest.raises(ValueError):
        DetectionSurvival(p_d=1.5)
    bad = DetectionSurvival(p_d=lambda s: np.full(s.shape[0], 2.0))
    with pytest.raises(ValueError):
        bad.detection_prob(states)


def test_sample_birth_particles_zero_noise(rng):
    motion = MotionModel(accel_variances=(0.0, 0.0))
    birth = BirthModel(existences=[0.01], states=[[-50.0, 1.65, 100.0, -1.65]])
    cloud = sample_birth_particles(0, birth, motion, 25, rng)
    expected = transition_deterministic([-50.0, 1.65, 100.0, -1.65], motion)
    np.testing.assert_array_equal(cloud.states, np.tile(expected, (25, 1)))
    np.testing.assert_allclose(cloud.weights, np.full(25, 1.0 / 25))


def test_sample_birth_particles_mean(rng):
    motion = MotionModel()
    birth = BirthModel(existences=[0.5], states=[[10.0, 1.0, 20.0, -1.0]])
    cloud = sample_birth_particles(0, birth, motion, 100_000, rng)
    expected = transition_deterministic(birth.states[0], motion)
    stderr = cloud.states.std(axis=0, ddof=1) / math.sqrt(len(cloud))
    assert np.all(np.abs(weighted_mean(cloud) - expected) <= 3.0 * stderr + 1e-12)


def test_sample_birth_particles_index_guard(rng):
    birth = BirthModel(existences=[0.5], states=[[0.0, 0, 1.0, 0]])
    with pytest.raises(ValueError, match="index"):
        sample_birth_particles(1, birth, MotionModel(), 10, rng)
