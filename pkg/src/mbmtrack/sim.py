"""Scenario definition, ground-truth and measurement synthesis, and the
seeded Monte-Carlo benchmark runner.

Scans are 1-based. Ground truth is noiseless constant velocity motion (the
process noise belongs to the filters' model, and at the benchmark's 4e-6
acceleration variance it is negligible anyway); targets exist from their
birth scan through their death scan inclusive.

Every run derives independent, reproducible random streams from
``(base_seed, run_index)``, so Monte-Carlo aggregation is identical whether
runs execute sequentially or in a process pool.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .core import MbmDensity, empty_density, validate_density, _frozen_array
from .estimation import (
    FilterParams,
    StateEstimate,
    extract_states,
    prune_components,
    prune_hypotheses,
)
from .gibbs import GibbsConfig
from .mbm import mbm_predict, mbm_update
from .models import (
    BirthModel,
    ClutterModel,
    DetectionSurvival,
    MeasurementModel,
    ModelSet,
    MotionModel,
    measure,
    sample_clutter,
    transition_deterministic,
    wrap_angle,
)
from .ospa import OspaParams, ospa_distance
from .phd import PhdParams, empty_phd, phd_estimate, phd_predict, phd_resample, phd_update

TRUTH_HEADER = ["scan", "target_id", "px", "vx", "py", "vy"]
MEASUREMENTS_HEADER = ["scan", "range", "bearing"]
ESTIMATES_HEADER = ["scan", "target_index", "px", "vx", "py", "vy"]
RESULTS_HEADER = [
    "scan",
    "ospa_mbm",
    "ospa_loc_mbm",
    "ospa_card_mbm",
    "ospa_phd",
    "card_mean_mbm",
    "card_true",
]


class ScenarioError(ValueError):
    """Malformed scenario document."""


@dataclass(frozen=True)
class TargetSpec:
    """One true target: initial state plus lifespan endpoints (inclusive)."""

    initial_state: np.ndarray
    birth_time: int
    death_time: int

    def __post_init__(self):
        object.__setattr__(self, "initial_state", _frozen_array(self.initial_state))
        if self.initial_state.shape != (4,):
            raise ScenarioError("target initial_state must be a 4-vector")
        if not 1 <= self.birth_time <= self.death_time:
            raise ScenarioError("need 1 <= birth_time <= death_time")


@dataclass(frozen=True)
class Scenario:
    targets: tuple[TargetSpec, ...]
    duration: int = 100
    models: ModelSet = field(default_factory=ModelSet)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.duration < 0:
            raise ScenarioError("duration must be nonnegative")
        for t in self.targets:
            if t.death_time > self.duration:
                raise ScenarioError("target death_time exceeds scenario duration")


@dataclass(frozen=True)
class TruthFrame:
    scan: int
    target_ids: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "target_ids", np.asarray(self.target_ids, dtype=int))
        object.__setattr__(
            self, "states", np.asarray(self.states, dtype=float).reshape(-1, 4)
        )


@dataclass(frozen=True)
class ScanMeasurements:
    scan: int
    measurements: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "measurements", np.asarray(self.measurements, dtype=float).reshape(-1, 2)
        )


# ---------------------------------------------------------------------------
# Scenario (de)serialization


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ScenarioError(f"missing field {key!r} in {context}")
    return mapping[key]


def scenario_from_dict(doc: dict) -> Scenario:
    """Build a scenario from a parsed JSON document, validating field by field."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    try:
        targets = tuple(
            TargetSpec(
                initial_state=np.asarray(_require(t, "initial_state", f"targets[{i}]")),
                birth_time=int(_require(t, "birth_time", f"targets[{i}]")),
                death_time=int(_require(t, "death_time", f"targets[{i}]")),
            )
            for i, t in enumerate(_require(doc, "targets", "scenario"))
        )
        duration = int(_require(doc, "duration", "scenario"))
        motion_doc = doc.get("motion", {})
        motion = MotionModel(
            period=float(motion_doc.get("period", 1.0)),
            accel_variances=motion_doc.get("accel_variances", (4e-6, 4e-6)),
        )
        meas_doc = doc.get("measurement", {})
        measurement = MeasurementModel(
            range_variance=float(meas_doc.get("range_variance", 0.25)),
            bearing_variance=float(meas_doc.get("bearing_variance", 0.09)),
        )
        clutter_doc = doc.get("clutter", {})
        clutter = ClutterModel(
            fov_x=tuple(clutter_doc.get("fov_x", (-50.0, 50.0))),
            fov_y=tuple(clutter_doc.get("fov_y", (0.0, 100.0))),
            area_intensity=float(clutter_doc.get("area_intensity", 5e-4)),
        )
        det_doc = doc.get("detection", {})
        detection = DetectionSurvival(
            p_d=float(det_doc.get("p_d", 0.9)), p_s=float(det_doc.get("p_s", 0.99))
        )
        if "birth" in doc:
            components = _require(doc["birth"], "components", "birth")
            birth = BirthModel(
                existences=[float(_require(c, "existence", "birth component")) for c in components],
                states=[_require(c, "state", "birth component") for c in components],
            )
        else:
            # default: one birth site per scenario target at its initial state
            birth = BirthModel(
                existences=[0.01] * len(targets),
                states=[t.initial_state for t in targets],
            )
    except ScenarioError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from exc
    models = ModelSet(
        motion=motion,
        measurement=measurement,
        clutter=clutter,
        detection=detection,
        birth=birth,
    )
    return Scenario(targets=targets, duration=duration, models=models)


def scenario_to_dict(scenario: Scenario) -> dict:
    m = scenario.models
    if callable(m.detection.p_d) or callable(m.detection.p_s):
        raise ScenarioError("state-dependent probabilities cannot be serialized")
    return {
        "duration": scenario.duration,
        "targets": [
            {
                "initial_state": t.initial_state.tolist(),
                "birth_time": t.birth_time,
                "death_time": t.death_time,
            }
            for t in scenario.targets
        ],
        "motion": {
            "period": m.motion.period,
            "accel_variances": m.motion.accel_variances.tolist(),
        },
        "measurement": {
            "range_variance": m.measurement.range_variance,
            "bearing_variance": m.measurement.bearing_variance,
        },
        "clutter": {
            "fov_x": list(m.clutter.fov_x),
            "fov_y": list(m.clutter.fov_y),
            "area_intensity": m.clutter.area_intensity,
        },
        "detection": {"p_d": m.detection.p_d, "p_s": m.detection.p_s},
        "birth": {
            "components": [
                {"existence": float(r), "state": s.tolist()}
                for r, s in zip(m.birth.existences, m.birth.states)
            ]
        },
    }


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(
                f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return scenario_from_dict(doc)


def save_scenario(path, scenario: Scenario) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2)
        fh.write("\n")


def benchmark_scenario() -> Scenario:
    """The bundled five-target benchmark scenario."""
    ref = resources.files("mbmtrack.data").joinpath("benchmark_scenario.json")
    return scenario_from_dict(json.loads(ref.read_text()))


# ---------------------------------------------------------------------------
# Synthesis


def generate_truth(scenario: Scenario, rng: np.random.Generator | None = None) -> list[TruthFrame]:
    """Noiseless constant velocity trajectories on the birth/death windows.

    ``rng`` is accepted for signature symmetry but unused: truth is
    deterministic by design.
    """
    del rng
    frames = []
    states = {i: t.initial_state.copy() for i, t in enumerate(scenario.targets)}
    for scan in range(1, scenario.duration + 1):
        ids, present = [], []
        for i, target in enumerate(scenario.targets):
            if target.birth_time < scan <= target.death_time:
                states[i] = transition_deterministic(states[i], scenario.models.motion)
            if target.birth_time <= scan <= target.death_time:
                ids.append(i)
                present.append(states[i])
        frames.append(
            TruthFrame(
                scan=scan,
                target_ids=np.array(ids, dtype=int),
                states=np.array(present).reshape(-1, 4),
            )
        )
    return frames


def generate_measurements(
    truth: list[TruthFrame], scenario: Scenario, rng: np.random.Generator
) -> list[ScanMeasurements]:
    """Detections (thinned by p_d, noise added, bearing wrapped) plus clutter,
    in randomized order."""
    models = scenario.models
    noise_std = np.sqrt(
        [models.measurement.range_variance, models.measurement.bearing_variance]
    )
    scans = []
    for frame in truth:
        collected = []
        if len(frame.target_ids) > 0:
            p_d = models.detection.detection_prob(frame.states)
            detected = rng.random(len(p_d)) < p_d
            for state in frame.states[detected]:
                z = measure(state) + rng.standard_normal(2) * noise_std
                collected.append([z[0], wrap_angle(z[1])])
        clutter = sample_clutter(models.clutter, rng)
        all_meas = np.array(collected).reshape(-1, 2)
        all_meas = np.concatenate([all_meas, clutter])
        order = rng.permutation(all_meas.shape[0])
        scans.append(ScanMeasurements(scan=frame.scan, measurements=all_meas[order]))
    return scans


# ---------------------------------------------------------------------------
# Filtering


def _measurement_arrays(measurements, duration: int) -> list[np.ndarray]:
    by_scan = {}
    for item in measurements:
        if isinstance(item, ScanMeasurements):
            by_scan[item.scan] = item.measurements
    if by_scan:
        return [by_scan.get(scan, np.empty((0, 2))) for scan in range(1, duration + 1)]
    arrays = [np.asarray(m, dtype=float).reshape(-1, 2) for m in measurements]
    arrays += [np.empty((0, 2))] * (duration - len(arrays))
    return arrays[:duration]


def run_filter(
    measurements,
    scenario: Scenario,
    params: FilterParams,
    filter_kind: str = "mbm",
    rng: np.random.Generator | None = None,
    phd_params: PhdParams | None = None,
    check_invariants: bool = False,
) -> list[StateEstimate]:
    """Run one tracker over a measurement sequence.

    ``measurements`` is a list of ``ScanMeasurements`` (scans without an
    entry count as empty) or a plain list of per-scan arrays. The recursion
    starts from the no-target density predicted once (injecting the birth
    components) ahead of the first scan; each scan then runs update, both
    pruning passes, extraction, and the prediction feeding the next scan.
    """
    if rng is None:
        rng = np.random.default_rng()
    per_scan = _measurement_arrays(measurements, scenario.duration)
    models = scenario.models
    estimates: list[StateEstimate] = []
    if filter_kind == "mbm":
        gibbs_config = GibbsConfig(
            max_hypotheses=params.n_h_max, burn_in=params.gibbs_burn_in
        )
        density: MbmDensity = empty_density()
        density = mbm_predict(density, models, rng, params.particles_per_target)
        for z in per_scan:
            density = mbm_update(density, z, models, rng, gibbs_config)
            density = prune_hypotheses(density, params)
            density = prune_components(density, params)
            if check_invariants:
                validate_density(density)
            estimates.append(extract_states(density, params))
            density = mbm_predict(density, models, rng, params.particles_per_target)
    elif filter_kind == "phd":
        if phd_params is None:
            phd_params = PhdParams(particles_per_target=params.particles_per_target)
        intensity = phd_predict(empty_phd(), models, phd_params, rng)
        for z in per_scan:
            intensity = phd_update(intensity, z, models)
            intensity = phd_resample(intensity, phd_params, rng)
            estimates.append(StateEstimate(states=phd_estimate(intensity, phd_params, rng)))
            intensity = phd_predict(intensity, models, phd_params, rng)
    else:
        raise ValueError(f"unknown filter kind {filter_kind!r}")
    return estimates


# ---------------------------------------------------------------------------
# Monte-Carlo benchmark


@dataclass(frozen=True)
class BenchmarkResult:
    """Per-scan means over Monte-Carlo runs (exactly the results-file columns,
    plus the baseline's mean cardinality)."""

    scans: np.ndarray
    ospa_mbm: np.ndarray
    ospa_loc_mbm: np.ndarray
    ospa_card_mbm: np.ndarray
    ospa_phd: np.ndarray
    card_mean_mbm: np.ndarray
    card_true: np.ndarray
    card_mean_phd: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULTS_HEADER)
            for i, scan in enumerate(self.scans):
                writer.writerow(
                    [int(scan)]
                    + [
                        f"{value:.6f}"
                        for value in (
                            self.ospa_mbm[i],
                            self.ospa_loc_mbm[i],
                            self.ospa_card_mbm[i],
                            self.ospa_phd[i],
                            self.card_mean_mbm[i],
                            self.card_true[i],
                        )
                    ]
                )


def _run_streams(base_seed: int, run_index: int) -> dict[str, np.random.Generator]:
    return {
        name: np.random.default_rng([base_seed, run_index, stream])
        for stream, name in enumerate(("measurements", "mbm", "phd"))
    }


def benchmark_single_run(
    scenario: Scenario,
    params: FilterParams,
    base_seed: int,
    run_index: int,
    ospa_params: OspaParams,
    phd_params: PhdParams | None = None,
    filters: tuple[str, ...] = ("mbm", "phd"),
) -> dict[str, np.ndarray]:
    """One seeded replication: synthesize measurements, track, score."""
    truth = generate_truth(scenario)
    streams = _run_streams(base_seed, run_index)
    measurements = generate_measurements(truth, scenario, streams["measurements"])
    out: dict[str, np.ndarray] = {
        "card_true": np.array([len(f.target_ids) for f in truth], dtype=float)
    }
    for kind in filters:
        estimates = run_filter(
            measurements, scenario, params, kind, streams[kind], phd_params=phd_params
        )
        scores = np.array(
            [
                ospa_distance(est.states, frame.states, ospa_params)
                for est, frame in zip(estimates, truth)
            ]
        ).reshape(-1, 3)
        out[f"ospa_{kind}"] = scores
        out[f"card_{kind}"] = np.array([e.cardinality for e in estimates], dtype=float)
    return out


def run_monte_carlo(
    scenario: Scenario,
    params: FilterParams,
    runs: int,
    base_seed: int,
    ospa_params: OspaParams | None = None,
    phd_params: PhdParams | None = None,
    workers: int | None = None,
) -> BenchmarkResult:
    """Average OSPA and cardinality curves over seeded runs.

    Run ``r`` draws every random stream from ``(base_seed, r)``, and results
    are accumulated in run-index order, so the output is byte-reproducible
    for a given seed regardless of ``workers``.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    if ospa_params is None:
        ospa_params = OspaParams()
    args = [
        (scenario, params, base_seed, r, ospa_params, phd_params) for r in range(runs)
    ]
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_star_run, args))
    else:
        results = [_star_run(a) for a in args]
    scans = np.arange(1, scenario.duration + 1)
    mean_ospa_mbm = np.mean([r["ospa_mbm"] for r in results], axis=0).reshape(-1, 3)
    mean_ospa_phd = np.mean([r["ospa_phd"] for r in results], axis=0).reshape(-1, 3)
    return BenchmarkResult(
        scans=scans,
        ospa_mbm=mean_ospa_mbm[:, 0],
        ospa_loc_mbm=mean_ospa_mbm[:, 1],
        ospa_card_mbm=mean_ospa_mbm[:, 2],
        ospa_phd=mean_ospa_phd[:, 0],
        card_mean_mbm=np.mean([r["card_mbm"] for r in results], axis=0),
        card_true=results[0]["card_true"] if results else np.zeros(0),
        card_mean_phd=np.mean([r["card_phd"] for r in results], axis=0),
    )


def _star_run(args) -> dict[str, np.ndarray]:
    return benchmark_single_run(*args)


# ---------------------------------------------------------------------------
# CSV interfaces


class CsvFormatError(ValueError):
    """Malformed tabular input; message carries the offending row number."""


def write_truth_csv(path, truth: list[TruthFrame]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRUTH_HEADER)
        for frame in truth:
            for target_id, state in zip(frame.target_ids, frame.states):
                writer.writerow(
                    [frame.scan, int(target_id)] + [f"{v:.6f}" for v in state]
                )


def write_measurements_csv(path, scans: list[ScanMeasurements]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MEASUREMENTS_HEADER)
        for item in scans:
            for z in item.measurements:
                writer.writerow([item.scan, f"{z[0]:.6f}", f"{z[1]:.6f}"])


def write_estimates_csv(path, estimates: list[StateEstimate], start_scan: int = 1) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ESTIMATES_HEADER)
        for offset, estimate in enumerate(estimates):
            for index, state in enumerate(estimate.states):
                writer.writerow(
                    [start_scan + offset, index] + [f"{v:.6f}" for v in state]
                )


def _read_rows(path, header: list[str], value_count: int):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or rows[0] != header:
        raise CsvFormatError(f"row 1: expected header {','.join(header)}")
    parsed = []
    for number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != value_count:
            raise CsvFormatError(f"row {number}: expected {value_count} fields")
        try:
            parsed.append([float(v) for v in row])
        except ValueError as exc:
            raise CsvFormatError(f"row {number}: {exc}") from exc
    return parsed


def read_measurements_csv(path) -> list[ScanMeasurements]:
    """Measurements grouped per scan, for scans 1..max present in the file."""
    rows = _read_rows(path, MEASUREMENTS_HEADER, 3)
    by_scan: dict[int, list] = {}
    for scan, rng_val, bearing in rows:
        by_scan.setdefault(int(scan), []).append([rng_val, bearing])
    top = max(by_scan) if by_scan else 0
    return [
        ScanMeasurements(scan=s, measurements=np.array(by_scan.get(s, [])).reshape(-1, 2))
        for s in range(1, top + 1)
    ]


def read_states_csv(path, header) -> dict[int, np.ndarray]:
    """Per-scan state arrays from a truth or estimates file."""
    rows = _read_rows(path, header, 6)
    by_scan: dict[int, list] = {}
    for scan, _, px, vx, py, vy in rows:
        by_scan.setdefault(int(scan), []).append([px, vx, py, vy])
    return {s: np.array(states).reshape(-1, 4) for s, states in by_scan.items()}
