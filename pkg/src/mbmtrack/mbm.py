"""Multi-Bernoulli mixture filter recursion.

Update: every component of every prior hypothesis is updated against every
measurement (posterior existence 1, particles reweighted by detection-scaled
likelihood) and against the missed-detection event; the resulting per-target
contribution factors form a cost matrix. An association's unnormalized
posterior weight is the prior hypothesis weight times the product of its
per-target contributions, where detection factors are divided by the clutter
density (clutter terms common to all associations cancel in normalization).
Associations are drawn by Gibbs sampling, with a budget of
``ceil(max_hypotheses * prior_weight)`` sweeps per prior hypothesis, and each
distinct association becomes one posterior hypothesis.

Prediction: hypothesis weights are preserved exactly; every component is
thinned by survival and propagated through the motion model, then the birth
components are appended to every hypothesis in identical order.

Hypothesis weights are handled in log domain internally; exposed weights are
linear. Components shared by several hypotheses (the common case after a few
scans, since posteriors from one prior reuse table entries) are updated and
predicted once per call: the work is memoized by object identity, which is
sound because components are immutable values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import (
    BernoulliComponent,
    GlobalHypothesis,
    MbmDensity,
    ParticleCloud,
    systematic_resample,
)
from .gibbs import Association, GibbsConfig, exhaustive_associations, gibbs_sample
from .models import (
    ModelSet,
    measurement_likelihood,
    sample_birth_particles,
    transition_sample,
)

# Floor on the clutter density used in detection contributions; keeps
# association weights finite when the configured clutter rate is zero (the
# maximal-assignment associations then dominate, which is the correct limit).
CLUTTER_DENSITY_FLOOR = 1e-12


@dataclass(frozen=True)
class CostMatrix:
    """Per-target association contributions, stored as logs.

    ``log_detect[i, j]`` is the log contribution of target ``i`` explaining
    measurement ``j``; ``log_miss[i]`` covers the missed-detection event.
    ``-inf`` marks an infeasible pairing. The ``detect``/``miss`` properties
    expose the linear values.
    """

    log_detect: np.ndarray
    log_miss: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "log_detect", np.asarray(self.log_detect, dtype=float))
        object.__setattr__(self, "log_miss", np.asarray(self.log_miss, dtype=float))
        if self.log_detect.ndim != 2 or self.log_miss.ndim != 1:
            raise ValueError("cost matrix needs a 2-d detect block and 1-d miss vector")
        if self.log_detect.shape[0] != self.log_miss.shape[0]:
            raise ValueError("detect and miss blocks disagree on target count")
        if np.any(np.isnan(self.log_detect)) or np.any(np.isnan(self.log_miss)):
            raise ValueError("cost matrix contains NaN")
        if np.any(self.log_detect == np.inf) or np.any(self.log_miss == np.inf):
            raise ValueError("cost matrix contains infinite contributions")

    @property
    def n(self) -> int:
        return self.log_miss.shape[0]

    @property
    def m(self) -> int:
        return self.log_detect.shape[1]

    @property
    def detect(self) -> np.ndarray:
        return np.exp(self.log_detect)

    @property
    def miss(self) -> np.ndarray:
        return np.exp(self.log_miss)

    def log_weight(self, theta: Association) -> float:
        """Log product of contributions along one association."""
        total = 0.0
        for i, j in enumerate(theta):
            total += self.log_miss[i] if j == 0 else self.log_detect[i, j - 1]
        return total


@dataclass(frozen=True)
class UpdatedComponentTable:
    """Posterior components backing a cost matrix.

    ``detected[i][j]`` is target ``i`` updated by measurement ``j`` (``None``
    when that pairing is infeasible); ``missed[i]`` is the missed-detection
    posterior.
    """

    detected: tuple[tuple[BernoulliComponent | None, ...], ...]
    missed: tuple[BernoulliComponent, ...]


def _weighting_density(models: ModelSet) -> float:
    return max(models.clutter.density, CLUTTER_DENSITY_FLOOR)


def _resampled_cloud(
    states: np.ndarray, raw_weights: np.ndarray, rng: np.random.Generator
) -> ParticleCloud:
    return systematic_resample(ParticleCloud(states, raw_weights), len(raw_weights), rng)


class _ComponentUpdate:
    """All update quantities for one component against one scan's measurements.

    Contributions for every pairing are computed eagerly (the Gibbs sampler
    needs the full cost matrix), but posterior clouds are resampled only when
    an association actually selects them, and at most once each.
    """

    def __init__(self, comp: BernoulliComponent, measurements: np.ndarray, models: ModelSet):
        self.comp = comp
        cloud = comp.cloud
        p_d = models.detection.detection_prob(cloud.states)
        detectable = cloud.weights * p_d
        # (m, n_particles) detection-scaled likelihoods, one row per measurement
        if measurements.shape[0]:
            likelihood = measurement_likelihood(
                measurements[:, None, :], cloud.states[None, :, :], models.measurement
            ).reshape(measurements.shape[0], len(cloud))
            self._raw_detect = detectable[None, :] * likelihood
            self.detect_contributions = (
                comp.existence
                * self._raw_detect.sum(axis=1)
                / _weighting_density(models)
            )
        else:
            self._raw_detect = np.empty((0, len(cloud)))
            self.detect_contributions = np.empty(0)
        self._raw_miss = cloud.weights - detectable
        q = float(self._raw_miss.sum())
        self.miss_contribution = 1.0 - comp.existence + comp.existence * q
        self._miss_existence = (
            comp.existence * q / self.miss_contribution
            if self.miss_contribution > 0.0 and q > 0.0
            else 0.0
        )
        self._q = q
        self._detected: dict[int, BernoulliComponent | None] = {}
        self._missed: BernoulliComponent | None = None

    def detected(self, j: int, rng: np.random.Generator) -> BernoulliComponent | None:
        if j not in self._detected:
            if self.detect_contributions[j] <= 0.0:
                self._detected[j] = None
            else:
                self._detected[j] = BernoulliComponent(
                    existence=1.0,
                    cloud=_resampled_cloud(self.comp.cloud.states, self._raw_detect[j], rng),
                )
        return self._detected[j]

    def missed(self, rng: np.random.Generator) -> BernoulliComponent:
        if self._missed is None:
            if self.miss_contribution <= 0.0 or self._q <= 0.0:
                # certain detection: the component cannot exist and be missed
                self._missed = BernoulliComponent(existence=0.0, cloud=self.comp.cloud)
            else:
                self._missed = BernoulliComponent(
                    existence=self._miss_existence,
                    cloud=_resampled_cloud(self.comp.cloud.states, self._raw_miss, rng),
                )
        return self._missed


def update_detected(
    comp: BernoulliComponent,
    z: np.ndarray,
    models: ModelSet,
    rng: np.random.Generator,
) -> tuple[BernoulliComponent | None, float]:
    """Update one component with an associated measurement.

    The posterior exists with probability 1; particles are reweighted by
    detection probability times measurement likelihood and resampled back to
    equal weights. The returned contribution is the component's factor in the
    posterior hypothesis weight: existence times the weighted mean of
    ``p_d * l(z | x)``, divided by the clutter density.

    Returns ``(None, 0.0)`` when every particle has zero likelihood, marking
    the association infeasible.
    """
    z = np.asarray(z, dtype=float).reshape(1, 2)
    update = _ComponentUpdate(comp, z, models)
    return update.detected(0, rng), float(update.detect_contributions[0])


def update_missed(
    comp: BernoulliComponent,
    models: ModelSet,
    rng: np.random.Generator,
) -> tuple[BernoulliComponent, float]:
    """Update one component for the missed-detection event.

    With ``q`` the weighted mean of ``1 - p_d`` over the cloud, the
    contribution is ``1 - r + r q`` and the posterior existence ``r q`` over
    that; particles are reweighted by ``1 - p_d`` and resampled. A zero
    contribution (only possible for ``r = 1`` with certain detection) returns
    a nonexistent component so the association carries zero weight.
    """
    update = _ComponentUpdate(comp, np.empty((0, 2)), models)
    return update.missed(rng), max(update.miss_contribution, 0.0)


def _scan_updates(
    hyp: GlobalHypothesis,
    measurements: np.ndarray,
    models: ModelSet,
    cache: dict[int, _ComponentUpdate],
) -> tuple[CostMatrix, list[_ComponentUpdate]]:
    updates = []
    for comp in hyp.components:
        key = id(comp)
        if key not in cache:
            cache[key] = _ComponentUpdate(comp, measurements, models)
        updates.append(cache[key])
    n, m = len(updates), measurements.shape[0]
    log_detect = np.full((n, m), -np.inf)
    log_miss = np.full(n, -np.inf)
    with np.errstate(divide="ignore"):
        for i, upd in enumerate(updates):
            log_detect[i] = np.log(upd.detect_contributions)
            if upd.miss_contribution > 0.0:
                log_miss[i] = math.log(upd.miss_contribution)
    return CostMatrix(log_detect=log_detect, log_miss=log_miss), updates


def build_cost_matrix(
    hyp: GlobalHypothesis,
    measurements: np.ndarray,
    models: ModelSet,
    rng: np.random.Generator,
    cache: dict | None = None,
) -> tuple[CostMatrix, UpdatedComponentTable]:
    """Update every component of a hypothesis against every measurement.

    ``cache`` (keyed by component identity) lets one update step share work
    across hypotheses holding the same component objects.
    """
    if cache is None:
        cache = {}
    measurements = np.asarray(measurements, dtype=float).reshape(-1, 2)
    cost, updates = _scan_updates(hyp, measurements, models, cache)
    table = UpdatedComponentTable(
        detected=tuple(
            tuple(upd.detected(j, rng) for j in range(cost.m)) for upd in updates
        ),
        missed=tuple(upd.missed(rng) for upd in updates),
    )
    return cost, table


def mbm_update(
    prior: MbmDensity,
    measurements: np.ndarray,
    models: ModelSet,
    rng: np.random.Generator,
    gibbs_config: GibbsConfig | None = None,
    exhaustive: bool = False,
) -> MbmDensity:
    """One measurement update of the full mixture.

    Each prior hypothesis contributes the distinct associations found by
    ``ceil(max_hypotheses * weight)`` Gibbs sweeps (or, with
    ``exhaustive=True``, every feasible association; intended for small
    problems and oracle tests). Posterior weights are the exact association
    weights, normalized jointly across all prior hypotheses; duplicate
    associations within one prior hypothesis are kept once.
    """
    if gibbs_config is None:
        gibbs_config = GibbsConfig()
    measurements = np.asarray(measurements, dtype=float).reshape(-1, 2)
    cache: dict[int, _ComponentUpdate] = {}
    log_weights: list[float] = []
    component_lists: list[tuple[BernoulliComponent, ...]] = []
    for hyp in prior.hypotheses:
        cost, updates = _scan_updates(hyp, measurements, models, cache)
        if exhaustive:
            associations = exhaustive_associations(cost.n, cost.m)
        else:
            k = max(math.ceil(gibbs_config.max_hypotheses * hyp.weight), 1)
            associations = gibbs_sample(cost, k, gibbs_config, rng)
        log_prior = math.log(hyp.weight) if hyp.weight > 0 else -np.inf
        for theta in associations:
            log_w = log_prior + cost.log_weight(theta)
            if log_w == -np.inf:
                continue
            components = tuple(
                updates[i].missed(rng) if j == 0 else updates[i].detected(j - 1, rng)
                for i, j in enumerate(theta)
            )
            log_weights.append(log_w)
            component_lists.append(components)
    if not log_weights:
        raise ValueError("no feasible association in any prior hypothesis")
    log_total = logsumexp(log_weights)
    weights = np.exp(np.asarray(log_weights) - log_total)
    weights /= weights.sum()
    return MbmDensity(
        hypotheses=tuple(
            GlobalHypothesis(weight=float(w), components=comps)
            for w, comps in zip(weights, component_lists)
        )
    )


def predict_component(
    comp: BernoulliComponent,
    models: ModelSet,
    rng: np.random.Generator,
) -> BernoulliComponent:
    """Survival-thin and propagate one component to the next scan.

    The predicted existence is the current existence times the weighted mean
    survival probability; particles are propagated through the motion model,
    reweighted by survival probability, and resampled to equal weights.
    """
    cloud = comp.cloud
    p_s = models.detection.survival_prob(cloud.states)
    raw = cloud.weights * p_s
    mass = float(raw.sum())
    propagated = transition_sample(cloud.states, models.motion, rng)
    if mass <= 0.0:
        # certain death: keep a placeholder cloud behind the zero existence
        return BernoulliComponent(
            existence=0.0, cloud=ParticleCloud.equal_weighted(propagated)
        )
    return BernoulliComponent(
        existence=comp.existence * mass, cloud=_resampled_cloud(propagated, raw, rng)
    )


def mbm_predict(
    posterior: MbmDensity,
    models: ModelSet,
    rng: np.random.Generator,
    particles_per_target: int = 1000,
) -> MbmDensity:
    """Predict the mixture one scan ahead and append the birth components.

    Hypothesis count and weights are unchanged exactly. The same freshly
    sampled birth components are appended to every hypothesis in identical
    order, so the equal-component-count invariant is preserved.
    """
    birth_components = tuple(
        BernoulliComponent(
            existence=float(models.birth.existences[b]),
            cloud=sample_birth_particles(
                b, models.birth, models.motion, particles_per_target, rng
            ),
        )
        for b in range(len(models.birth))
    )
    predicted_cache: dict[int, BernoulliComponent] = {}
    hypotheses = []
    for hyp in posterior.hypotheses:
        survivors = []
        for comp in hyp.components:
            key = id(comp)
            if key not in predicted_cache:
                predicted_cache[key] = predict_component(comp, models, rng)
            survivors.append(predicted_cache[key])
        hypotheses.append(
            GlobalHypothesis(
                weight=hyp.weight, components=tuple(survivors) + birth_components
            )
        )
    return MbmDensity(hypotheses=tuple(hypotheses))
