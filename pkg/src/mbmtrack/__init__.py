"""Sequential Monte Carlo multi-target tracking with multi-Bernoulli mixture
densities, Gibbs-sampled data association, an SMC-PHD baseline, and OSPA
evaluation on a range-bearing benchmark scenario.
"""

from .core import (
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
from .estimation import (
    FilterParams,
    StateEstimate,
    extract_states,
    prune_components,
    prune_hypotheses,
    select_map_hypothesis,
)
from .gibbs import (
    GibbsConfig,
    association_count,
    exhaustive_associations,
    gibbs_chain,
    gibbs_conditional,
    gibbs_sample,
)
from .mbm import (
    CostMatrix,
    UpdatedComponentTable,
    build_cost_matrix,
    mbm_predict,
    mbm_update,
    predict_component,
    update_detected,
    update_missed,
)
from .models import (
    BirthModel,
    ClutterModel,
    DetectionSurvival,
    MeasurementModel,
    ModelSet,
    MotionModel,
    clutter_intensity,
    measure,
    measurement_likelihood,
    sample_birth_particles,
    sample_clutter,
    transition_deterministic,
    transition_sample,
    wrap_angle,
)
from .ospa import OspaDistance, OspaParams, optimal_assignment, ospa_distance
from .phd import (
    PhdParams,
    PhdParticleSet,
    empty_phd,
    phd_estimate,
    phd_predict,
    phd_resample,
    phd_update,
)
from .sim import (
    BenchmarkResult,
    ScanMeasurements,
    Scenario,
    ScenarioError,
    TargetSpec,
    TruthFrame,
    benchmark_scenario,
    generate_measurements,
    generate_truth,
    load_scenario,
    run_filter,
    run_monte_carlo,
    save_scenario,
)

__version__ = "0.1.0"
