"""metriclab: weak-type gradient functionals on metric measure spaces.

A numerical laboratory for doubling metric measure spaces: ball volumes
and distance indexing, pointwise slope estimation, weak-type quotient
spectra and their suprema, Sobolev/BV-style equivalence diagnostics,
Poincare constants over ball families, Muckenhoupt weights, interpolation
inequalities, and a reproducible experiment harness with a brute-force
oracle mode.
"""
from .fields import (
    GALLERY_KINDS,
    LipEstimate,
    ScalarField,
    default_schedule,
    gallery_make,
    gallery_profile,
    lip_field,
)
from .functionals import (
    CriticalSetReport,
    EquivalenceReport,
    bvsy_equivalence,
    critical_set_fraction,
    critical_set_sweep,
    gagliardo,
    sobolev_seminorm,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    OracleDisagreement,
    SweepFailure,
    SweepResult,
    build_field,
    build_space,
    convergence_sweep,
    load_field,
    load_report,
    load_space,
    run_experiment,
    save_field,
    save_space,
)
from .inequalities import (
    InequalityReport,
    InterpolationParams,
    gn_check,
    sobolev_weak_check,
    splitting_identity_error,
    splitting_membership_check,
)
from .mmspace import (
    DistanceIndex,
    MetricMeasureSpace,
    doubling_estimate,
    median_nn_spacing,
    metric_axiom_check,
)
from .poincare import (
    Ball,
    BallFamily,
    PoincareReport,
    ball_average,
    c1_battery_check,
    poincare_constant,
)
from .samplers import (
    cycle_graph,
    icosphere,
    random_cloud,
    sphere_fibonacci,
    torus_grid,
    uniform_grid_1d,
    uniform_grid_2d,
)
from .weaknorm import (
    BucketedSpectrum,
    DenseSpectrum,
    EngineParams,
    TailSummary,
    WeakNormResult,
    enumerate_pair_quotients,
    pair_quotients,
    weak_norm,
)
from .weights import (
    ApEstimate,
    CubeFamily,
    WeightSpec,
    ap_constant,
    growth_check,
    weighted_space,
)

__version__ = "0.1.0"

__all__ = [
    "ApEstimate",
    "Ball",
    "BallFamily",
    "BucketedSpectrum",
    "ConfigError",
    "CriticalSetReport",
    "CubeFamily",
    "DenseSpectrum",
    "DistanceIndex",
    "EngineParams",
    "EquivalenceReport",
    "ExperimentConfig",
    "GALLERY_KINDS",
    "InequalityReport",
    "InterpolationParams",
    "LipEstimate",
    "MetricMeasureSpace",
    "OracleDisagreement",
    "PoincareReport",
    "ScalarField",
    "SweepFailure",
    "SweepResult",
    "TailSummary",
    "WeakNormResult",
    "WeightSpec",
    "ap_constant",
    "ball_average",
    "build_field",
    "build_space",
    "bvsy_equivalence",
    "c1_battery_check",
    "convergence_sweep",
    "critical_set_fraction",
    "critical_set_sweep",
    "cycle_graph",
    "default_schedule",
    "doubling_estimate",
    "enumerate_pair_quotients",
    "gagliardo",
    "gallery_make",
    "gallery_profile",
    "gn_check",
    "growth_check",
    "icosphere",
    "lip_field",
    "load_field",
    "load_report",
    "load_space",
    "median_nn_spacing",
    "metric_axiom_check",
    "pair_quotients",
    "poincare_constant",
    "random_cloud",
    "run_experiment",
    "save_field",
    "save_space",
    "sobolev_seminorm",
    "sobolev_weak_check",
    "sphere_fibonacci",
    "splitting_identity_error",
    "splitting_membership_check",
    "torus_grid",
    "uniform_grid_1d",
    "uniform_grid_2d",
    "weak_norm",
    "weighted_space",
]
