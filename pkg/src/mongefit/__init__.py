"""Optimal transport map estimation from unpaired samples.

Fits Brenier potentials (convex functions whose gradients are optimal
transport maps) by minimizing the empirical semidual over candidate
classes: a closed form for location-scale data, selection over finite
candidate lists, projected gradient descent over dictionary mixtures,
and brute-force direction search for single-direction potentials. A
synthetic-experiment harness measures map errors and verifies stability
bounds at small scale.
"""

from .conjugate import (
    ConjugateBatch,
    ConjugateSolution,
    OracleConfig,
    conjugate_batch,
    conjugate_iterative,
    conjugate_quadratic,
)
from .estimators import (
    DictionaryTransport,
    FiniteSelectionTransport,
    LocationScaleTransport,
    SpikedTransport,
)
from .exceptions import (
    ConvergenceError,
    NotStronglyConvexError,
    NumericalError,
    RankDeficiencyError,
    UsageError,
)
from .location_scale import (
    LocationScaleEstimate,
    empirical_moments,
    fit_location_scale,
    monge_matrix,
    spd_sqrt,
)
from .potentials import (
    MixturePotential,
    Potential,
    QuadraticPotential,
    QuadraticProfile,
    RegularityCertificate,
    SpikedPotential,
    potential_from_dict,
    potential_to_dict,
    probe_convexity,
)
from .semidual import (
    EmpiricalPair,
    SemidualFitReport,
    envelope_gradient,
    pgd_fit,
    project_simplex,
    select_finite,
    semidual_value,
)
from .synthetic import (
    ExperimentSpec,
    GaussianSource,
    StabilityReport,
    SweepRow,
    UniformCubeSource,
    mc_map_error,
    pushforward,
    random_quadratic,
    rate_sweep,
    sample_source,
    semidual_excess,
    sphere_grid,
    stability_check,
    substream,
)

__version__ = "0.1.0"

__all__ = [
    "ConjugateBatch",
    "ConjugateSolution",
    "OracleConfig",
    "conjugate_batch",
    "conjugate_iterative",
    "conjugate_quadratic",
    "DictionaryTransport",
    "FiniteSelectionTransport",
    "LocationScaleTransport",
    "SpikedTransport",
    "ConvergenceError",
    "NotStronglyConvexError",
    "NumericalError",
    "RankDeficiencyError",
    "UsageError",
    "LocationScaleEstimate",
    "empirical_moments",
    "fit_location_scale",
    "monge_matrix",
    "spd_sqrt",
    "MixturePotential",
    "Potential",
    "QuadraticPotential",
    "QuadraticProfile",
    "RegularityCertificate",
    "SpikedPotential",
    "potential_from_dict",
    "potential_to_dict",
    "probe_convexity",
    "EmpiricalPair",
    "SemidualFitReport",
    "envelope_gradient",
    "pgd_fit",
    "project_simplex",
    "select_finite",
    "semidual_value",
    "ExperimentSpec",
    "GaussianSource",
    "StabilityReport",
    "SweepRow",
    "UniformCubeSource",
    "mc_map_error",
    "pushforward",
    "random_quadratic",
    "rate_sweep",
    "sample_source",
    "semidual_excess",
    "sphere_grid",
    "stability_check",
    "substream",
]
