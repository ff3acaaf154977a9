"""Harmonic-curvature metrics generated by a phase ODE on diagonal matrices.

Modules:

* :mod:`~warpcurv.core`: diagonal-matrix algebra, the phase vector field, the first integral.
* :mod:`~warpcurv.flow`: integration, closed-form solutions, symmetry actions.
* :mod:`~warpcurv.tensor`: a chart-level curvature engine used as an independent oracle.
* :mod:`~warpcurv.construction`: the metric generated by a solution, classification, moduli sampling.
* :mod:`~warpcurv.warped`: general warped products and their closed-form curvature.
* :mod:`~warpcurv.phase`: linearization, scaling conjugacy, basin and blow-up experiments.
* :mod:`~warpcurv.cli`: command-line entry point.
"""

__version__ = "0.1.0"

from .core import (
    PhaseState,
    acceleration,
    eigenvalues_distinct,
    harmonic_defect,
    is_ricci_generic,
    phase_vector_field,
    ricci_eigenvalues,
    scalar_invariant,
)
from .errors import (
    ArgumentError,
    CapacityError,
    DimensionError,
    DomainError,
    IntegrationError,
    MetricError,
    WarpcurvError,
)
from .flow import (
    KElement,
    Kind,
    Scaling,
    Status,
    Trajectory,
    apply_symmetry,
    attainable_drift,
    explicit_solution,
    integrate,
    invariant_drift,
    k_equivalent,
    trivial_extend,
)
from .tensor import (
    CurvatureReport,
    MetricChart,
    ScalarField,
    bochner_residual,
    codazzi_defect,
    curvature_at,
    geodesic_residual,
)
from .construction import (
    ClassificationReport,
    Completeness,
    WarpChart,
    build_metric,
    classify,
    completeness_probe,
    harmonic_residual,
    sample_moduli,
    weyl_sectional,
    weyl_sectional_state,
)
from .warped import (
    WarpedProductSpec,
    appendix_nabla_ricci,
    appendix_ricci,
    assemble_metric,
    construction_as_warped,
    warhc_check,
)
from .phase import basin_experiment, blowup_experiment, linearize_zero, scaling_map

__all__ = [
    "PhaseState",
    "acceleration",
    "eigenvalues_distinct",
    "harmonic_defect",
    "is_ricci_generic",
    "phase_vector_field",
    "ricci_eigenvalues",
    "scalar_invariant",
    "ArgumentError",
    "CapacityError",
    "DimensionError",
    "DomainError",
    "IntegrationError",
    "MetricError",
    "WarpcurvError",
    "KElement",
    "Kind",
    "Scaling",
    "Status",
    "Trajectory",
    "apply_symmetry",
    "attainable_drift",
    "explicit_solution",
    "integrate",
    "invariant_drift",
    "k_equivalent",
    "trivial_extend",
    "CurvatureReport",
    "MetricChart",
    "ScalarField",
    "bochner_residual",
    "codazzi_defect",
    "curvature_at",
    "geodesic_residual",
    "ClassificationReport",
    "Completeness",
    "WarpChart",
    "build_metric",
    "classify",
    "completeness_probe",
    "harmonic_residual",
    "sample_moduli",
    "weyl_sectional",
    "weyl_sectional_state",
    "WarpedProductSpec",
    "appendix_nabla_ricci",
    "appendix_ricci",
    "assemble_metric",
    "construction_as_warped",
    "warhc_check",
    "basin_experiment",
    "blowup_experiment",
    "linearize_zero",
    "scaling_map",
]
