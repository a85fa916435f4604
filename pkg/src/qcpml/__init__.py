"""Frequency-domain Helmholtz solver for Dirichlet waveguides in 2D
quasi-cylindrical domains, with complex-scaling perfectly matched layers.

The library is organized around the pipeline

    geometry -> scaling -> fem -> solver
                  |          |
               spectral    oracle -> harness

with closed-form modal references on the straight strip serving as the
accuracy oracle for the truncated-layer solves.
"""

from .geometry import (
    DomainError,
    GeometryMap,
    LogShiftMap,
    PhiPsiMap,
    StraightMap,
    geometry_from_name,
    profile_from_name,
)
from .scaling import (
    PmlProfile,
    ProfileValidationError,
    coefficients,
    s_prime,
    s_value,
    scaled_metric,
    scaled_point,
    validate_profile,
)
from .spectral import (
    AdmissibilityError,
    SpectralData,
    admissibility,
    beta_max,
    essential_curves,
    thresholds,
    transverse_mode,
)
from .fem import (
    DiscreteProblem,
    GaussianSource,
    ManufacturedSource,
    ModeBandSource,
    TensorMesh,
    assemble,
    build_mesh,
    nodal_values,
    norms_on_region,
)
from .solver import (
    BandedFactorization,
    NearSingularError,
    eigs_near,
    factor,
    solve,
)
from .oracle import (
    ModalSolution,
    incoming_solution,
    oracle_selfcheck,
    outgoing_solution,
    project_source,
)
from .harness import (
    ConfigError,
    StudyConfig,
    fit_rate,
    load_config,
    run_convergence,
    run_decay_probe,
    run_solve,
    run_spectrum,
    run_stability,
    run_study,
)

__version__ = "0.1.0"
