"""Gauss-Galerkin quadrature method of moments for polynomial SDEs and McKean-Vlasov SDEs."""

from .dynamics import (
    GGState,
    IntegrationAborted,
    IntegratorConfig,
    Trajectory,
    gg_rhs,
    integrate,
    moment_trajectory,
)
from .lagrange import NodeCollisionError, build_tableau
from .model import (
    MVSDEModel,
    SDEModel,
    dawson_shiino,
    effective_drift,
    generator_apply_monomial,
    ornstein_uhlenbeck,
    validate,
)
from .polynomial import Polynomial, derivative, eval_poly, hermite, real_roots
from .quadrature import QuadratureMeasure, gauss_christoffel, gauss_hermite_init, moments_of
from .stationary import (
    BifurcationDiagram,
    StationarySolution,
    bifurcation_sweep,
    hermite_seed,
    instability_threshold,
    scale_solution,
    solve_stationary,
    stability_probe,
    symmetric_stationary,
)

__version__ = "0.1.0"

__all__ = [
    "BifurcationDiagram",
    "GGState",
    "IntegrationAborted",
    "IntegratorConfig",
    "MVSDEModel",
    "NodeCollisionError",
    "Polynomial",
    "QuadratureMeasure",
    "SDEModel",
    "StationarySolution",
    "Trajectory",
    "bifurcation_sweep",
    "build_tableau",
    "dawson_shiino",
    "derivative",
    "effective_drift",
    "eval_poly",
    "gauss_christoffel",
    "gauss_hermite_init",
    "generator_apply_monomial",
    "gg_rhs",
    "hermite",
    "hermite_seed",
    "instability_threshold",
    "integrate",
    "moment_trajectory",
    "moments_of",
    "ornstein_uhlenbeck",
    "real_roots",
    "scale_solution",
    "solve_stationary",
    "stability_probe",
    "symmetric_stationary",
    "validate",
]
