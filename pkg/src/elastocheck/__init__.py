"""Numerical checks of a neo-Hookean stored energy and of Schwarz alternating solves on rods."""

__version__ = "0.1.0"

from .convexity import (  # noqa: E402
    ConvexityViolation,
    SegmentProbe,
    convexity_on_segment,
    falsify_convexity,
    falsify_rank_one,
    polyconvexity_witness,
    reflection_counterexample,
)
from .energy import EnergyModel, EvalDomainError, ModelKind, energy, stress_analytic, stress_fd  # noqa: E402
from .schwarz import (  # noqa: E402
    Bar1DProblem,
    ElasticaProblem,
    SchwarzTrace,
    SubdomainSpec,
    buckling_experiment,
    convergence_rate_fit,
    critical_load_estimate,
    make_subdomains,
    monolithic_solve,
    schwarz_solve,
)
from .solver import ObjectiveFn, SolveResult, newton_minimize, stability_spectrum  # noqa: E402
