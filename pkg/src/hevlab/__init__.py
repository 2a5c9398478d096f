"""Heterogeneous extreme-value laws for mixed-Poisson opportunity arrival.

The library models the distribution of a random agent's best draw when
opportunities arrive at a Poisson rate scaled by a heterogeneous type
X ~ F: the limit law composes the Laplace transform of F with a GEV tail
transform.  Modules:

- ``typedist``: type distributions (atomic, quantile-grid, parametric),
  Laplace transforms, one-dimensional transport primitives, convex order.
- ``gevcore``: GEV tail machinery shared by everything downstream.
- ``hevlaw``: the composed law itself (cdf, quantiles, exact sampling,
  mixture functionals and their derivatives).
- ``transport``: Wasserstein/adapted metrics, stability certificates,
  geodesics, renormalization bridges, pointwise cdf bounds.
- ``horizon``: finite-size offer models (Pareto, exponential, Hall class),
  exact or second-order convergence diagnostics, maximum simulation.
- ``design``: KL-penalized linear design of the type distribution via
  exponential tilting, with duality checks.
- ``cli``: config-driven scenario runner (``hevlab`` console script).
"""

from .design import (
    CdfScore,
    ConstantScore,
    CustomScore,
    DvReport,
    ExpectedUtilityScore,
    PowerScore,
    TiltProblem,
    TiltSolution,
    dual_value,
    dv_check,
    expected_utility_score,
    kl_divergence,
    log_partition,
    pairwise_odds,
    solve_tilt,
    tilted_mean,
)
from .errors import (
    AdmissibilityError,
    BracketError,
    ConfigError,
    DomainError,
    HevlabError,
    NumericalError,
    RegimeError,
)
from .gevcore import (
    GAMMA_EPS,
    TailIndex,
    adapted_inverse,
    adapted_transform,
    frechet_cdf,
    gev_cdf,
    gev_quantile,
    inverse_tail_transform,
    support_interval,
    tail_transform,
)
from .hevlaw import (
    HevLaw,
    gateaux_derivative,
    hev_cdf,
    hev_quantile,
    kernel_expectation,
    sample,
)
from .horizon import (
    DiagnosticRow,
    HorizonLaw,
    MaxSample,
    OfferModel,
    StabilityPoint,
    finite_cdf,
    heterogeneity_kernel,
    normalized_cdf,
    pointwise_stability,
    second_order_diagnostic,
    simulate_max,
)
from .transport import (
    BridgeComparison,
    BridgeReport,
    FunctionalGap,
    MetricReport,
    PointwiseBound,
    StabilityCertificate,
    adapted_distance,
    adapted_geodesic,
    certify_stability,
    induced_quantile,
    induced_wasserstein,
    lipschitz_functional_gap,
    metric_bridge,
    pointwise_cdf_bound,
    random_mean_one_atoms,
    raw_geodesic,
    renormalization_bridge,
    stability_constant,
    wasserstein_p,
)
from .typedist import (
    ConvexOrderResult,
    SignedPerturbation,
    TypeDistribution,
    as_atoms,
    convex_order_leq,
    laplace_gap,
    laplace_inverse,
    laplace_moment,
    laplace_transform,
    misallocation_index,
    moment,
    quantile,
    rescaled,
    stop_loss,
    to_quantile_grid,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
