"""One-dimensional transport metrics, geodesics, and stability certificates.

The raw metric W_p between mixing laws is computed exactly for atomic and
grid inputs by the merged-breakpoint quantile formula: sort both supports,
merge the cumulative-weight breakpoints, and sum |Q1 - Q2|^p over the
resulting cells.  The adapted metric d_{gamma,p} is W_p between the
pushforwards under the adapted transform s_gamma (x^gamma, or log x at
gamma = 0), computed in transformed coordinates with the same exact
machinery; for gamma < 0 the transform reverses quantile order, which the
implementation handles by sorting in transformed space.

Stability certificates compare W_p between two induced extreme-value laws
against constant * d_{gamma,p} between their mixing laws.  The induced-law
metric is an integral over quantile space, evaluated on a midpoint grid
with geometric endpoint refinement down to u = 1e-12; the truncated tail
mass is reported on the certificate.  Certificates whose adapted metric is
infinite are vacuously true and flagged as such.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, NumericalError, RegimeError
from .gevcore import adapted_inverse, adapted_transform, inverse_tail_transform, tail_transform
from .hevlaw import HevLaw, hev_cdf, kernel_expectation
from .typedist import (
    DEFAULT_GRID,
    TypeDistribution,
    as_atoms,
    laplace_inverse,
    moment,
    quantile,
    rescaled,
)

# Relative slack tolerance under which a certificate still passes; absorbs
# quadrature error in the induced-law metric.
CERT_REL_TOL = 1e-6
# Quantile-space truncation depth of the refined integration grid.
U_TRUNCATION = 1e-12


@dataclass(frozen=True)
class MetricReport:
    """A transport distance together with how it was computed."""

    p: float
    value: float
    method: str  # "exact-atomic" | "quantile-grid" | "moment-divergence"
    grid_size: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StabilityCertificate:
    """One checked instance of the transport stability inequality."""

    gamma: float
    p: float
    lhs: float
    metric: float
    constant: float
    bound: float
    slack: float
    passed: bool
    tolerance: float
    grid_size: int
    truncation: float
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


# -- raw and adapted metrics -------------------------------------------------


def _merged_cells(x1, w1, x2, w2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Common refinement of two quantile staircases.

    Returns (widths, q1, q2): cell widths in u-space plus the constant
    quantile value of each law on each cell.  Exact for atomic inputs.
    """
    c1 = np.cumsum(w1)
    c2 = np.cumsum(w2)
    edges = np.union1d(np.union1d(c1[:-1], c2[:-1]), [0.0, 1.0])
    edges = edges[(edges >= 0.0) & (edges <= 1.0)]
    widths = np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    i1 = np.minimum(np.searchsorted(c1, mids, side="left"), x1.size - 1)
    i2 = np.minimum(np.searchsorted(c2, mids, side="left"), x2.size - 1)
    keep = widths > 0.0
    return widths[keep], x1[i1][keep], x2[i2][keep]


def _atomic_wp(x1, w1, x2, w2, p: float) -> float:
    widths, q1, q2 = _merged_cells(x1, w1, x2, w2)
    return float(np.dot(widths, np.abs(q1 - q2) ** p) ** (1.0 / p))


def wasserstein_p(dist1: TypeDistribution, dist2: TypeDistribution, p: float) -> MetricReport:
    """W_p between two mixing laws.

    Exact for atomic/grid representations; pairs involving a parametric law
    integrate |Q1 - Q2|^p over a refined quantile grid.
    """
    if p < 1.0:
        raise DomainError("wasserstein order needs p >= 1")
    if dist1.kind in ("atoms", "grid") and dist2.kind in ("atoms", "grid"):
        x1, w1 = as_atoms(dist1)
        x2, w2 = as_atoms(dist2)
        return MetricReport(p=p, value=_atomic_wp(x1, w1, x2, w2, p), method="exact-atomic")
    mids, widths = _refined_u_grid(DEFAULT_GRID)
    q1 = quantile(dist1, mids)
    q2 = quantile(dist2, mids)
    value = float(np.dot(widths, np.abs(q1 - q2) ** p) ** (1.0 / p))
    return MetricReport(p=p, value=value, method="quantile-grid", grid_size=DEFAULT_GRID)


def _adapted_moment_finite(dist: TypeDistribution, gamma: float, p: float) -> bool:
    """Is the p-th moment of |s_gamma(X)| finite?"""
    if dist.kind in ("atoms", "grid"):
        return True
    if gamma == 0.0:
        return True  # both parametric families have all absolute log moments
    if dist.kind == "gamma":
        return dist.shape + gamma * p > 0.0
    return True  # lognormal has all real power moments


def adapted_distance(
    gamma: float, p: float, dist1: TypeDistribution, dist2: TypeDistribution
) -> MetricReport:
    """d_{gamma,p}: W_p between adapted-transform pushforwards.

    Returns an infinite-valued report (method "moment-divergence") when a
    transformed p-th moment diverges, which can happen for parametric laws
    with mass near zero and gamma < 0.
    """
    if p < 1.0:
        raise DomainError("adapted distance needs p >= 1")
    g = float(gamma)
    if not (_adapted_moment_finite(dist1, g, p) and _adapted_moment_finite(dist2, g, p)):
        return MetricReport(p=p, value=math.inf, method="moment-divergence")
    if dist1.kind in ("atoms", "grid") and dist2.kind in ("atoms", "grid"):
        y1, w1 = _adapted_atoms(dist1, g)
        y2, w2 = _adapted_atoms(dist2, g)
        return MetricReport(p=p, value=_atomic_wp(y1, w1, y2, w2, p), method="exact-atomic")
    mids, widths = _refined_u_grid(DEFAULT_GRID)
    q1 = _adapted_quantiles(dist1, g, mids)
    q2 = _adapted_quantiles(dist2, g, mids)
    value = float(np.dot(widths, np.abs(q1 - q2) ** p) ** (1.0 / p))
    return MetricReport(p=p, value=value, method="quantile-grid", grid_size=DEFAULT_GRID)


def _adapted_atoms(dist: TypeDistribution, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Atoms of the adapted pushforward, sorted ascending in the new scale."""
    x, w = as_atoms(dist)
    y = np.asarray(adapted_transform(gamma, x), dtype=float)
    if gamma < 0.0:  # decreasing transform reverses the order
        return y[::-1], w[::-1]
    return y, w


def _adapted_quantiles(dist: TypeDistribution, gamma: float, u: np.ndarray) -> np.ndarray:
    base = quantile(dist, 1.0 - u) if gamma < 0.0 else quantile(dist, u)
    return np.asarray(adapted_transform(gamma, base), dtype=float)


# -- stability certificates ---------------------------------------------------


def stability_constant(gamma: float, p: float) -> float:
    """Sharp coupling constant of the stability inequality.

    Gamma(1 - p*gamma)^(1/p) / gamma for gamma > 0 (needs p*gamma < 1),
    Gamma(1 + p*|gamma|)^(1/p) / |gamma| for gamma < 0, and 1 at gamma = 0:
    the p-norm of the exponential factor E^(-gamma) in the coupled
    representation, divided by |gamma|.
    """
    g = float(gamma)
    if p < 1.0:
        raise DomainError("stability constant needs p >= 1")
    if g == 0.0:
        return 1.0
    if g > 0.0:
        if p * g >= 1.0:
            raise RegimeError(
                f"stability constant undefined: E[E^(-p*gamma)] is infinite for "
                f"p*gamma = {p * g:g} >= 1"
            )
        return math.gamma(1.0 - p * g) ** (1.0 / p) / g
    return math.gamma(1.0 + p * abs(g)) ** (1.0 / p) / abs(g)


def _refined_u_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint cells on (0,1) with geometric refinement near both ends.

    The first and last base cells of the uniform n-grid are subdivided
    geometrically down to U_TRUNCATION; the remaining (0, 1e-12) tails are
    truncated and reported by the caller.
    """
    if n < 16:
        raise DomainError("integration grid needs at least 16 cells")
    first = 1.0 / n
    geo = [U_TRUNCATION]
    while geo[-1] * 2.0 < first:
        geo.append(geo[-1] * 2.0)
    geo.append(first)
    left = np.asarray(geo)
    interior = np.linspace(first, 1.0 - first, n - 1)
    right = 1.0 - left[::-1]
    edges = np.concatenate([left[:-1], interior, right[1:]])
    widths = np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    keep = widths > 0.0
    return mids[keep], widths[keep]


def induced_quantile(gamma: float, dist: TypeDistribution, u) -> np.ndarray:
    """Quantile of the induced extreme-value law: w_gamma(P0^{-1}(u))."""
    z = laplace_inverse(dist, u)
    return inverse_tail_transform(gamma, z)


def induced_wasserstein(
    gamma: float,
    p: float,
    dist1: TypeDistribution,
    dist2: TypeDistribution,
    grid_size: int = DEFAULT_GRID,
) -> tuple[float, float]:
    """W_p between the two induced laws, plus the truncated u-mass.

    Integrates |Q1 - Q2|^p over the refined quantile grid; exactness is
    limited by the grid, so callers should treat the value as a slightly
    truncated lower estimate with midpoint error.
    """
    mids, widths = _refined_u_grid(grid_size)
    q1 = np.asarray(induced_quantile(gamma, dist1, mids), dtype=float)
    q2 = np.asarray(induced_quantile(gamma, dist2, mids), dtype=float)
    value = float(np.dot(widths, np.abs(q1 - q2) ** p) ** (1.0 / p))
    return value, 2.0 * U_TRUNCATION


def certify_stability(
    gamma: float,
    p: float,
    dist1: TypeDistribution,
    dist2: TypeDistribution,
    grid_size: int = DEFAULT_GRID,
) -> StabilityCertificate:
    """Check W_p(induced1, induced2) <= constant * d_{gamma,p}(F1, F2).

    The certificate passes when the measured slack is no worse than
    -CERT_REL_TOL relative to the bound.  An infinite adapted metric makes
    the inequality vacuous; such certificates pass and carry a note.
    """
    g = float(gamma)
    constant = stability_constant(g, p)  # raises RegimeError when p*gamma >= 1
    metric = adapted_distance(g, p, dist1, dist2)
    if not math.isfinite(metric.value):
        return StabilityCertificate(
            gamma=g, p=p, lhs=math.nan, metric=metric.value, constant=constant,
            bound=math.inf, slack=math.inf, passed=True, tolerance=CERT_REL_TOL,
            grid_size=grid_size, truncation=0.0,
            note="vacuous: adapted metric is infinite",
        )
    lhs, truncation = induced_wasserstein(g, p, dist1, dist2, grid_size)
    bound = constant * metric.value
    slack = bound - lhs
    tol = CERT_REL_TOL * max(bound, 1e-12)
    return StabilityCertificate(
        gamma=g, p=p, lhs=lhs, metric=metric.value, constant=constant,
        bound=bound, slack=slack, passed=bool(slack >= -tol),
        tolerance=CERT_REL_TOL, grid_size=grid_size, truncation=truncation,
    )


# -- geodesics ---------------------------------------------------------------


def raw_geodesic(
    dist_a: TypeDistribution, dist_b: TypeDistribution, t: float
) -> TypeDistribution:
    """Displacement interpolation at time t via quantile averaging.

    The monotone (comonotone) coupling is the canonical optimal plan in one
    dimension for every p, and for p = 1 this selects the quantile geodesic
    among the many W_1 geodesics.  Exact for atomic inputs; parametric
    inputs interpolate on the common midpoint grid.
    """
    t = _check_time(t)
    if dist_a.kind in ("atoms", "grid") and dist_b.kind in ("atoms", "grid"):
        xa, wa = as_atoms(dist_a)
        xb, wb = as_atoms(dist_b)
        widths, qa, qb = _merged_cells(xa, wa, xb, wb)
        return TypeDistribution.from_atoms((1.0 - t) * qa + t * qb, widths)
    from .typedist import _midpoints

    u = _midpoints(DEFAULT_GRID)
    return TypeDistribution.from_quantile_grid(
        (1.0 - t) * quantile(dist_a, u) + t * quantile(dist_b, u)
    )


def adapted_geodesic(
    gamma: float, p: float, dist_a: TypeDistribution, dist_b: TypeDistribution, t: float
) -> TypeDistribution:
    """Geodesic of the adapted metric: interpolate in transformed scale.

    Pushes both laws through s_gamma, walks the quantile geodesic there,
    and pulls back; constant-speed in d_{gamma,p} by construction.
    """
    if p < 1.0:
        raise DomainError("adapted geodesic needs p >= 1")
    t = _check_time(t)
    g = float(gamma)
    if dist_a.kind in ("atoms", "grid") and dist_b.kind in ("atoms", "grid"):
        ya, wa = _adapted_atoms(dist_a, g)
        yb, wb = _adapted_atoms(dist_b, g)
        widths, qa, qb = _merged_cells(ya, wa, yb, wb)
        back = np.asarray(adapted_inverse(g, (1.0 - t) * qa + t * qb), dtype=float)
        return TypeDistribution.from_atoms(back, widths)
    from .typedist import _midpoints

    u = _midpoints(DEFAULT_GRID)
    qa = _adapted_quantiles(dist_a, g, u)
    qb = _adapted_quantiles(dist_b, g, u)
    back = np.asarray(adapted_inverse(g, (1.0 - t) * qa + t * qb), dtype=float)
    return TypeDistribution.from_quantile_grid(np.sort(back))


def _check_time(t: float) -> float:
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise DomainError("geodesic time must lie in [0, 1]")
    return t


# -- bridges and pointwise bounds ---------------------------------------------


@dataclass(frozen=True)
class BridgeReport:
    """Closed-form versus transport-computed renormalization distance."""

    gamma: float
    p: float
    mean: float
    closed_form: float
    transport: float
    induced_bound: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def renormalization_bridge(gamma: float, p: float, dist: TypeDistribution) -> BridgeReport:
    """Adapted distance between F and its mean-one rescaling F/m.

    Closed form: |1 - m^{-gamma}| * (E[X^{gamma p}])^{1/p} for gamma != 0
    and |log m| at gamma = 0; the transport field recomputes the same
    quantity through adapted_distance and the two must agree to 1e-9.
    induced_bound multiplies in the stability constant when it exists,
    bounding W_p between the induced laws of F and F/m.
    """
    if p < 1.0:
        raise DomainError("renormalization bridge needs p >= 1")
    g = float(gamma)
    m = dist.mean
    tilde = rescaled(dist, 1.0 / m)
    if g == 0.0:
        closed = abs(math.log(m))
    else:
        factor = abs(1.0 - m ** (-g))
        if factor == 0.0:
            closed = 0.0  # mean already one: distance is zero even if the moment diverges
        else:
            mom = moment(dist, g * p)
            closed = factor * (mom ** (1.0 / p) if math.isfinite(mom) else math.inf)
    via_transport = adapted_distance(g, p, dist, tilde).value
    if math.isfinite(closed) and math.isfinite(via_transport):
        if abs(closed - via_transport) > 1e-9 * max(1.0, closed):
            raise NumericalError(
                f"renormalization bridge mismatch: closed form {closed!r} vs "
                f"transport {via_transport!r}"
            )
    try:
        bound = stability_constant(g, p) * closed
    except RegimeError:
        bound = None
    return BridgeReport(
        gamma=g, p=p, mean=m, closed_form=closed, transport=via_transport,
        induced_bound=bound,
    )


@dataclass(frozen=True)
class PointwiseBound:
    """Cdf gap at one point against its transport bound."""

    x: float
    gap: float
    bound: float
    w1: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def pointwise_cdf_bound(
    gamma: float, dist1: TypeDistribution, dist2: TypeDistribution, x: float
) -> PointwiseBound:
    """|H1(x) - H2(x)| against v_gamma(x) * W_1(F1, F2).

    x must be interior to the kernel support: at or beyond an endpoint the
    tail transform degenerates and the comparison is empty.  passed means
    gap <= bound + 1e-12.
    """
    v = float(tail_transform(gamma, x))
    if not math.isfinite(v) or v == 0.0:
        raise DomainError("pointwise bound needs x strictly inside the kernel support")
    w1 = wasserstein_p(dist1, dist2, 1.0).value
    gap = abs(
        hev_cdf(HevLaw(float(gamma), dist1), x) - hev_cdf(HevLaw(float(gamma), dist2), x)
    )
    bound = v * w1
    return PointwiseBound(
        x=float(x), gap=gap, bound=bound, w1=w1, passed=bool(gap <= bound + 1e-12)
    )


@dataclass(frozen=True)
class BridgeComparison:
    """Adapted metric against its raw-metric bound."""

    gamma: float
    p: float
    adapted: float
    raw: float
    bound: float
    exponent: float
    support_floor: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def metric_bridge(
    gamma: float,
    p: float,
    dist1: TypeDistribution,
    dist2: TypeDistribution,
    support_floor: float | None = None,
) -> BridgeComparison:
    """One-sided comparison of d_{gamma,p} with W_p.

    Covered regimes: 0 < gamma <= 1 gives d <= W_p^gamma on all of (0,inf);
    gamma = 0 gives d <= W_p / a and gamma < 0 gives d <= |gamma| a^{gamma-1} W_p
    on supports bounded below by a, which the caller must supply.  gamma > 1
    has no such bound (the power map is not Hoelder-1) and raises RegimeError.
    """
    g = float(gamma)
    if g > 1.0:
        raise RegimeError("metric bridge covers gamma <= 1 only")
    adapted = adapted_distance(g, p, dist1, dist2).value
    raw = wasserstein_p(dist1, dist2, p).value
    if 0.0 < g <= 1.0:
        bound = raw**g
        exponent = g
        floor = None
    else:
        floor = support_floor
        if floor is None:
            raise DomainError(
                "metric bridge with gamma <= 0 needs an explicit support floor"
            )
        floor = float(floor)
        if floor <= 0.0:
            raise DomainError(
                "metric bridge with gamma <= 0 needs a positive support floor"
            )
        if min(dist1.min_support, dist2.min_support) < floor - 1e-12:
            raise DomainError("support floor exceeds an actual support minimum")
        exponent = 1.0
        bound = raw / floor if g == 0.0 else abs(g) * floor ** (g - 1.0) * raw
    if adapted > bound + 1e-9:
        raise NumericalError(
            f"adapted metric {adapted:.3e} exceeds bridge bound {bound:.3e}; "
            "this indicates a bug"
        )
    return BridgeComparison(
        gamma=g, p=p, adapted=adapted, raw=raw, bound=bound,
        exponent=exponent, support_floor=floor,
    )


@dataclass(frozen=True)
class FunctionalGap:
    """Difference of smooth functionals against the Lipschitz transport bound."""

    gap: float
    bound: float
    induced_w1: float

    def to_dict(self) -> dict:
        return asdict(self)


def lipschitz_functional_gap(
    gamma: float,
    dist1: TypeDistribution,
    dist2: TypeDistribution,
    psi,
    lipschitz_const: float,
    quad_nodes: int = 128,
    grid_size: int = DEFAULT_GRID,
) -> FunctionalGap:
    """|E1[psi(Z)] - E2[psi(Z)]| against L * W_1 of the induced laws."""
    if lipschitz_const < 0.0:
        raise DomainError("lipschitz constant must be nonnegative")
    g = float(gamma)
    e1 = kernel_expectation(HevLaw(g, dist1), psi, quad_nodes)
    e2 = kernel_expectation(HevLaw(g, dist2), psi, quad_nodes)
    gap = abs(e1 - e2)
    w1, _ = induced_wasserstein(g, 1.0, dist1, dist2, grid_size)
    bound = lipschitz_const * w1
    if gap > bound + 1e-6 * max(1.0, bound):
        raise NumericalError(
            f"functional gap {gap:.3e} exceeds its Lipschitz bound {bound:.3e} "
            "beyond numerical tolerance"
        )
    return FunctionalGap(gap=gap, bound=bound, induced_w1=w1)


# -- randomized suite inputs ---------------------------------------------------


def random_mean_one_atoms(
    seed: int, n_atoms: int = 3, loc_range: tuple[float, float] = (0.1, 10.0)
) -> TypeDistribution:
    """Seeded random mean-one atomic law for certification suites.

    Locations are log-uniform on loc_range, weights Dirichlet(1,...,1), and
    the whole support is rescaled to make the mean exactly one.
    """
    rng = np.random.default_rng(seed)
    lo, hi = loc_range
    locs = np.exp(rng.uniform(math.log(lo), math.log(hi), size=n_atoms))
    w = rng.dirichlet(np.ones(n_atoms))
    locs = locs / np.dot(w, locs)
    return TypeDistribution.from_atoms(locs, w)
