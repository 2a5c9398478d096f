"""Entropy-regularized design of the type distribution.

The problem: maximize  integral of psi dF  -  lambda * KL(F || F0)  over
mean-one F.  The optimizer is an exponential tilt of the baseline,
dF*/dF0 proportional to exp((psi(x) + eta* x) / lambda), where the scalar
eta* makes the tilted mean equal one; the dual function

    J(eta) = lambda * log Z(eta) - eta,
    Z(eta) = integral of exp((psi(x) + eta x) / lambda) dF0

is convex with J'(eta) = m(eta) - 1, and strong duality holds at eta*.
Everything here is computed on atoms: atomic baselines stay exact, and
parametric baselines are discretized to a quantile grid first (flagged on
the solution).  Intermediate sums go through logsumexp so large scores or
etas do not overflow.

Admissibility: on a grid standing for a continuous law, a divergent
continuous integral Z(eta) shows up as cell contributions that increase
toward a boundary of the grid instead of dying out; such evaluations
raise AdmissibilityError naming the failing end.  Finite atom sets are
always admissible.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, softmax

from .errors import AdmissibilityError, BracketError, DomainError, NumericalError
from .gevcore import tail_transform
from .hevlaw import _coupled_transform, _exp_weight_rule
from .typedist import DEFAULT_GRID, TypeDistribution, as_atoms, to_quantile_grid

MEAN_TOL = 1e-10
# Cells examined at each grid boundary by the divergence heuristic.
_TAIL_WINDOW = 12
_MAX_BRACKET = float(2**20)


# -- score functions -----------------------------------------------------------


@dataclass(frozen=True)
class CdfScore:
    """psi(x) = exp(-v_gamma(y) x): the cdf of the induced law at y.

    The design objective is then literally the probability that the
    extreme value stays at or below y, which is linear in F.
    """

    gamma: float
    y: float

    def __post_init__(self) -> None:
        v = float(tail_transform(self.gamma, self.y))
        if not math.isfinite(v):
            raise DomainError("cdf score needs y interior to the kernel support")

    @property
    def name(self) -> str:
        return "cdf"

    def values(self, x: np.ndarray) -> np.ndarray:
        v = float(tail_transform(self.gamma, self.y))
        with np.errstate(under="ignore"):
            return np.exp(-v * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ExpectedUtilityScore:
    """psi(x) = E[u(w_gamma(E/x))], E a unit exponential.

    The inner integral uses the same double-exponential rule as
    hevlaw.kernel_expectation, so integrating this score against F
    reproduces the kernel expectation of u under (gamma, F).
    """

    gamma: float
    utility: Callable[[np.ndarray], np.ndarray]
    quad_nodes: int = 128

    @property
    def name(self) -> str:
        return "expected-utility"

    def values(self, x: np.ndarray) -> np.ndarray:
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr <= 0.0):
            raise DomainError("expected-utility score needs positive x")
        e, de_w = _exp_weight_rule(self.quad_nodes)
        z = _coupled_transform(self.gamma, x_arr[..., None], e)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            vals = np.asarray(self.utility(z), dtype=float)
            out = vals @ de_w
        if not np.all(np.isfinite(out)):
            raise NumericalError("utility integral diverged at some x")
        return out


@dataclass(frozen=True)
class PowerScore:
    """psi(x) = coeff * x^rho, or coeff * x^(-rho) when inverse is set."""

    coeff: float
    rho: float
    inverse: bool = False

    def __post_init__(self) -> None:
        if self.rho <= 0.0:
            raise DomainError("power score needs rho > 0")

    @property
    def name(self) -> str:
        return "inverse-power" if self.inverse else "power"

    def values(self, x: np.ndarray) -> np.ndarray:
        expo = -self.rho if self.inverse else self.rho
        return self.coeff * np.asarray(x, dtype=float) ** expo


@dataclass(frozen=True)
class ConstantScore:
    """psi identically equal to value; the baseline stays optimal."""

    value: float = 0.0

    @property
    def name(self) -> str:
        return "constant"

    def values(self, x: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(x, dtype=float).shape, float(self.value))


@dataclass(frozen=True)
class CustomScore:
    """Black-box score; integrability is the caller's contract.

    Admissibility can only be probed numerically at the etas the solver
    visits, which is weaker than a hypothesis on a whole interval.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "custom"

    @property
    def name(self) -> str:
        return self.label

    def values(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)


def expected_utility_score(gamma: float, utility, x: float, quad_nodes: int = 128) -> float:
    """Scalar convenience wrapper for ExpectedUtilityScore at one x."""
    score = ExpectedUtilityScore(gamma=float(gamma), utility=utility, quad_nodes=quad_nodes)
    return float(score.values(np.asarray([float(x)]))[0])


# -- the tilt problem ----------------------------------------------------------


@dataclass(frozen=True)
class TiltProblem:
    """Baseline law, score, and entropy penalty lambda."""

    baseline: TypeDistribution
    score: object
    lam: float

    def __post_init__(self) -> None:
        if self.lam <= 0.0:
            raise DomainError("entropy penalty lambda must be positive")
        if not self.baseline.mean_one:
            raise DomainError(
                f"baseline must have mean one (got {self.baseline.mean!r})"
            )

    @cached_property
    def _materialized(self) -> tuple[np.ndarray, np.ndarray, bool, bool]:
        """(locations, weights, check_tails, discretized).

        Grid representations stand for continuous laws, so they keep the
        divergence heuristic on; finite atom sets are always admissible.
        """
        if self.baseline.kind == "atoms":
            x, w = as_atoms(self.baseline)
            return x, w, False, False
        if self.baseline.kind == "grid":
            x, w = as_atoms(self.baseline)
            return x, w, True, False
        grid = to_quantile_grid(self.baseline, DEFAULT_GRID)
        x, w = as_atoms(grid)
        return x, w, True, True

    def score_values(self) -> np.ndarray:
        x = self._materialized[0]
        psi = np.asarray(self.score.values(x), dtype=float)
        if psi.shape != x.shape:
            raise DomainError("score must return one value per atom")
        if not np.all(np.isfinite(psi)):
            raise NumericalError("score is not finite on the baseline support")
        return psi


def _check_grid_admissible(problem: TiltProblem, exponent: np.ndarray, eta: float) -> None:
    """Flag exponents whose continuous-law analogue has divergent Z(eta).

    exponent holds phi = (psi + eta x)/lambda per atom.  In quantile
    coordinates Z = integral over u in (0,1) of exp(phi(Q(u))), which
    diverges at an endpoint exactly when phi outruns the log of the
    remaining mass: near u = 1 that is s = -log(1-u), near u = 0 it is
    s = -log u.  The check measures d phi / d s over the boundary window
    of cells and flags a slope at or above 1, the integrability
    borderline (for s-regular integrands slope < 1 gives a convergent
    tail, slope > 1 a divergent one).  Finite atom baselines skip this:
    their Z is a finite sum.
    """
    x, w, check, _ = problem._materialized
    if not check or x.size < 4 * _TAIL_WINDOW:
        return
    u_mid = np.cumsum(w) - 0.5 * w
    k = _TAIL_WINDOW
    s_right = -np.log1p(-u_mid[-k:])
    d_right = s_right[-1] - s_right[0]
    if d_right > 0.0:
        slope = (exponent[-1] - exponent[-k]) / d_right
        if slope >= 1.0 - 1e-9:
            raise AdmissibilityError(
                f"Z(eta) diverges in the upper tail for eta={eta:g}: the "
                f"{problem.score.name} tilt exponent grows at rate "
                f"{slope:.3g} per unit of -log(1-u), at or beyond the "
                "integrability borderline of 1"
            )
    s_left = -np.log(u_mid[:k])
    d_left = s_left[0] - s_left[-1]
    if d_left > 0.0:
        slope = (exponent[0] - exponent[k - 1]) / d_left
        if slope >= 1.0 - 1e-9:
            raise AdmissibilityError(
                f"Z(eta) diverges at the lower support end for eta={eta:g}: "
                f"the {problem.score.name} tilt exponent grows at rate "
                f"{slope:.3g} per unit of -log u toward x = {x[0]:g}; the "
                "baseline needs a support floor"
            )


def _tilt_state(problem: TiltProblem, eta: float, psi: np.ndarray):
    """(log Z, tilted weights, tilted mean) at one eta, checked."""
    x, w, _, _ = problem._materialized
    exponent = (psi + eta * x) / problem.lam
    _check_grid_admissible(problem, exponent, eta)
    logits = exponent + np.log(w)
    log_z = float(logsumexp(logits))
    if not math.isfinite(log_z):
        raise AdmissibilityError(
            f"Z(eta) overflowed at eta={eta:g} for the {problem.score.name} score"
        )
    weights = softmax(logits)
    return log_z, weights, float(np.dot(weights, x))


def tilted_mean(problem: TiltProblem, eta: float) -> float:
    """Mean of the tilt dF_eta proportional to exp((psi + eta x)/lambda) dF0.

    Strictly increasing in eta unless the baseline is a single atom.
    """
    psi = problem.score_values()
    return _tilt_state(problem, float(eta), psi)[2]


def log_partition(problem: TiltProblem, eta: float) -> float:
    """log Z(eta), by logsumexp over the baseline atoms."""
    psi = problem.score_values()
    return _tilt_state(problem, float(eta), psi)[0]


def dual_value(problem: TiltProblem, eta: float) -> float:
    """The convex dual objective J(eta) = lambda log Z(eta) - eta."""
    return problem.lam * log_partition(problem, eta) - float(eta)


# -- solving -------------------------------------------------------------------


@dataclass(frozen=True)
class TiltSolution:
    """Solved design problem with both sides of the duality recorded."""

    eta_star: float
    optimizer: TypeDistribution
    primal_value: float
    dual_value: float
    mean_residual: float
    kl: float
    log_partition: float
    discretized: bool = False

    def to_dict(self) -> dict:
        x, w = as_atoms(self.optimizer)
        return {
            "eta_star": self.eta_star,
            "locations": [float(v) for v in x],
            "weights": [float(v) for v in w],
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "mean_residual": self.mean_residual,
            "kl": self.kl,
            "log_partition": self.log_partition,
            "discretized": self.discretized,
        }


def _largest_admissible(
    problem: TiltProblem, psi: np.ndarray, good: float, bad: float
) -> float:
    """Binary search for the admissibility boundary between two etas."""
    for _ in range(80):
        mid = 0.5 * (good + bad)
        try:
            _tilt_state(problem, mid, psi)
        except AdmissibilityError:
            bad = mid
        else:
            good = mid
        if abs(bad - good) <= 1e-12 * max(1.0, abs(good)):
            break
    return good


def _bracket_root(problem: TiltProblem, psi: np.ndarray) -> tuple[float, float]:
    """Find [lo, hi] with the mean residual changing sign.

    Expands a geometric bracket away from zero on the side the residual
    at eta = 0 demands, shrinking back from inadmissible etas; interiority
    failures surface as BracketError.
    """
    r0 = _tilt_state(problem, 0.0, psi)[2] - 1.0
    if r0 == 0.0:
        return 0.0, 0.0
    side = 1.0 if r0 < 0.0 else -1.0
    prev = 0.0
    b = 1.0
    while b <= _MAX_BRACKET:
        eta = side * b
        try:
            r = _tilt_state(problem, eta, psi)[2] - 1.0
        except AdmissibilityError as err:
            edge = _largest_admissible(problem, psi, prev, eta)
            r_edge = _tilt_state(problem, edge, psi)[2] - 1.0
            if r_edge * r0 < 0.0:
                return (prev, edge) if prev < edge else (edge, prev)
            raise BracketError(
                "the tilted mean never reaches 1 on the admissible eta range "
                f"(last residual {r_edge:.3e} at eta={edge:g}); the mean-one "
                "constraint is not interior for this score/baseline"
            ) from err
        if r * r0 < 0.0 or r == 0.0:
            return (prev, eta) if prev < eta else (eta, prev)
        prev = eta
        b *= 2.0
    raise BracketError(
        f"no sign change of the tilted mean residual up to |eta| = {_MAX_BRACKET:g}; "
        "the baseline may be too concentrated for this score"
    )


def solve_tilt(problem: TiltProblem) -> TiltSolution:
    """Solve the design problem: tilt until the mean constraint binds.

    Returns the normalized tilt at eta* with |m(eta*) - 1| <= 1e-10, the
    exact finite-sum primal value (objective minus lambda times KL), and
    the dual value lambda log Z(eta*) - eta*; strong duality makes the two
    agree to 1e-8 and the checks are genuinely two-sided since the primal
    never uses the dual formula.
    """
    x, w, _, discretized = problem._materialized
    psi = problem.score_values()
    lam = problem.lam
    if x.size == 1:
        # Degenerate baseline: every tilt is the baseline itself.  The
        # mean-one invariant pins the single atom at 1.
        value = float(psi[0])
        return TiltSolution(
            eta_star=0.0, optimizer=problem.baseline, primal_value=value,
            dual_value=value, mean_residual=abs(float(x[0]) - 1.0), kl=0.0,
            log_partition=value / lam, discretized=discretized,
        )

    def residual(eta: float) -> float:
        return _tilt_state(problem, eta, psi)[2] - 1.0

    lo, hi = _bracket_root(problem, psi)
    if lo == hi:
        eta = lo
    else:
        eta = float(brentq(residual, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=300))
    # Newton polish on m(eta) = 1 using m' = Var(tilt)/lambda.
    for _ in range(40):
        log_z, tw, mean = _tilt_state(problem, eta, psi)
        r = mean - 1.0
        if abs(r) <= 1e-13:
            break
        var = float(np.dot(tw, (x - mean) ** 2))
        if var <= 0.0:
            break
        eta -= r * lam / var
    log_z, tw, mean = _tilt_state(problem, eta, psi)
    if abs(mean - 1.0) > 1e-10:
        raise NumericalError(
            f"tilt solver stalled: |m(eta)-1| = {abs(mean - 1.0):.3e} at eta={eta!r}"
        )
    optimizer = TypeDistribution.from_atoms(x, tw)
    kl = float(np.dot(tw, np.log(tw / w)))
    primal = float(np.dot(tw, psi)) - lam * kl
    dual = lam * log_z - eta
    return TiltSolution(
        eta_star=float(eta), optimizer=optimizer, primal_value=primal,
        dual_value=dual, mean_residual=abs(mean - 1.0), kl=kl,
        log_partition=log_z, discretized=discretized,
    )


# -- entropy utilities ----------------------------------------------------------


def kl_divergence(dist: TypeDistribution, base: TypeDistribution) -> float:
    """Relative entropy over shared atoms; +inf off absolute continuity.

    Locations are compared exactly; the intended use is a reweighting of
    the same support (tilt outputs keep the baseline locations bit for
    bit).
    """
    x1, w1 = as_atoms(dist)
    x0, w0 = as_atoms(base)
    idx = np.searchsorted(x0, x1)
    inside = idx < x0.size
    if not np.all(inside):
        return math.inf
    if not np.all(x0[idx] == x1):
        return math.inf
    ratio = w1 / w0[idx]
    return float(np.dot(w1, np.log(ratio)))


def pairwise_odds(problem: TiltProblem, solution: TiltSolution, i: int, j: int) -> float:
    """Odds distortion (pi*_i / pi*_j) / (pi0_i / pi0_j).

    Computed from the solved weights and, independently, from the closed
    form exp((psi_i - psi_j + eta*(x_i - x_j)) / lambda); the two must
    agree to 1e-10.
    """
    x, w, _, _ = problem._materialized
    xs, ws = as_atoms(solution.optimizer)
    if not (0 <= i < x.size and 0 <= j < x.size):
        raise DomainError("atom index out of range")
    if xs.size != x.size or not np.all(xs == x):
        raise DomainError("solution does not share the baseline support")
    if w[i] <= 0.0 or w[j] <= 0.0:
        raise DomainError("pairwise odds need positive baseline weights")
    psi = problem.score_values()
    from_weights = (ws[i] / ws[j]) / (w[i] / w[j])
    closed = math.exp(
        (psi[i] - psi[j] + solution.eta_star * (x[i] - x[j])) / problem.lam
    )
    if abs(from_weights - closed) > 1e-10 * max(1.0, abs(closed)):
        raise NumericalError(
            f"odds mismatch: weights give {from_weights!r}, closed form {closed!r}"
        )
    return float(from_weights)


@dataclass(frozen=True)
class DvReport:
    """Attainment check of the log-integral variational identity."""

    lhs: float
    rhs_at_gibbs: float
    gap: float
    max_random_rhs: float
    weak_duality_ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


def dv_check(base: TypeDistribution, f, n_random: int = 100, seed: int = 0) -> DvReport:
    """log E[e^f] against sup over Q of (E_Q[f] - KL(Q||base)).

    The supremum is attained at the Gibbs tilt Q* with dQ*/dbase
    proportional to e^f; the gap there must vanish to 1e-10, and random
    reweightings of the same atoms must never beat the left side.
    """
    x, w = as_atoms(base)
    fv = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(fv)):
        raise NumericalError("f is not finite on the support")
    logits = fv + np.log(w)
    lhs = float(logsumexp(logits))
    q_star = softmax(logits)
    rhs_star = float(np.dot(q_star, fv) - np.dot(q_star, np.log(q_star / w)))
    gap = lhs - rhs_star
    rng = np.random.default_rng(seed)
    max_rhs = -math.inf
    for _ in range(int(n_random)):
        q = rng.dirichlet(np.ones(x.size))
        pos = q > 0.0
        rhs = float(np.dot(q, fv) - np.dot(q[pos], np.log(q[pos] / w[pos])))
        max_rhs = max(max_rhs, rhs)
    ok = bool(max_rhs <= lhs + 1e-10)
    return DvReport(
        lhs=lhs, rhs_at_gibbs=rhs_star, gap=gap, max_random_rhs=max_rhs,
        weak_duality_ok=ok,
    )
