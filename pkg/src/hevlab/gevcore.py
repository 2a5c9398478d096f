"""Generalized extreme-value kernel: cdf, tail transforms, adapted coordinates.

The three classical regimes are handled by one real tail index gamma:
Frechet for gamma > 0, Gumbel for gamma = 0, Weibull for gamma < 0.  All
functions are vectorized over their real argument and apply the endpoint
conventions

    gamma > 0: cdf is 0 at and below x = -1/gamma,
    gamma < 0: cdf is 1 at and above x = -1/gamma.

Tail indices with |gamma| below GAMMA_EPS are evaluated on the Gumbel
branch with a first-order series correction so the bridge across gamma = 0
is continuous to well below 1e-6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Below this the (1 + gamma*x)^(-1/gamma) form is evaluated by its series
# around gamma = 0.
GAMMA_EPS = 1e-8


@dataclass(frozen=True)
class TailIndex:
    """Real tail index with its regime tag."""

    gamma: float

    def __post_init__(self) -> None:
        g = float(self.gamma)
        if not math.isfinite(g):
            raise DomainError(f"tail index must be finite, got {g}")
        object.__setattr__(self, "gamma", g)

    @property
    def regime(self) -> str:
        if self.gamma > 0.0:
            return "frechet"
        if self.gamma < 0.0:
            return "weibull"
        return "gumbel"

    def __float__(self) -> float:
        return self.gamma


def _gamma_value(gamma: float | TailIndex) -> float:
    g = float(gamma)
    if not math.isfinite(g):
        raise DomainError(f"tail index must be finite, got {g}")
    return g


def support_interval(gamma: float | TailIndex) -> tuple[float, float]:
    """Open interval on which the gev cdf is strictly between 0 and 1."""
    g = _gamma_value(gamma)
    if g > 0.0:
        return (-1.0 / g, math.inf)
    if g < 0.0:
        return (-math.inf, -1.0 / g)
    return (-math.inf, math.inf)


def tail_transform(gamma: float | TailIndex, x):
    """v_gamma(x) = (1 + gamma*x)^(-1/gamma), the -log of the gev cdf.

    Returns +inf at and below the lower endpoint (gamma > 0) and 0 at and
    above the upper endpoint (gamma < 0).
    """
    g = _gamma_value(gamma)
    x = np.asarray(x, dtype=float)
    if abs(g) < GAMMA_EPS:
        # Gumbel branch with series correction: exp(-x + g*x^2/2).
        out = np.exp(-x + 0.5 * g * x * x)
        return out if out.ndim else float(out)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        base = 1.0 + g * x
        inside = base > 0.0
        logv = np.where(inside, np.log1p(g * np.where(inside, x, 0.0)), 0.0)
        out = np.where(inside, np.exp(-logv / g), math.inf if g > 0.0 else 0.0)
    return out if out.ndim else float(out)


def inverse_tail_transform(gamma: float | TailIndex, t):
    """w_gamma(t) = (t^(-gamma) - 1)/gamma for t > 0; -log t at gamma = 0.

    Strictly decreasing inverse of the tail transform:
    w_gamma(v_gamma(x)) = x on the support interval.
    """
    g = _gamma_value(gamma)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("inverse tail transform needs t >= 0")
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        logt = np.log(t)
        if g == 0.0:
            out = -logt
        elif abs(g) < GAMMA_EPS:
            # Series inverse of the forward Gumbel branch, same truncation
            # order, so round trips across gamma = 0 stay consistent.  The
            # exact quotient below loses all precision once g*log(t)
            # underflows toward the subnormal range.
            out = -logt + 0.5 * g * logt * logt
            if g > 0.0:
                out = np.where(np.isposinf(logt), -1.0 / g, out)
            else:
                out = np.where(t == 0.0, -1.0 / g, out)
        else:
            # expm1 keeps the bridge down to GAMMA_EPS continuous.
            out = np.expm1(-g * logt) / g
            # t = 0 maps to the upper endpoint: +inf for gamma >= 0, -1/gamma
            # is approached from below for gamma < 0 yet w(0) = -1/g exactly.
            if g < 0.0:
                out = np.where(t == 0.0, -1.0 / g, out)
    return out if out.ndim else float(out)


def gev_cdf(gamma: float | TailIndex, x):
    """Generalized extreme-value cdf exp(-v_gamma(x)) with endpoint rules."""
    v = tail_transform(gamma, x)
    v = np.asarray(v, dtype=float)
    with np.errstate(under="ignore"):
        out = np.exp(-v)
    return out if out.ndim else float(out)


def gev_quantile(gamma: float | TailIndex, u):
    """Inverse gev cdf: w_gamma(-log u) for u in (0, 1)."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise DomainError("gev quantile needs u in (0, 1)")
    out = inverse_tail_transform(gamma, -np.log(u))
    return out if np.ndim(out) else float(out)


def adapted_transform(gamma: float | TailIndex, x):
    """s_gamma(x) = x^gamma for gamma != 0, log x at gamma = 0 (x > 0)."""
    g = _gamma_value(gamma)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("adapted transform needs x > 0")
    out = np.log(x) if g == 0.0 else np.power(x, g)
    return out if out.ndim else float(out)


def adapted_inverse(gamma: float | TailIndex, y):
    """Inverse of the adapted transform: y^(1/gamma), or exp(y) at gamma = 0."""
    g = _gamma_value(gamma)
    y = np.asarray(y, dtype=float)
    if g == 0.0:
        out = np.exp(y)
    else:
        if np.any(y <= 0.0):
            raise DomainError("adapted inverse needs y > 0 when gamma != 0")
        out = np.power(y, 1.0 / g)
    return out if out.ndim else float(out)


def frechet_cdf(gamma: float | TailIndex, z):
    """Standard Frechet cdf exp(-z^(-1/gamma)) on z > 0, for gamma > 0.

    Equals gev_cdf(gamma, (z - 1)/gamma); exposed because product-form
    arguments are most natural in these coordinates.
    """
    g = _gamma_value(gamma)
    if g <= 0.0:
        raise DomainError("frechet form needs gamma > 0")
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(z > 0.0, np.exp(-np.power(np.where(z > 0.0, z, 1.0), -1.0 / g)), 0.0)
    return out if out.ndim else float(out)
