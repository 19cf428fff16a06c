"""Scalar numerical primitives: Gaussian log-CDF, the probit potential and its
derivatives, and half-line truncated normal sampling via inverse CDF.

Everything here is a pure function of its inputs and vectorizes over numpy
arrays. The truncated normal sampler is written as a deterministic map of a
uniform variate so that two chains fed the same uniform produce comonotone
draws (the contraction mechanism used by the coupled kernels).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtri_exp

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Smallest positive double; used to keep degenerate deep-tail inversions
# strictly inside an open truncation region.
_TINY = np.nextafter(0.0, 1.0)


class HalfLine(enum.Enum):
    """Truncation region of a latent-variable draw: (0, inf) or (-inf, 0]."""

    POSITIVE = 1
    NONPOSITIVE = 0

    @classmethod
    def from_response(cls, y: int) -> "HalfLine":
        return cls.POSITIVE if y == 1 else cls.NONPOSITIVE


@dataclass(frozen=True)
class TruncNormParams:
    """Location/scale normal restricted to a half line."""

    loc: float
    scale: float
    region: HalfLine

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


def std_normal_logcdf(r):
    """log Phi(r), stable over the whole real line (no underflow to -inf)."""
    return log_ndtr(r)


def h(r):
    """Potential -log Phi(r) of a single probit likelihood factor."""
    return -log_ndtr(r)


def h_prime(r):
    """First derivative -phi(r)/Phi(r), computed fully in log space."""
    r = np.asarray(r, dtype=float)
    return -np.exp(-0.5 * r * r - _LOG_SQRT_2PI - log_ndtr(r))


def h_second(r):
    """Second derivative h'(r)^2 - r h'(r); lies in (0, 1) for all finite r."""
    hp = h_prime(r)
    return hp * (hp - np.asarray(r, dtype=float))


def _invcdf_positive(loc, scale, u):
    # Survival form: Phi(-xi) = (1-u) Phi(-a) with a = -loc/scale, xi = (x-loc)/scale.
    loc = np.asarray(loc, dtype=float)
    xi = -ndtri_exp(np.log1p(-np.asarray(u, dtype=float)) + log_ndtr(loc / scale))
    return loc + scale * xi


def _invcdf_nonpositive(loc, scale, u):
    # CDF form: Phi(xi) = u Phi(b) with b = -loc/scale.
    loc = np.asarray(loc, dtype=float)
    xi = ndtri_exp(np.log(np.asarray(u, dtype=float)) + log_ndtr(-loc / scale))
    return loc + scale * xi


def truncnorm_invcdf(loc, scale, positive, u):
    """Vectorized quantile map of half-line truncated normals.

    ``positive`` is a boolean array selecting the (0, inf) region per entry;
    False entries use (-inf, 0]. Outputs are clamped strictly into their
    region, which only triggers when the location sits so deep in the
    truncated-away tail that the quantile rounds onto the boundary.
    """
    loc = np.asarray(loc, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    u = np.asarray(u, dtype=float)
    out = np.where(
        positive,
        _invcdf_positive(loc, scale, u),
        _invcdf_nonpositive(loc, scale, u),
    )
    out = np.where(positive & (out <= 0.0), _TINY, out)
    out = np.where(~positive & (out > 0.0), 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def truncnorm_sample(params: TruncNormParams, u: float) -> float:
    """Inverse-CDF draw: returns F^{-1}(u) for the given truncated normal.

    Strictly increasing in u; feeding u ~ Uniform(0,1) yields an exact draw.
    """
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    return truncnorm_invcdf(
        params.loc, params.scale, params.region is HalfLine.POSITIVE, u
    )


def truncnorm_logpdf(params: TruncNormParams, x: float) -> float:
    """Log density of the half-line truncated normal; -inf outside the region."""
    if params.region is HalfLine.POSITIVE:
        if x <= 0.0:
            return -math.inf
        log_mass = log_ndtr(params.loc / params.scale)
    else:
        if x > 0.0:
            return -math.inf
        log_mass = log_ndtr(-params.loc / params.scale)
    xi = (x - params.loc) / params.scale
    return -0.5 * xi * xi - _LOG_SQRT_2PI - math.log(params.scale) - log_mass


def truncnorm_mean_var(params: TruncNormParams) -> tuple[float, float]:
    """Closed-form mean and variance via the Mills ratio.

    For the (0, inf) region with standardized bound a = -loc/scale the mean is
    loc + scale*lambda(a) with lambda(a) = phi(a)/(1-Phi(a)), and the variance
    is scale^2 * (1 - lambda(a)(lambda(a) - a)). The (-inf, 0] region follows
    by reflection.
    """
    a = -params.loc / params.scale
    if params.region is HalfLine.POSITIVE:
        lam = -h_prime(-a)  # phi(a)/Phi(-a)
        mean = params.loc + params.scale * lam
        var = params.scale**2 * (1.0 - lam * (lam - a))
    else:
        lam = -h_prime(a)  # phi(a)/Phi(a) for the upper bound at 0
        mean = params.loc - params.scale * lam
        var = params.scale**2 * (1.0 - lam * (lam + a))
    return float(mean), float(var)


def uniform_open(rng: np.random.Generator, size=None):
    """Uniform draws guaranteed inside the open interval (0, 1)."""
    u = rng.random(size)
    if size is None:
        return float(u) if u > 0.0 else 2.0**-53
    u[u == 0.0] = 2.0**-53
    return u
