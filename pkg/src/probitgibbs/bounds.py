"""Closed-form convergence quantities: mixing-time upper bounds for the
two-block and collapsed samplers, the refined collapsed bound through the
diagonally-rescaled spectrum, the computable starting-KL bound for the prior
start, asymptotic eigenvalue limits for random designs, and the spectral-gap
route to an intercept-only lower bound backed by a 1-d quadrature oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .model import PosteriorCache
from .special import h, h_prime, h_second


@dataclass(frozen=True)
class BoundReport:
    lam_max: float
    lam_min: float
    kl_start_log: float
    da_upper: float
    cg_upper: float
    cg_refined_upper: float
    epsilon: float
    lower_intercept: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def da_mixing_bound(lam_max: float, log_kl_over_eps: float) -> float:
    """(2 + lam_max) * log(KL/eps) iterations of the two-block sampler."""
    if lam_max < 0:
        raise ValueError("lam_max must be nonnegative")
    if log_kl_over_eps <= 0:
        raise ValueError("log(KL/eps) must be positive")
    return (2.0 + lam_max) * log_kl_over_eps


def cg_mixing_bound(lam_max: float, lam_min: float, log_kl_over_eps: float) -> float:
    """(1 + lam_max)/(1 + lam_min) * log(KL/eps), in sweep units."""
    if not 0 <= lam_min <= lam_max:
        raise ValueError("need 0 <= lam_min <= lam_max")
    return (1.0 + lam_max) / (1.0 + lam_min) * log_kl_over_eps


def cg_refined_bound(cache: PosteriorCache, log_kl_over_eps: float) -> float:
    """lam_max(D^{1/2}(I+M)D^{1/2}) * log(KL/eps), D = diag((I+M)^{-1}).

    Never exceeds the simple (1+lam_max)/(1+lam_min) factor.
    """
    n = cache.Q.shape[0]
    if n == 0:
        return log_kl_over_eps
    # (I + M)^{-1} = Q and I + M = inv(Q); use the cached marginal precision.
    IM = np.linalg.inv(cache.Q)
    d_sqrt = np.sqrt(np.diag(cache.Q))
    A = (d_sqrt[:, None] * IM) * d_sqrt[None, :]
    factor = float(np.linalg.eigvalsh(0.5 * (A + A.T))[-1])
    return factor * log_kl_over_eps


def prior_start_kl_log_bound(n: int, lam_max: float) -> float:
    """log KL(mu, pi) <= log(2n + n log(2 (1 + n lam_max))) for the prior
    start (zero prior mean), uniformly in the responses."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if lam_max < 0:
        raise ValueError("lam_max must be nonnegative")
    return math.log(2.0 * n + n * math.log(2.0 * (1.0 + n * lam_max)))


def random_design_limits(c: float, r: float) -> tuple[float, float]:
    """Almost-sure limits of the extreme eigenvalues of the scaled Wishart:
    upper c(1+sqrt(r))^2 and lower c(1-sqrt(min(1,r)))^2."""
    if c <= 0 or r <= 0:
        raise ValueError("c and r must be positive")
    upper = c * (1.0 + math.sqrt(r)) ** 2
    lower = c * (1.0 - math.sqrt(min(1.0, r))) ** 2
    return upper, lower


def recipe_bound(b: float) -> tuple[float, float]:
    """Dimension-free mixing factors (2+2b, 1+2b) for the c = b/(1+r) prior."""
    if b <= 0:
        raise ValueError("b must be positive")
    return 2.0 + 2.0 * b, 1.0 + 2.0 * b


def intercept_design_spectral_cap(c: float, n: int, delta: float = 0.05) -> float:
    """Asymptotic cap (c + delta) * n on the top eigenvalue of X Q0^{-1} X'
    when the design carries an unscaled intercept column (Weyl's inequality
    splits the intercept rank-one block from the scaled remainder)."""
    if c <= 0 or n < 1 or delta < 0:
        raise ValueError("invalid arguments")
    return (c + delta) * n


class QuadratureError(RuntimeError):
    pass


def intercept_posterior_moments(
    c: float, n_pos: int, n_neg: int = 0
) -> tuple[float, float]:
    """Mean and variance of the 1-d intercept-only posterior
    pi(b) propto exp(-c b^2 / 2 - n_pos h(b) - n_neg h(-b))
    by adaptive quadrature over mode +/- 12 curvature-scaled widths."""
    if c <= 0:
        raise ValueError("c must be positive")

    def U(b):
        val = 0.5 * c * b * b
        if n_pos:
            val += n_pos * h(b)
        if n_neg:
            val += n_neg * h(-b)
        return val

    def U_prime(b):
        val = c * b
        if n_pos:
            val += n_pos * h_prime(b)
        if n_neg:
            val -= n_neg * h_prime(-b)
        return val

    if n_pos == 0 and n_neg == 0:
        mode = 0.0
    else:
        mode = brentq(U_prime, -200.0, 200.0, xtol=1e-13)
    # curvature is monotone per side (the potential's second derivative of a
    # one-sided factor only grows away from its own tail), so scale each side
    # by a lower bound on the curvature beyond the mode in that direction
    left_curv = c + n_pos * float(h_second(mode))
    right_curv = c + n_neg * float(h_second(-mode))
    lo = mode - 12.0 / math.sqrt(left_curv)
    hi = mode + 12.0 / math.sqrt(right_curv)
    U0 = float(U(mode))

    def integrate(f):
        # split at the mode: integrands are one-sided smooth there
        left, err_l = quad(f, lo, mode, epsabs=1e-15, epsrel=1e-11, limit=300)
        right, err_r = quad(f, mode, hi, epsabs=1e-15, epsrel=1e-11, limit=300)
        return left + right, err_l + err_r

    dens = lambda b: math.exp(-(float(U(b)) - U0))
    Z, errZ = integrate(dens)
    if not (Z > 0 and math.isfinite(Z)) or errZ > 1e-8 * Z:
        raise QuadratureError("normalizer quadrature did not converge")
    # centered moments avoid the m2 - mean^2 cancellation
    m1, _ = integrate(lambda b: (b - mode) * dens(b))
    mean = mode + m1 / Z
    m2c, errV = integrate(lambda b: (b - mean) ** 2 * dens(b))
    var = m2c / Z
    if not (var > 0 and math.isfinite(var)) or errV > 1e-8 * m2c:
        raise QuadratureError("variance quadrature did not converge")
    return mean, var


def var_beta1_quadrature(c: float, n: int) -> float:
    """Variance of the intercept posterior under fully imbalanced responses
    (all ones): pi(b) propto exp(-c b^2/2 - n h(b)). Relative error <= 1e-8."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return intercept_posterior_moments(c, n_pos=n, n_neg=0)[1]


def lower_bound_intercept(c: float, n: int, var_beta1: float, eps: float) -> float:
    """Spectral-gap lower bound on the two-block sampler's mixing time:
    max{0, ((1/c + n) Var - 1) / 2 * log(2/eps)}."""
    if c <= 0 or n < 0 or var_beta1 < 0 or not 0 < eps < 2:
        raise ValueError("invalid arguments")
    bracket = (1.0 / c + n) * var_beta1 - 1.0
    return max(0.0, 0.5 * bracket * math.log(2.0 / eps))


def bound_report(
    cache: PosteriorCache,
    n: int,
    epsilon: float,
    intercept_c: float | None = None,
) -> BoundReport:
    """Assemble every closed-form bound for one model instance.

    log(KL/eps) is made computable by plugging the prior-start KL bound.
    When ``intercept_c`` is given (intercept-only study), the quadrature
    lower bound is attached as well."""
    kl_log = prior_start_kl_log_bound(max(n, 1), cache.lam_max)
    log_term = kl_log + math.log(1.0 / epsilon)
    lower = None
    if intercept_c is not None:
        lower = lower_bound_intercept(
            intercept_c, n, var_beta1_quadrature(intercept_c, n), epsilon
        )
    return BoundReport(
        lam_max=cache.lam_max,
        lam_min=cache.lam_min,
        kl_start_log=kl_log,
        da_upper=da_mixing_bound(cache.lam_max, log_term),
        cg_upper=cg_mixing_bound(cache.lam_max, cache.lam_min, log_term),
        cg_refined_upper=cg_refined_bound(cache, log_term),
        epsilon=epsilon,
        lower_intercept=lower,
    )
