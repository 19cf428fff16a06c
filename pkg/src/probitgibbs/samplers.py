"""Markov kernels targeting the joint posterior of the latent vector and the
coefficients: the two-block data-augmentation sampler, the random-scan
collapsed (latent-only) sampler with O(p) incremental conditional updates,
the intercept-boosted variant with an extra Metropolis move, and the
linear-predictor marginal chain for the p > n regime.

Each chain owns its state and RNG; the model and cache are shared read-only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .model import PosteriorCache, ProbitModel, log_posterior_beta
from .special import truncnorm_invcdf, uniform_open


class DegenerateLeverageError(RuntimeError):
    """A leverage value reached 1 and the site conditional is improper."""


@dataclass
class ChainState:
    """Mutable state of one chain.

    ``beta`` is None for chains that never instantiate coefficients (the
    collapsed sampler and the linear-predictor marginal chain); ``eta`` holds
    X beta for coefficient chains and the sampled predictor for the marginal
    chain; ``B`` caches V (X'z + Q0 m), the coefficient conditional mean.
    """

    z: np.ndarray
    beta: np.ndarray | None
    eta: np.ndarray | None
    B: np.ndarray | None

    def copy(self) -> "ChainState":
        return ChainState(
            z=self.z.copy(),
            beta=None if self.beta is None else self.beta.copy(),
            eta=None if self.eta is None else self.eta.copy(),
            B=None if self.B is None else self.B.copy(),
        )


@dataclass(frozen=True)
class RwmConfig:
    """Proposal scale of the intercept Metropolis step."""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass
class RwmStats:
    proposals: int = 0
    accepts: int = 0

    @property
    def rate(self) -> float:
        return self.accepts / self.proposals if self.proposals else math.nan


def refresh_B(z: np.ndarray, cache: PosteriorCache) -> np.ndarray:
    """V (X'z + Q0 m) recomputed from scratch (O(np))."""
    return cache.S @ z + cache.V_Q0m


def da_step(
    state: ChainState,
    cache: PosteriorCache,
    model: ProbitModel,
    rng: np.random.Generator,
) -> ChainState:
    """One full sweep of the two-block sampler: latent block, then beta."""
    u = uniform_open(rng, model.n)
    state.z = truncnorm_invcdf(state.eta, 1.0, cache.positive, u)
    state.B = refresh_B(state.z, cache)
    state.beta = state.B + cache.chol_V @ rng.standard_normal(model.p)
    state.eta = model.X @ state.beta
    return state


def cg_site_conditional(
    state: ChainState, i: int, cache: PosteriorCache, model: ProbitModel
) -> tuple[float, float]:
    """Mean and standard deviation of the site-i latent conditional.

    mu_i = (x_i'B - h_i z_i) / (1 - h_i) with B = V(X'z + Q0 m); the
    conditional variance is 1 / (1 - h_i)."""
    h_i = float(cache.leverage[i])
    omega = 1.0 - h_i
    if omega <= 1e-12:
        raise DegenerateLeverageError(f"leverage at site {i} is numerically 1")
    mu = (float(model.X[i] @ state.B) - h_i * float(state.z[i])) / omega
    return mu, omega**-0.5


def cg_site_step(
    state: ChainState,
    i: int,
    cache: PosteriorCache,
    model: ProbitModel,
    rng: np.random.Generator,
) -> ChainState:
    """Redraw one latent coordinate and shift the cached B at O(p) cost."""
    mu, sd = cg_site_conditional(state, i, cache, model)
    z_new = truncnorm_invcdf(mu, sd, bool(cache.positive[i]), uniform_open(rng))
    state.B += cache.S[:, i] * (z_new - state.z[i])
    state.z[i] = z_new
    return state


def cg_sweep(
    state: ChainState,
    cache: PosteriorCache,
    model: ProbitModel,
    rng: np.random.Generator,
) -> ChainState:
    """n random-site updates (one comparable unit of work), then a full
    recompute of B to bound incremental floating-point drift."""
    idx = rng.integers(0, model.n, size=model.n)
    for i in idx:
        cg_site_step(state, int(i), cache, model, rng)
    state.B = refresh_B(state.z, cache)
    return state


def da_mod_step(
    state: ChainState,
    cache: PosteriorCache,
    model: ProbitModel,
    rwm: RwmConfig,
    rng: np.random.Generator,
    stats: RwmStats | None = None,
) -> ChainState:
    """Beta block, then a Metropolis move on the first coordinate, then the
    latent block. The first column of X must be the intercept (caller's
    responsibility)."""
    state.B = refresh_B(state.z, cache)
    state.beta = state.B + cache.chol_V @ rng.standard_normal(model.p)
    state.eta = model.X @ state.beta

    delta = rwm.sigma * rng.standard_normal()
    beta_prop = state.beta.copy()
    beta_prop[0] += delta
    eta_prop = state.eta + delta * model.X[:, 0]  # O(n), no new matvec
    log_ratio = log_posterior_beta(model, cache, beta_prop, eta=eta_prop) - (
        log_posterior_beta(model, cache, state.beta, eta=state.eta)
    )
    accepted = math.log(uniform_open(rng)) < log_ratio
    if accepted:
        state.beta = beta_prop
        state.eta = eta_prop
    if stats is not None:
        stats.proposals += 1
        stats.accepts += int(accepted)

    u = uniform_open(rng, model.n)
    state.z = truncnorm_invcdf(state.eta, 1.0, cache.positive, u)
    return state


def da_marginal_step(
    state: ChainState,
    cache: PosteriorCache,
    model: ProbitModel,
    rng: np.random.Generator,
) -> ChainState:
    """Latent block, then the n-dimensional linear-predictor block (O(n^2)).

    The latent marginal law evolves exactly as under da_step; requires the
    wide-path factor chol_W (p > n)."""
    if cache.chol_W is None:
        raise ValueError("marginal chain requires the wide-path factor chol_W (p > n)")
    u = uniform_open(rng, model.n)
    state.z = truncnorm_invcdf(state.eta, 1.0, cache.positive, u)
    mean = cache.w0 + cache.W @ state.z
    state.eta = mean + cache.chol_W @ rng.standard_normal(model.n)
    state.beta = None
    state.B = None
    return state


def sample_prior_start(
    cache: PosteriorCache, model: ProbitModel, rng: np.random.Generator
) -> ChainState:
    """Draw beta from the prior and the latent vector from its conditional."""
    xi = rng.standard_normal(model.p)
    beta = model.prior.mean + solve_triangular(cache.chol_Q0, xi, lower=True, trans="T")
    eta = model.X @ beta
    z = truncnorm_invcdf(eta, 1.0, cache.positive, uniform_open(rng, model.n))
    return ChainState(z=z, beta=beta, eta=eta, B=refresh_B(z, cache))


KERNELS = ("da", "cg", "da_mod", "da_marginal")


def run_chain(
    model: ProbitModel,
    cache: PosteriorCache,
    kernel: str,
    steps: int,
    rng: np.random.Generator,
    burnin: int = 0,
    thin: int = 1,
    rwm: RwmConfig | None = None,
    keep_z: bool = False,
    stats: RwmStats | None = None,
):
    """Run one chain from the prior start; returns (betas, zs or None).

    For the collapsed sampler one step is one full sweep (n site updates) and
    a beta draw is attached to each retained state so output is comparable
    across kernels; the marginal chain retains no beta."""
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    state = sample_prior_start(cache, model, rng)
    betas, zs = [], []
    rwm = rwm or RwmConfig()
    for t in range(steps):
        if kernel == "da":
            da_step(state, cache, model, rng)
        elif kernel == "cg":
            cg_sweep(state, cache, model, rng)
        elif kernel == "da_mod":
            da_mod_step(state, cache, model, rwm, rng, stats=stats)
        else:
            da_marginal_step(state, cache, model, rng)
        if t >= burnin and (t - burnin) % thin == 0:
            if kernel == "cg":
                beta = state.B + cache.chol_V @ rng.standard_normal(model.p)
            elif kernel == "da_marginal":
                beta = None
            else:
                beta = state.beta.copy()
            betas.append(beta)
            if keep_z:
                zs.append(state.z.copy())
    return betas, (zs if keep_z else None)


def write_draws_csv(path, betas, zs=None) -> None:
    """One row per retained iteration: beta_1..beta_p (and z_1..z_n)."""
    n_rows = max(len(betas), len(zs or []))
    p = len(betas[0]) if betas and betas[0] is not None else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"beta_{j + 1}" for j in range(p)]
        if zs is not None:
            header += [f"z_{i + 1}" for i in range(len(zs[0]))]
        writer.writerow(header)
        for t in range(n_rows):
            row = []
            if p:
                row += [f"{v:.17g}" for v in betas[t]]
            if zs is not None:
                row += [f"{v:.17g}" for v in zs[t]]
            writer.writerow(row)
