"""Coupled versions of every kernel plus the lag-L meeting-time simulator.

Three primitive couplings are composed into kernel couplings with a two-step
switch: while the chains are farther apart than a threshold they share
randomness (inverse-CDF uniforms for the latent sites, one Gaussian noise
vector for the coefficient block), which contracts the distance; once close,
per-site maximal couplings and a reflection-maximal Gaussian coupling give
exact meetings with the largest possible probability. Meetings are bit-exact
and sticky.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .model import PosteriorCache, ProbitModel, build_cache, log_posterior_beta
from .samplers import (
    ChainState,
    RwmConfig,
    cg_site_conditional,
    cg_sweep,
    da_marginal_step,
    da_mod_step,
    da_step,
    refresh_B,
    sample_prior_start,
)
from .special import (
    HalfLine,
    TruncNormParams,
    truncnorm_invcdf,
    truncnorm_logpdf,
    truncnorm_sample,
    uniform_open,
)

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

DA_EPSILON = 1.0 / 10.0
CG_EPSILON = 1.0 / 1000.0


@dataclass(frozen=True)
class CouplingConfig:
    """Two-step switch threshold, lag, and censoring horizon."""

    eps: float
    lag: int
    max_sweeps: int = 100_000

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.lag < 1:
            raise ValueError("lag must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")


def default_coupling_config(kernel: str, lag: int, max_sweeps: int = 100_000):
    """Kernel-appropriate switch thresholds: 1/10 for coefficient-block
    kernels, 1/1000 for the collapsed sampler."""
    eps = CG_EPSILON if kernel == "cg" else DA_EPSILON
    return CouplingConfig(eps=eps, lag=lag, max_sweeps=max_sweeps)


@dataclass
class CoupledPair:
    state1: ChainState
    state2: ChainState
    met: bool = False


@dataclass(frozen=True)
class MeetingRecord:
    tau: int
    lag: int
    censored: bool
    seed: int


# ---------------------------------------------------------------------------
# Primitive couplings
# ---------------------------------------------------------------------------


def maximal_coupling_1d(
    p: TruncNormParams,
    q: TruncNormParams,
    rng: np.random.Generator,
    max_tries: int = 1_000_000,
):
    """Maximal coupling of two univariate truncated normals.

    Marginals are exact and Pr(x == y) = 1 - TV(p, q); on meeting the two
    outputs are the identical float. The residual rejection loop terminates
    in one expected draw overall; the cap only guards a probability-zero
    hang."""
    x = truncnorm_sample(p, uniform_open(rng))
    if math.log(uniform_open(rng)) + truncnorm_logpdf(p, x) <= truncnorm_logpdf(q, x):
        return x, x, True
    for _ in range(max_tries):
        y = truncnorm_sample(q, uniform_open(rng))
        if math.log(uniform_open(rng)) + truncnorm_logpdf(q, y) > truncnorm_logpdf(
            p, y
        ):
            return x, y, False
    raise RuntimeError("maximal coupling residual loop exceeded its cap")


def crn_coupling_1d(p: TruncNormParams, q: TruncNormParams, shared_u: float):
    """Common-random-number coupling through the shared quantile map."""
    return truncnorm_sample(p, shared_u), truncnorm_sample(q, shared_u)


def reflection_maximal_gaussian(
    mean1: np.ndarray,
    mean2: np.ndarray,
    chol: np.ndarray,
    rng: np.random.Generator,
):
    """Reflection-maximal coupling of N(mean1, LL') and N(mean2, LL').

    Meets with the overlap probability 2 Phi(-||delta||/2) where delta is the
    standardized mean difference; otherwise the shared standard normal is
    reflected across delta's hyperplane, which preserves the marginal."""
    xi = rng.standard_normal(mean1.shape[0])
    diff = mean1 - mean2
    x = mean1 + chol @ xi
    if not np.any(diff):
        return x, x.copy(), True
    zvec = solve_triangular(chol, diff, lower=True)
    dist = float(np.linalg.norm(zvec))
    if dist < 1e-14:
        return x, x.copy(), True
    e = zvec / dist
    s = float(e @ xi)
    # accept with prob phi(s + dist)/phi(s): then x viewed from chain 2 is a
    # valid draw and the chains are equal
    if math.log(uniform_open(rng)) <= -0.5 * (s + dist) ** 2 + 0.5 * s * s:
        return x, x.copy(), True
    xi_reflected = xi - 2.0 * s * e
    y = mean2 + chol @ xi_reflected
    return x, y, False


# ---------------------------------------------------------------------------
# Coupled kernels
# ---------------------------------------------------------------------------


def _states_equal(a: ChainState, b: ChainState, blocks: tuple[str, ...]) -> bool:
    for name in blocks:
        va, vb = getattr(a, name), getattr(b, name)
        if va is None or vb is None or not np.array_equal(va, vb):
            return False
    return True


def _distance(a: ChainState, b: ChainState, blocks: tuple[str, ...]) -> float:
    d2 = 0.0
    for name in blocks:
        diff = getattr(a, name) - getattr(b, name)
        d2 += float(diff @ diff)
    return math.sqrt(d2)


def _mark_met(pair: CoupledPair) -> None:
    pair.met = True
    pair.state2 = pair.state1.copy()


def _coupled_z_block(
    pair: CoupledPair,
    cache: PosteriorCache,
    far: bool,
    rng: np.random.Generator,
) -> None:
    s1, s2 = pair.state1, pair.state2
    n = s1.z.shape[0]
    if far:
        u = uniform_open(rng, n)
        s1.z = truncnorm_invcdf(s1.eta, 1.0, cache.positive, u)
        s2.z = truncnorm_invcdf(s2.eta, 1.0, cache.positive, u)
        return
    z1 = np.empty(n)
    z2 = np.empty(n)
    for i in range(n):
        region = HalfLine.POSITIVE if cache.positive[i] else HalfLine.NONPOSITIVE
        z1[i], z2[i], _ = maximal_coupling_1d(
            TruncNormParams(float(s1.eta[i]), 1.0, region),
            TruncNormParams(float(s2.eta[i]), 1.0, region),
            rng,
        )
    s1.z, s2.z = z1, z2


def coupled_da_step(
    pair: CoupledPair,
    cache: PosteriorCache,
    model: ProbitModel,
    cfg: CouplingConfig,
    rng: np.random.Generator,
) -> CoupledPair:
    if pair.met:
        da_step(pair.state1, cache, model, rng)
        pair.state2 = pair.state1.copy()
        return pair
    far = _distance(pair.state1, pair.state2, ("z", "beta")) > cfg.eps
    s1, s2 = pair.state1, pair.state2
    _coupled_z_block(pair, cache, far, rng)
    s1.B = refresh_B(s1.z, cache)
    s2.B = refresh_B(s2.z, cache)
    if far:
        xi = rng.standard_normal(model.p)
        s1.beta = s1.B + cache.chol_V @ xi
        s2.beta = s2.B + cache.chol_V @ xi
    else:
        s1.beta, s2.beta, _ = reflection_maximal_gaussian(
            s1.B, s2.B, cache.chol_V, rng
        )
    s1.eta = model.X @ s1.beta
    s2.eta = model.X @ s2.beta
    if _states_equal(s1, s2, ("z", "beta")):
        _mark_met(pair)
    return pair


def coupled_cg_sweep(
    pair: CoupledPair,
    cache: PosteriorCache,
    model: ProbitModel,
    cfg: CouplingConfig,
    rng: np.random.Generator,
) -> CoupledPair:
    if pair.met:
        cg_sweep(pair.state1, cache, model, rng)
        pair.state2 = pair.state1.copy()
        return pair
    s1, s2 = pair.state1, pair.state2
    n = model.n
    idx = rng.integers(0, n, size=n)
    diff = s1.z - s2.z
    d2 = float(diff @ diff)
    eps2 = cfg.eps * cfg.eps
    for raw in idx:
        i = int(raw)
        mu1, sd = cg_site_conditional(s1, i, cache, model)
        mu2, _ = cg_site_conditional(s2, i, cache, model)
        positive = bool(cache.positive[i])
        if d2 > eps2:
            u = uniform_open(rng)
            z1_new = truncnorm_invcdf(mu1, sd, positive, u)
            z2_new = truncnorm_invcdf(mu2, sd, positive, u)
        else:
            region = HalfLine.POSITIVE if positive else HalfLine.NONPOSITIVE
            z1_new, z2_new, _ = maximal_coupling_1d(
                TruncNormParams(mu1, sd, region),
                TruncNormParams(mu2, sd, region),
                rng,
            )
        d2 += (z1_new - z2_new) ** 2 - (s1.z[i] - s2.z[i]) ** 2
        s1.B += cache.S[:, i] * (z1_new - s1.z[i])
        s2.B += cache.S[:, i] * (z2_new - s2.z[i])
        s1.z[i] = z1_new
        s2.z[i] = z2_new
    s1.B = refresh_B(s1.z, cache)
    s2.B = refresh_B(s2.z, cache)
    if _states_equal(s1, s2, ("z",)):
        _mark_met(pair)
    return pair


def coupled_da_mod_step(
    pair: CoupledPair,
    cache: PosteriorCache,
    model: ProbitModel,
    cfg: CouplingConfig,
    rwm: RwmConfig,
    rng: np.random.Generator,
) -> CoupledPair:
    if pair.met:
        da_mod_step(pair.state1, cache, model, rwm, rng)
        pair.state2 = pair.state1.copy()
        return pair
    far = _distance(pair.state1, pair.state2, ("z", "beta")) > cfg.eps
    s1, s2 = pair.state1, pair.state2

    # coefficient block given the latents
    s1.B = refresh_B(s1.z, cache)
    s2.B = refresh_B(s2.z, cache)
    if far:
        xi = rng.standard_normal(model.p)
        s1.beta = s1.B + cache.chol_V @ xi
        s2.beta = s2.B + cache.chol_V @ xi
    else:
        s1.beta, s2.beta, _ = reflection_maximal_gaussian(
            s1.B, s2.B, cache.chol_V, rng
        )
    s1.eta = model.X @ s1.beta
    s2.eta = model.X @ s2.beta

    # intercept Metropolis: reflection-maximal coupling of the two proposal
    # distributions in both regimes (a shared-increment proposal would leave
    # the slow intercept direction to contract at the O(n) latent rate and
    # the rescue effect would never register in the meeting times); the
    # acceptance uniform is always shared
    p1, p2, _ = reflection_maximal_gaussian(
        np.array([s1.beta[0]]),
        np.array([s2.beta[0]]),
        np.array([[rwm.sigma]]),
        rng,
    )
    prop1, prop2 = float(p1[0]), float(p2[0])
    log_u = math.log(uniform_open(rng))
    for state, prop in ((s1, prop1), (s2, prop2)):
        beta_prop = state.beta.copy()
        beta_prop[0] = prop
        eta_prop = state.eta + (prop - state.beta[0]) * model.X[:, 0]
        log_ratio = log_posterior_beta(model, cache, beta_prop, eta=eta_prop) - (
            log_posterior_beta(model, cache, state.beta, eta=state.eta)
        )
        if log_u < log_ratio:
            state.beta = beta_prop
            state.eta = eta_prop

    _coupled_z_block(pair, cache, far, rng)
    if _states_equal(s1, s2, ("z", "beta")):
        _mark_met(pair)
    return pair


def coupled_da_marginal_step(
    pair: CoupledPair,
    cache: PosteriorCache,
    model: ProbitModel,
    cfg: CouplingConfig,
    rng: np.random.Generator,
) -> CoupledPair:
    if pair.met:
        da_marginal_step(pair.state1, cache, model, rng)
        pair.state2 = pair.state1.copy()
        return pair
    if cache.chol_W is None:
        raise ValueError("marginal chain requires the wide-path factor chol_W (p > n)")
    far = _distance(pair.state1, pair.state2, ("z", "eta")) > cfg.eps
    s1, s2 = pair.state1, pair.state2
    _coupled_z_block(pair, cache, far, rng)
    mean1 = cache.w0 + cache.W @ s1.z
    mean2 = cache.w0 + cache.W @ s2.z
    if far:
        xi = rng.standard_normal(model.n)
        s1.eta = mean1 + cache.chol_W @ xi
        s2.eta = mean2 + cache.chol_W @ xi
    else:
        s1.eta, s2.eta, _ = reflection_maximal_gaussian(mean1, mean2, cache.chol_W, rng)
    s1.beta = None
    s2.beta = None
    s1.B = None
    s2.B = None
    if _states_equal(s1, s2, ("z", "eta")):
        _mark_met(pair)
    return pair


# ---------------------------------------------------------------------------
# Meeting-time simulation
# ---------------------------------------------------------------------------

COUPLED_KERNELS = ("da", "cg", "da_mod", "da_marginal")


def _start_state(kernel: str, cache, model, rng) -> ChainState:
    state = sample_prior_start(cache, model, rng)
    if kernel == "cg":
        return ChainState(z=state.z, beta=None, eta=None, B=state.B)
    if kernel == "da_marginal":
        return ChainState(z=state.z, beta=None, eta=state.eta, B=None)
    return state


def _advance(kernel: str, state, cache, model, rwm, rng) -> None:
    if kernel == "da":
        da_step(state, cache, model, rng)
    elif kernel == "cg":
        cg_sweep(state, cache, model, rng)
    elif kernel == "da_mod":
        da_mod_step(state, cache, model, rwm, rng)
    else:
        da_marginal_step(state, cache, model, rng)


def _coupled_advance(kernel: str, pair, cache, model, cfg, rwm, rng) -> None:
    if kernel == "da":
        coupled_da_step(pair, cache, model, cfg, rng)
    elif kernel == "cg":
        coupled_cg_sweep(pair, cache, model, cfg, rng)
    elif kernel == "da_mod":
        coupled_da_mod_step(pair, cache, model, cfg, rwm, rng)
    else:
        coupled_da_marginal_step(pair, cache, model, cfg, rng)


def sample_meeting_time(
    kernel: str,
    model: ProbitModel,
    cache: PosteriorCache,
    cfg: CouplingConfig,
    rng: np.random.Generator,
    rwm: RwmConfig | None = None,
    start: str = "prior",
    seed: int = 0,
) -> MeetingRecord:
    """One lag-L meeting time: both chains start independently from the prior
    start, chain 1 runs ahead for L kernel applications, then the coupled
    kernel runs until bit-exact equality. tau counts chain 1's applications.
    Hitting the censoring horizon is a data outcome, not a failure."""
    if kernel not in COUPLED_KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    if start != "prior":
        raise ValueError(f"unknown start distribution {start!r}")
    rwm = rwm or RwmConfig()
    state1 = _start_state(kernel, cache, model, rng)
    state2 = _start_state(kernel, cache, model, rng)
    for _ in range(cfg.lag):
        _advance(kernel, state1, cache, model, rwm, rng)
    pair = CoupledPair(state1=state1, state2=state2)
    t = cfg.lag
    while t - cfg.lag < cfg.max_sweeps:
        t += 1
        _coupled_advance(kernel, pair, cache, model, cfg, rwm, rng)
        if pair.met:
            return MeetingRecord(tau=t, lag=cfg.lag, censored=False, seed=seed)
    return MeetingRecord(tau=t, lag=cfg.lag, censored=True, seed=seed)


def replicate_seed(master_seed: int, cell_index: int, replicate: int) -> int:
    """Splittable 64-bit seed for one replicate; order-independent."""
    ss = np.random.SeedSequence(
        entropy=master_seed, spawn_key=(cell_index, replicate)
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _replicate_chunk(args) -> list[MeetingRecord]:
    (kernel, model, cfg, rwm, master_seed, cell_index, indices) = args
    cache = build_cache(model)
    records = []
    for idx in indices:
        seed = replicate_seed(master_seed, cell_index, idx)
        rng = np.random.default_rng(seed)
        records.append(
            sample_meeting_time(kernel, model, cache, cfg, rng, rwm=rwm, seed=seed)
        )
    return records


def sample_meeting_times(
    kernel: str,
    model: ProbitModel,
    cfg: CouplingConfig,
    n_replicates: int,
    master_seed: int,
    cell_index: int = 0,
    rwm: RwmConfig | None = None,
    n_workers: int = 1,
    cache: PosteriorCache | None = None,
) -> list[MeetingRecord]:
    """Replicate farm. Each replicate gets an independent stream derived from
    (master_seed, cell_index, replicate), so results do not depend on the
    worker count; output is ordered by replicate index."""
    indices = list(range(n_replicates))
    if n_workers <= 1:
        cache = cache if cache is not None else build_cache(model)
        records = []
        for idx in indices:
            seed = replicate_seed(master_seed, cell_index, idx)
            rng = np.random.default_rng(seed)
            records.append(
                sample_meeting_time(kernel, model, cache, cfg, rng, rwm=rwm, seed=seed)
            )
        return records
    chunk_size = max(1, math.ceil(n_replicates / n_workers))
    chunks = [
        (kernel, model, cfg, rwm, master_seed, cell_index, indices[k : k + chunk_size])
        for k in range(0, n_replicates, chunk_size)
    ]
    records: list[MeetingRecord] = []
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        for part in pool.map(_replicate_chunk, chunks):
            records.extend(part)
    return records


def write_meeting_csv(path, records: list[MeetingRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replicate", "seed", "L", "tau", "censored"])
        for k, rec in enumerate(records):
            writer.writerow([k, rec.seed, rec.lag, rec.tau, int(rec.censored)])


def read_meeting_csv(path) -> list[MeetingRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                MeetingRecord(
                    tau=int(row["tau"]),
                    lag=int(row["L"]),
                    censored=bool(int(row["censored"])),
                    seed=int(row["seed"]),
                )
            )
    return records
