import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from probitgibbs.bounds import intercept_posterior_moments
from probitgibbs.model import (
    Isotropic,
    PriorSpec,
    ProbitModel,
    build_cache,
    zero_mean_prior,
)
from probitgibbs.samplers import (
    ChainState,
    DegenerateLeverageError,
    RwmConfig,
    RwmStats,
    cg_site_conditional,
    cg_site_step,
    cg_sweep,
    da_marginal_step,
    da_mod_step,
    da_step,
    refresh_B,
    run_chain,
    sample_prior_start,
    write_draws_csv,
)
from probitgibbs.special import truncnorm_invcdf, uniform_open


def _model(rng, n, p, y=None, variance=1.0, mean=None):
    X = rng.normal(size=(n, p))
    if y is None:
        y = rng.integers(0, 2, size=n)
    prior = PriorSpec(
        mean=np.zeros(p) if mean is None else mean, form=Isotropic(variance)
    )
    return ProbitModel(X=X, y=y, prior=prior)


def batch_mean_se(x, n_batches=50):
    """Standard error of the mean of a correlated sequence via batch means."""
    x = np.asarray(x)
    m = len(x) // n_batches
    batches = x[: m * n_batches].reshape(n_batches, m).mean(axis=1)
    return batches.std(ddof=1) / math.sqrt(n_batches)


def exact_posterior_draws(model, cache, rng, size):
    """Rejection from prior x likelihood-indicator; exact at tiny n."""
    out = []
    while len(out) < size:
        state = sample_prior_start(cache, model, rng)
        z_free = state.eta + rng.standard_normal(model.n)
        if np.all((z_free > 0) == cache.positive):
            out.append((z_free, state.beta))
    return out


def test_sign_consistency_all_kernels():
    rng = np.random.default_rng(0)
    model = _model(rng, 8, 12, y=np.array([1, 1, 0, 1, 0, 0, 1, 0]))
    cache = build_cache(model)
    rwm = RwmConfig(1.0)
    state = sample_prior_start(cache, model, rng)
    for _ in range(50):
        da_step(state, cache, model, rng)
        assert np.all((state.z > 0) == cache.positive)
        cg_sweep(state, cache, model, rng)
        assert np.all((state.z > 0) == cache.positive)
        da_mod_step(state, cache, model, rwm, rng)
        assert np.all((state.z > 0) == cache.positive)
    marg = sample_prior_start(cache, model, rng)
    for _ in range(50):
        da_marginal_step(marg, cache, model, rng)
        assert np.all((marg.z > 0) == cache.positive)
    assert marg.beta is None


def test_intercept_only_beta_conditional():
    # X = 1_n, prior precision c: beta | z ~ N((sum z + c m)/(c + n), 1/(c+n))
    c, n, m = 2.0, 6, 0.7
    model = ProbitModel(
        X=np.ones((n, 1)),
        y=np.ones(n, dtype=int),
        prior=PriorSpec(mean=np.array([m]), form=Isotropic(1.0 / c)),
    )
    cache = build_cache(model)
    assert cache.V[0, 0] == pytest.approx(1.0 / (c + n), rel=1e-12)
    z = np.abs(np.random.default_rng(1).standard_normal(n))
    B = refresh_B(z, cache)
    assert B[0] == pytest.approx((z.sum() + c * m) / (c + n), rel=1e-12)


def test_no_data_step_draws_from_prior():
    rng = np.random.default_rng(3)
    prior = PriorSpec(mean=np.array([1.0, -2.0]), form=Isotropic(0.5))
    model = ProbitModel(X=np.zeros((0, 2)), y=np.zeros(0, dtype=int), prior=prior)
    cache = build_cache(model)
    state = sample_prior_start(cache, model, rng)
    draws = []
    for _ in range(4000):
        da_step(state, cache, model, rng)
        draws.append(state.beta.copy())
    draws = np.array(draws)
    se = math.sqrt(0.5 / len(draws))
    assert abs(draws[:, 0].mean() - 1.0) < 4 * se
    assert abs(draws[:, 1].mean() + 2.0) < 4 * se
    assert abs(draws.var(axis=0).mean() - 0.5) < 0.05


def test_da_long_run_matches_quadrature_n1():
    rng = np.random.default_rng(11)
    model = ProbitModel(
        X=np.ones((1, 1)), y=np.array([1]), prior=zero_mean_prior(1, Isotropic(1.0))
    )
    cache = build_cache(model)
    state = sample_prior_start(cache, model, rng)
    draws = np.empty(50_000)
    for t in range(draws.size):
        da_step(state, cache, model, rng)
        draws[t] = state.beta[0]
    mean, var = intercept_posterior_moments(1.0, 1, 0)
    se = batch_mean_se(draws)
    assert abs(draws.mean() - mean) < 4 * se


def test_cg_single_site_marginal_case():
    # n = p = 1, unit design and prior: conditional equals the z-marginal N(0, 2)
    model = ProbitModel(
        X=np.ones((1, 1)), y=np.array([1]), prior=zero_mean_prior(1, Isotropic(1.0))
    )
    cache = build_cache(model)
    state = ChainState(
        z=np.array([0.4]), beta=None, eta=None, B=refresh_B(np.array([0.4]), cache)
    )
    mu, sd = cg_site_conditional(state, 0, cache, model)
    assert mu == pytest.approx(0.0, abs=1e-14)
    assert sd == pytest.approx(math.sqrt(2.0), rel=1e-14)


def test_cg_mean_forms_agree():
    # leverage form vs marginal-precision form of the site conditional mean
    rng = np.random.default_rng(5)
    model = _model(rng, 7, 3, mean=rng.normal(size=3))
    cache = build_cache(model)
    for _ in range(20):
        z = rng.standard_normal(7)
        state = ChainState(z=z, beta=None, eta=None, B=refresh_B(z, cache))
        for i in range(7):
            mu, _ = cg_site_conditional(state, i, cache, model)
            Xm = cache.X_mean
            q_row = cache.Q[i].copy()
            q_ii = q_row[i]
            q_row[i] = 0.0
            mu_q = Xm[i] - (q_row @ (z - Xm)) / q_ii
            assert mu == pytest.approx(mu_q, abs=1e-8)


def test_cg_small_leverage_limit():
    # strong prior shrinks leverages; conditional mean collapses to x_i'B
    rng = np.random.default_rng(6)
    model = _model(rng, 5, 2, variance=1e-8)
    cache = build_cache(model)
    assert np.all(cache.leverage < 1e-6)
    z = rng.standard_normal(5)
    state = ChainState(z=z, beta=None, eta=None, B=refresh_B(z, cache))
    mu, _ = cg_site_conditional(state, 2, cache, model)
    assert mu == pytest.approx(float(model.X[2] @ state.B), abs=1e-5)


def test_cg_degenerate_leverage_raises():
    rng = np.random.default_rng(8)
    model = _model(rng, 3, 2)
    cache = build_cache(model)
    object.__setattr__(cache, "leverage", np.array([1.0, 0.5, 0.5]))
    z = np.abs(rng.standard_normal(3)) * np.where(model.y == 1, 1, -1)
    state = ChainState(z=z, beta=None, eta=None, B=refresh_B(z, cache))
    with pytest.raises(DegenerateLeverageError):
        cg_site_step(state, 0, cache, model, rng)


def test_cg_incremental_B_stays_synced():
    rng = np.random.default_rng(9)
    model = _model(rng, 40, 10)
    cache = build_cache(model)
    state = sample_prior_start(cache, model, rng)
    for i in rng.integers(0, 40, size=40):
        cg_site_step(state, int(i), cache, model, rng)
    drift = np.max(np.abs(state.B - refresh_B(state.z, cache)))
    assert drift <= 1e-7


def test_cg_replay_is_bit_identical():
    rng1 = np.random.default_rng(123)
    rng2 = np.random.default_rng(123)
    model = _model(np.random.default_rng(2), 6, 3)
    cache = build_cache(model)
    s1 = sample_prior_start(cache, model, rng1)
    s2 = sample_prior_start(cache, model, rng2)
    for _ in range(10):
        cg_sweep(s1, cache, model, rng1)
        cg_sweep(s2, cache, model, rng2)
    assert np.array_equal(s1.z, s2.z) and np.array_equal(s1.B, s2.B)


def test_da_mod_tiny_sigma_always_accepts():
    rng = np.random.default_rng(10)
    model = _model(rng, 10, 3, y=np.ones(10, dtype=int))
    cache = build_cache(model)
    state = sample_prior_start(cache, model, rng)
    stats = RwmStats()
    for _ in range(200):
        da_mod_step(state, cache, model, RwmConfig(1e-12), rng, stats=stats)
    assert stats.rate == 1.0


def test_da_mod_rejections_leave_beta_unchanged():
    rng = np.random.default_rng(12)
    model = _model(rng, 30, 2, y=np.ones(30, dtype=int))
    cache = build_cache(model)
    state = sample_prior_start(cache, model, rng)
    stats = RwmStats()
    for _ in range(300):
        da_mod_step(state, cache, model, RwmConfig(10.0), rng, stats=stats)
        assert np.all(np.isfinite(state.beta))
    assert 0.0 < stats.rate < 0.5  # wild proposals are mostly rejected


def test_da_mod_long_run_matches_quadrature():
    rng = np.random.default_rng(13)
    n = 100
    model = ProbitModel(
        X=np.ones((n, 1)),
        y=np.ones(n, dtype=int),
        prior=zero_mean_prior(1, Isotropic(1.0)),
    )
    cache = build_cache(model)
    state = sample_prior_start(cache, model, rng)
    draws = np.empty(30_000)
    for t in range(draws.size):
        da_mod_step(state, cache, model, RwmConfig(1.0), rng)
        draws[t] = state.beta[0]
    mean, _ = intercept_posterior_moments(1.0, n, 0)
    burn = draws[2000:]
    assert abs(burn.mean() - mean) < 4 * batch_mean_se(burn)


def test_da_one_step_conditional_means():
    # from one fixed state, 1e5 kernel applications: the latent means match
    # the truncated-normal closed form and the coefficient mean matches the
    # Gaussian conditional mean propagated through the latent draw
    rng = np.random.default_rng(23)
    model = _model(rng, 3, 2, y=np.array([1, 0, 1]))
    cache = build_cache(model)
    start = sample_prior_start(cache, model, rng)
    reps = 100_000
    z_acc = np.zeros(3)
    beta_acc = np.zeros(2)
    z_sq = np.zeros(3)
    for _ in range(reps):
        st = start.copy()
        da_step(st, cache, model, rng)
        z_acc += st.z
        z_sq += st.z**2
        beta_acc += st.beta
    from probitgibbs.special import HalfLine, TruncNormParams, truncnorm_mean_var

    z_mean_expect = np.empty(3)
    z_var_expect = np.empty(3)
    for i in range(3):
        region = HalfLine.POSITIVE if model.y[i] == 1 else HalfLine.NONPOSITIVE
        m, v = truncnorm_mean_var(TruncNormParams(float(start.eta[i]), 1.0, region))
        z_mean_expect[i] = m
        z_var_expect[i] = v
    z_mean = z_acc / reps
    for i in range(3):
        se = math.sqrt(z_var_expect[i] / reps)
        assert abs(z_mean[i] - z_mean_expect[i]) < 4 * se
    # E[beta | start] = S E[z'] + V Q0 m; covariance adds V on top of the
    # propagated latent variance
    beta_expect = cache.S @ z_mean_expect + cache.V_Q0m
    beta_mean = beta_acc / reps
    beta_var = np.diag(cache.V) + np.diag(
        cache.S @ np.diag(z_var_expect) @ cache.S.T
    )
    for j in range(2):
        se = math.sqrt(beta_var[j] / reps)
        assert abs(beta_mean[j] - beta_expect[j]) < 4 * se


def test_da_stationarity_two_sample():
    rng = np.random.default_rng(14)
    model = _model(rng, 2, 2, y=np.array([1, 0]))
    cache = build_cache(model)
    ref = exact_posterior_draws(model, cache, rng, 3000)
    new = exact_posterior_draws(model, cache, rng, 3000)
    stepped = []
    for z, beta in new:
        st = ChainState(z=z.copy(), beta=beta.copy(), eta=model.X @ beta, B=None)
        da_step(st, cache, model, rng)
        stepped.append((st.z, st.beta))
    alpha = 0.05 / 3  # three functionals
    for func in [
        lambda zb: zb[0][0],
        lambda zb: zb[1][0],
        lambda zb: float(zb[0] @ zb[0]),
    ]:
        a = np.array([func(s) for s in ref])
        b = np.array([func(s) for s in stepped])
        assert ks_2samp(a, b).pvalue > alpha


def test_cg_sweep_stationarity_two_sample():
    rng = np.random.default_rng(15)
    model = _model(rng, 3, 2, y=np.array([1, 0, 1]))
    cache = build_cache(model)

    def exact_z(size):
        cov = np.linalg.inv(cache.Q)
        L = np.linalg.cholesky(cov)
        out = []
        while len(out) < size:
            z = cache.X_mean + L @ rng.standard_normal(3)
            if np.all((z > 0) == cache.positive):
                out.append(z)
        return out

    ref = exact_z(3000)
    stepped = []
    for z in exact_z(3000):
        st = ChainState(z=z.copy(), beta=None, eta=None, B=refresh_B(z, cache))
        cg_sweep(st, cache, model, rng)
        stepped.append(st.z)
    alpha = 0.05 / 3
    for j, func in enumerate(
        [lambda z: z[0], lambda z: z[2], lambda z: float(z @ z)]
    ):
        a = np.array([func(z) for z in ref])
        b = np.array([func(z) for z in stepped])
        assert ks_2samp(a, b).pvalue > alpha, f"functional {j}"


def test_da_mod_stationarity_two_sample():
    rng = np.random.default_rng(16)
    X = np.column_stack([np.ones(2), np.random.default_rng(1).normal(size=2)])
    model = ProbitModel(
        X=X, y=np.array([1, 0]), prior=zero_mean_prior(2, Isotropic(1.0))
    )
    cache = build_cache(model)
    ref = exact_posterior_draws(model, cache, rng, 3000)
    stepped = []
    for z, beta in exact_posterior_draws(model, cache, rng, 3000):
        st = ChainState(z=z.copy(), beta=beta.copy(), eta=model.X @ beta, B=None)
        da_mod_step(st, cache, model, RwmConfig(1.0), rng)
        stepped.append((st.z, st.beta))
    alpha = 0.05 / 2
    for func in [lambda zb: zb[1][0], lambda zb: zb[0][0]]:
        a = np.array([func(s) for s in ref])
        b = np.array([func(s) for s in stepped])
        assert ks_2samp(a, b).pvalue > alpha


def test_marginal_step_mean_identity_and_stationarity():
    rng = np.random.default_rng(17)
    X = rng.normal(size=(1, 2))
    model = ProbitModel(
        X=X,
        y=np.array([1]),
        prior=PriorSpec(mean=np.array([0.5, -0.2]), form=Isotropic(1.0)),
    )
    cache = build_cache(model)
    z = np.array([0.9])
    # predictor-block mean equals (I - Q) z + Q (X m)
    lhs = cache.w0 + cache.W @ z
    rhs = (np.eye(1) - cache.Q) @ z + cache.Q @ cache.X_mean
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)

    # one marginal step preserves the exact joint law of (z, predictor)
    def exact_pairs(size):
        out = []
        cov_z = np.linalg.inv(cache.Q)
        Lz = np.linalg.cholesky(cov_z)
        while len(out) < size:
            zz = cache.X_mean + Lz @ rng.standard_normal(1)
            if np.all((zz > 0) == cache.positive):
                eta = cache.w0 + cache.W @ zz + cache.chol_W @ rng.standard_normal(1)
                out.append((zz, eta))
        return out

    ref = exact_pairs(3000)
    stepped = []
    for zz, eta in exact_pairs(3000):
        st = ChainState(z=zz.copy(), beta=None, eta=eta.copy(), B=None)
        da_marginal_step(st, cache, model, rng)
        stepped.append((st.z, st.eta))
    alpha = 0.05 / 2
    a = np.array([s[0][0] for s in ref])
    b = np.array([s[0][0] for s in stepped])
    assert ks_2samp(a, b).pvalue > alpha
    a = np.array([s[1][0] for s in ref])
    b = np.array([s[1][0] for s in stepped])
    assert ks_2samp(a, b).pvalue > alpha


def test_marginal_chain_autocorrelation_matches_da():
    rng = np.random.default_rng(18)
    model = _model(rng, 1, 2, y=np.array([1]))
    cache = build_cache(model)

    def lag1_autocorrs(kernel, reps=150, length=60):
        out = []
        for _ in range(reps):
            st = sample_prior_start(cache, model, rng)
            zs = np.empty(length)
            for t in range(length):
                if kernel == "da":
                    da_step(st, cache, model, rng)
                else:
                    da_marginal_step(st, cache, model, rng)
                zs[t] = st.z[0]
            zc = zs - zs.mean()
            out.append(float((zc[:-1] @ zc[1:]) / (zc @ zc)))
        return np.array(out)

    a = lag1_autocorrs("da")
    b = lag1_autocorrs("marginal")
    assert ks_2samp(a, b).pvalue > 0.05


def test_marginal_step_requires_wide_cache():
    rng = np.random.default_rng(19)
    model = _model(rng, 6, 2)
    cache = build_cache(model)
    state = sample_prior_start(cache, model, rng)
    with pytest.raises(ValueError, match="chol_W"):
        da_marginal_step(state, cache, model, rng)


def test_prior_start_properties():
    rng = np.random.default_rng(20)
    model = _model(rng, 5, 3, variance=2.5)
    cache = build_cache(model)
    betas = []
    for _ in range(4000):
        st = sample_prior_start(cache, model, rng)
        assert np.all((st.z > 0) == cache.positive)
        betas.append(st.beta)
    var = np.var(np.array(betas), axis=0)
    assert np.all(np.abs(var - 2.5) < 0.25)


def test_eta_and_B_cache_invariants_after_steps():
    rng = np.random.default_rng(21)
    model = _model(rng, 12, 4)
    cache = build_cache(model)
    state = sample_prior_start(cache, model, rng)
    for _ in range(20):
        da_step(state, cache, model, rng)
    assert np.max(np.abs(state.eta - model.X @ state.beta)) <= 1e-9
    for _ in range(5):
        cg_sweep(state, cache, model, rng)
    assert np.max(np.abs(state.B - refresh_B(state.z, cache))) <= 1e-7


def test_run_chain_and_draws_csv(tmp_path):
    rng = np.random.default_rng(22)
    model = _model(rng, 4, 2)
    cache = build_cache(model)
    betas, zs = run_chain(
        model, cache, "cg", steps=20, rng=rng, burnin=4, thin=2, keep_z=True
    )
    assert len(betas) == len(zs) == 8
    path = tmp_path / "draws.csv"
    write_draws_csv(path, betas, zs)
    header = path.read_text().splitlines()[0].split(",")
    assert header == ["beta_1", "beta_2", "z_1", "z_2", "z_3", "z_4"]
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (8, 6)
    with pytest.raises(ValueError):
        run_chain(model, cache, "nope", steps=1, rng=rng)
