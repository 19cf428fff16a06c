import math

import numpy as np
import pytest

from probitgibbs.datagen import (
    DesignScheme,
    ResponseScheme,
    gen_design,
    gen_responses,
    standardize,
)
from probitgibbs.model import Isotropic, ScaledIsotropic, save_design_csv, zero_mean_prior


def test_assumption1a_column_scaling():
    rng = np.random.default_rng(0)
    X = gen_design(DesignScheme("assumption1a", n=400, p=50), rng)
    col_vars = X.var(axis=0)
    # entries are base/sqrt(p): variance 1/p with chi^2 concentration
    assert np.all(np.abs(col_vars - 1.0 / 50) < 5 * (1.0 / 50) * math.sqrt(2 / 400))


def test_assumption1b_raw_entries():
    rng = np.random.default_rng(1)
    X = gen_design(DesignScheme("assumption1b", n=500, p=40), rng)
    assert abs(X.var() - 1.0) < 0.02


def test_assumption2_intercept_column():
    rng = np.random.default_rng(2)
    X = gen_design(DesignScheme("assumption2_intercept", n=30, p=5), rng)
    np.testing.assert_array_equal(X[:, 0], np.ones(30))
    assert X[:, 1:].std() < 1.0  # scaled by 1/sqrt(p)


def test_uniform_base_matches_moments():
    rng = np.random.default_rng(3)
    X = gen_design(DesignScheme("assumption1b", n=2000, p=20, base="uniform"), rng)
    assert abs(X.mean()) < 0.02
    assert abs(X.var() - 1.0) < 0.02
    assert np.max(np.abs(X)) <= math.sqrt(3.0) + 1e-12


def test_prior_predictive_variance_1b_pairing():
    # with the p-scaled prior, Var(x_i' beta) approaches the prior scale c
    rng = np.random.default_rng(4)
    c = 2.0
    for p in (50, 400):
        X = gen_design(DesignScheme("assumption1b", n=1, p=p), rng)
        # Var(x' beta | x) = (c/p) * sum x_j^2
        val = (c / p) * float(X[0] @ X[0])
        assert abs(val - c) < 5 * c * math.sqrt(2.0 / p)


def test_marchenko_pastur_limit():
    rng = np.random.default_rng(5)
    n, p = 600, 200
    Y = gen_design(DesignScheme("assumption1b", n=n, p=p), rng)
    lam_max = np.linalg.eigvalsh(Y @ Y.T / p)[-1]
    limit = (1.0 + math.sqrt(n / p)) ** 2
    assert abs(lam_max - limit) / limit < 0.10


def test_seed_determinism():
    scheme = DesignScheme("assumption2_intercept", n=20, p=4)
    X1 = gen_design(scheme, np.random.default_rng(42))
    X2 = gen_design(scheme, np.random.default_rng(42))
    np.testing.assert_array_equal(X1, X2)
    prior = zero_mean_prior(4, Isotropic(1.0))
    y1, b1 = gen_responses(ResponseScheme("well_specified"), X1, prior, np.random.default_rng(7))
    y2, b2 = gen_responses(ResponseScheme("well_specified"), X2, prior, np.random.default_rng(7))
    np.testing.assert_array_equal(y1, y2)
    np.testing.assert_array_equal(b1, b2)


def test_custom_file_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(7, 3))
    path = tmp_path / "X.csv"
    save_design_csv(path, X)
    scheme = DesignScheme("custom_file", n=7, p=3, path=str(path))
    np.testing.assert_allclose(gen_design(scheme, rng), X)


def test_constant_responses():
    rng = np.random.default_rng(7)
    X = gen_design(DesignScheme("assumption1a", n=12, p=3), rng)
    y, beta = gen_responses(ResponseScheme("all_ones"), X, None, rng)
    assert y.sum() == 12 and beta is None
    y, beta = gen_responses(ResponseScheme("all_zeros"), X, None, rng)
    assert y.sum() == 0 and beta is None


def test_well_specified_symmetry_and_prior_scale():
    rng = np.random.default_rng(8)
    scheme = DesignScheme("assumption1b", n=400, p=30)
    prior = zero_mean_prior(30, ScaledIsotropic(1.0))
    fractions = []
    betas = []
    for _ in range(40):
        X = gen_design(scheme, rng)
        y, beta_true = gen_responses(ResponseScheme("well_specified"), X, prior, rng)
        fractions.append(y.mean())
        betas.append(beta_true)
    # E[mean(y)] = 1/2 by sign symmetry of the zero-mean prior
    assert abs(np.mean(fractions) - 0.5) < 0.02
    var = np.var(np.array(betas))
    assert abs(var - 1.0 / 30) < 0.2 / 30
    with pytest.raises(ValueError, match="prior"):
        gen_responses(ResponseScheme("well_specified"), np.eye(3), None, rng)


def test_standardize_postconditions():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(50, 4)) * 3.0 + 1.0
    S = standardize(X, has_intercept=False)
    np.testing.assert_allclose(S.sum(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose((S**2).mean(axis=0), 1.0, atol=1e-12)
    again = standardize(S, has_intercept=False)
    np.testing.assert_allclose(again, S, atol=1e-12)


def test_standardize_intercept_preserved():
    rng = np.random.default_rng(10)
    X = np.column_stack([np.ones(20), rng.normal(size=(20, 2)) * 5])
    S = standardize(X, has_intercept=True)
    np.testing.assert_array_equal(S[:, 0], np.ones(20))
    np.testing.assert_allclose(S[:, 1:].sum(axis=0), 0.0, atol=1e-10)


def test_standardize_zero_variance_error():
    X = np.column_stack([np.ones(10), np.full(10, 3.0)])
    with pytest.raises(ValueError, match="column 1"):
        standardize(X, has_intercept=True)


def test_scheme_validation():
    with pytest.raises(ValueError):
        DesignScheme("nope", 5, 5)
    with pytest.raises(ValueError):
        DesignScheme("assumption2_intercept", 5, 1)
    with pytest.raises(ValueError):
        DesignScheme("assumption1a", 5, 5, base="cauchy")
    with pytest.raises(ValueError):
        DesignScheme("custom_file", 5, 5)
    with pytest.raises(ValueError):
        ResponseScheme("nope")
