"""Synthetic designs and responses for the benchmark scenarios, plus the
covariate standardization recipe."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .model import PriorSpec, chol_lower, load_design_csv
from .special import std_normal_logcdf

DESIGN_KINDS = ("assumption1a", "assumption1b", "assumption2_intercept", "custom_file")
RESPONSE_KINDS = ("all_ones", "all_zeros", "well_specified")
BASE_DISTRIBUTIONS = ("normal", "uniform")


@dataclass(frozen=True)
class DesignScheme:
    """Row-count, column-count, generation rule, and base entry distribution.

    assumption1a draws i.i.d. entries scaled by 1/sqrt(p); assumption1b keeps
    raw entries (pair it with the p-scaled prior); assumption2_intercept puts
    an all-ones first column next to 1/sqrt(p)-scaled entries."""

    kind: str
    n: int
    p: int
    base: str = "normal"
    path: str | None = None

    def __post_init__(self):
        if self.kind not in DESIGN_KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}")
        if self.kind != "custom_file" and (self.n < 1 or self.p < 1):
            raise ValueError("n and p must be >= 1")
        if self.kind == "assumption2_intercept" and self.p < 2:
            raise ValueError("the intercept design needs p >= 2")
        if self.base not in BASE_DISTRIBUTIONS:
            raise ValueError(f"unknown base distribution {self.base!r}")
        if self.kind == "custom_file" and not self.path:
            raise ValueError("custom_file design needs a path")


@dataclass(frozen=True)
class ResponseScheme:
    kind: str

    def __post_init__(self):
        if self.kind not in RESPONSE_KINDS:
            raise ValueError(f"unknown response kind {self.kind!r}")


def _base_draws(rng: np.random.Generator, size, base: str) -> np.ndarray:
    if base == "normal":
        return rng.standard_normal(size)
    # uniform(-sqrt(3), sqrt(3)): zero mean, unit variance, finite 4th moment
    s = math.sqrt(3.0)
    return rng.uniform(-s, s, size=size)


def gen_design(scheme: DesignScheme, rng: np.random.Generator) -> np.ndarray:
    if scheme.kind == "custom_file":
        return load_design_csv(scheme.path)
    n, p = scheme.n, scheme.p
    if scheme.kind == "assumption1a":
        return _base_draws(rng, (n, p), scheme.base) / math.sqrt(p)
    if scheme.kind == "assumption1b":
        return _base_draws(rng, (n, p), scheme.base)
    X = np.empty((n, p))
    X[:, 0] = 1.0
    X[:, 1:] = _base_draws(rng, (n, p - 1), scheme.base) / math.sqrt(p)
    return X


def gen_responses(
    scheme: ResponseScheme,
    X: np.ndarray,
    prior: PriorSpec | None,
    rng: np.random.Generator,
):
    """Returns (y, beta_true or None). Well-specified responses draw a zero
    mean coefficient vector from the prior covariance and Bernoulli responses
    through the probit link."""
    n = X.shape[0]
    if scheme.kind == "all_ones":
        return np.ones(n, dtype=np.int64), None
    if scheme.kind == "all_zeros":
        return np.zeros(n, dtype=np.int64), None
    if prior is None:
        raise ValueError("well-specified responses need a prior to draw from")
    Q0 = prior.precision_matrix(X)
    L = chol_lower(Q0, context="prior precision Q0")
    beta_true = solve_triangular(L, rng.standard_normal(X.shape[1]), lower=True, trans="T")
    probs = np.exp(std_normal_logcdf(X @ beta_true))
    y = (rng.random(n) < probs).astype(np.int64)
    return y, beta_true


def standardize(X: np.ndarray, has_intercept: bool) -> np.ndarray:
    """Center non-intercept columns and scale them to mean square one.

    Idempotent; a zero-variance column is only tolerated as the intercept."""
    X = np.asarray(X, dtype=float).copy()
    n = X.shape[0]
    start = 1 if has_intercept else 0
    for j in range(start, X.shape[1]):
        col = X[:, j] - X[:, j].mean()
        ms = float(col @ col) / n
        if ms <= 0.0:
            raise ValueError(f"column {j} has zero variance and is not the intercept")
        X[:, j] = col / math.sqrt(ms)
    return X
