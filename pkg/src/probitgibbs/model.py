"""Probit model container, prior precision forms, and the one-time
factorization cache shared by every sampler and bound.

The cache is immutable after construction and safe to share read-only across
concurrently running chains. Building it costs one dense factorization of a
min(n, p)-sized system plus O(np * min(n, p)) matrix products; afterwards each
kernel iteration touches only cached arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.linalg import cho_solve, get_lapack_funcs, solve_triangular

from .special import h


class NotPositiveDefiniteError(ValueError):
    """Raised when prior + design is numerically not positive definite."""

    def __init__(self, pivot: int, context: str):
        self.pivot = pivot
        super().__init__(
            f"prior+design not positive definite ({context}: leading minor "
            f"{pivot} failed Cholesky)"
        )


def chol_lower(a: np.ndarray, context: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor; reports the failing pivot on breakdown."""
    (potrf,) = get_lapack_funcs(("potrf",), (a,))
    c, info = potrf(a, lower=True, overwrite_a=False, clean=True)
    if info > 0:
        raise NotPositiveDefiniteError(int(info), context)
    if info < 0:
        raise ValueError(f"invalid argument {-info} to Cholesky ({context})")
    return c


# ---------------------------------------------------------------------------
# Prior precision forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Isotropic:
    """Prior covariance c * I_p."""

    variance: float

    def precision_matrix(self, X: np.ndarray) -> np.ndarray:
        if not self.variance > 0:
            raise ValueError("isotropic prior variance must be positive")
        p = X.shape[1]
        return np.eye(p) / self.variance


@dataclass(frozen=True)
class ScaledIsotropic:
    """Prior covariance (c / p) * I_p."""

    variance: float

    def precision_matrix(self, X: np.ndarray) -> np.ndarray:
        if not self.variance > 0:
            raise ValueError("scaled isotropic prior variance must be positive")
        p = X.shape[1]
        return np.eye(p) * (p / self.variance)


@dataclass(frozen=True)
class GPrior:
    """Prior covariance (X'X / g + c I_p)^{-1}; ridge c may be 0 when X'X is
    invertible. The precision is available directly as X'X / g + c I_p."""

    g: float
    ridge: float = 0.0

    def precision_matrix(self, X: np.ndarray) -> np.ndarray:
        if not self.g > 0:
            raise ValueError("g must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")
        p = X.shape[1]
        return X.T @ X / self.g + self.ridge * np.eye(p)


@dataclass(frozen=True)
class Recipe:
    """Prior covariance (b / (p + n)) * I_p; shrinkage grows with the data."""

    b: float

    def precision_matrix(self, X: np.ndarray) -> np.ndarray:
        if not self.b > 0:
            raise ValueError("b must be positive")
        n, p = X.shape
        return np.eye(p) * ((p + n) / self.b)


@dataclass(frozen=True)
class GeneralSPD:
    """Arbitrary symmetric positive definite precision matrix."""

    precision: np.ndarray

    def precision_matrix(self, X: np.ndarray) -> np.ndarray:
        q0 = np.asarray(self.precision, dtype=float)
        p = X.shape[1]
        if q0.shape != (p, p):
            raise ValueError(f"precision must be {p}x{p}, got {q0.shape}")
        if not np.allclose(q0, q0.T, atol=1e-10):
            raise ValueError("precision must be symmetric")
        return 0.5 * (q0 + q0.T)


PrecisionForm = Union[Isotropic, ScaledIsotropic, GPrior, Recipe, GeneralSPD]


@dataclass(frozen=True)
class PriorSpec:
    """Gaussian prior: mean vector plus a precision form."""

    mean: np.ndarray
    form: PrecisionForm

    def precision_matrix(self, X: np.ndarray) -> np.ndarray:
        return self.form.precision_matrix(X)


def zero_mean_prior(p: int, form: PrecisionForm) -> PriorSpec:
    return PriorSpec(mean=np.zeros(p), form=form)


# ---------------------------------------------------------------------------
# Model and cache
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbitModel:
    """Design matrix, binary responses, and the prior."""

    X: np.ndarray
    y: np.ndarray
    prior: PriorSpec

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        if y.shape != (X.shape[0],):
            raise ValueError("y must have one entry per row of X")
        if y.size and not np.isin(y, (0, 1)).all():
            raise ValueError("y entries must be 0 or 1")
        if np.asarray(self.prior.mean).shape != (X.shape[1],):
            raise ValueError("prior mean length must equal the column count of X")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(np.int64))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class PosteriorCache:
    """Immutable precomputed factorizations feeding every kernel and bound.

    V = (X'X + Q0)^{-1}, S = V X' (columns S_i = V x_i), leverages
    h_i = x_i' V x_i, W = X V X', Q = I_n - W (the marginal precision of the
    latent vector), and the extreme eigenvalues of M = X Q0^{-1} X'.
    """

    V: np.ndarray
    chol_V: np.ndarray
    S: np.ndarray
    leverage: np.ndarray
    Q: np.ndarray
    W: np.ndarray
    chol_W: np.ndarray | None
    lam_max: float
    lam_min: float
    strategy: str  # "tall" (n >= p) or "wide" (p > n)
    Q0: np.ndarray
    chol_Q0: np.ndarray
    V_Q0m: np.ndarray  # V @ Q0 @ m
    X_mean: np.ndarray  # X @ m
    w0: np.ndarray  # X @ V_Q0m
    sign: np.ndarray  # 2 y - 1
    positive: np.ndarray = field(repr=False, default=None)  # y == 1


def build_cache(model: ProbitModel) -> PosteriorCache:
    """Factorize once; O(np min(n,p)) work, everything downstream is cheap."""
    X, y = model.X, model.y
    n, p = X.shape
    Q0 = model.prior.precision_matrix(X)
    chol_Q0 = chol_lower(Q0, context="prior precision Q0")

    if n >= p:
        strategy = "tall"
        A = X.T @ X + Q0
        chol_A = chol_lower(A, context="X'X + Q0")
        V = cho_solve((chol_A, True), np.eye(p))
    else:
        strategy = "wide"
        Q0_inv = cho_solve((chol_Q0, True), np.eye(p))
        if n == 0:
            V = Q0_inv
        else:
            T = Q0_inv @ X.T
            K = np.eye(n) + X @ T
            chol_K = chol_lower(K, context="I + X Q0^{-1} X'")
            V = Q0_inv - T @ cho_solve((chol_K, True), T.T)
    V = 0.5 * (V + V.T)
    chol_V = chol_lower(V, context="posterior covariance V")

    S = V @ X.T
    leverage = np.einsum("ij,ji->i", X, S)
    W = X @ S
    W = 0.5 * (W + W.T)
    Q = np.eye(n) - W
    chol_W = chol_lower(W, context="W = X V X'") if p > n and n > 0 else None

    # Spectrum of M = X Q0^{-1} X' from the min(n, p)-sized Gram matrix of
    # G = X L^{-T} (Q0 = L L'); M = G G' shares nonzero eigenvalues with G'G.
    if n == 0:
        lam_max = lam_min = 0.0
    else:
        Gt = solve_triangular(chol_Q0, X.T, lower=True)
        if n <= p:
            gram = Gt.T @ Gt  # n x n, equals M itself
            eigs = np.linalg.eigvalsh(0.5 * (gram + gram.T))
            lam_max = float(eigs[-1])
            lam_min = float(max(eigs[0], 0.0))
        else:
            gram = Gt @ Gt.T  # p x p
            eigs = np.linalg.eigvalsh(0.5 * (gram + gram.T))
            lam_max = float(eigs[-1])
            lam_min = 0.0  # rank(M) <= p < n

    m = np.asarray(model.prior.mean, dtype=float)
    V_Q0m = V @ (Q0 @ m)
    return PosteriorCache(
        V=V,
        chol_V=chol_V,
        S=S,
        leverage=leverage,
        Q=Q,
        W=W,
        chol_W=chol_W,
        lam_max=lam_max,
        lam_min=max(lam_min, 0.0),
        strategy=strategy,
        Q0=Q0,
        chol_Q0=chol_Q0,
        V_Q0m=V_Q0m,
        X_mean=X @ m,
        w0=X @ V_Q0m,
        sign=(2.0 * y - 1.0).astype(float),
        positive=(y == 1),
    )


def log_posterior_beta(
    model: ProbitModel,
    cache: PosteriorCache,
    beta: np.ndarray,
    eta: np.ndarray | None = None,
) -> float:
    """log pi(beta) up to an additive constant.

    Pass ``eta = X @ beta`` when it is already cached; when only one
    coordinate of beta changed, the caller can shift eta in O(n) instead of
    recomputing the full linear predictor.
    """
    if eta is None:
        eta = model.X @ beta
    resid = beta - model.prior.mean
    quad = float(resid @ (cache.Q0 @ resid))
    return -0.5 * quad - float(np.sum(h(cache.sign * eta)))


def condition_number_bound(cache: PosteriorCache) -> float:
    """Upper bound on the prior-preconditioned condition number: 1 + lam_max."""
    return 1.0 + cache.lam_max


# ---------------------------------------------------------------------------
# File formats: plain CSV matrices and a self-describing JSON bundle
# ---------------------------------------------------------------------------

_FORM_KINDS = {
    "isotropic": Isotropic,
    "scaled_isotropic": ScaledIsotropic,
    "g_prior": GPrior,
    "recipe": Recipe,
    "general_spd": GeneralSPD,
}


def prior_to_dict(prior: PriorSpec) -> dict:
    form = prior.form
    if isinstance(form, Isotropic):
        body = {"kind": "isotropic", "variance": form.variance}
    elif isinstance(form, ScaledIsotropic):
        body = {"kind": "scaled_isotropic", "variance": form.variance}
    elif isinstance(form, GPrior):
        body = {"kind": "g_prior", "g": form.g, "ridge": form.ridge}
    elif isinstance(form, Recipe):
        body = {"kind": "recipe", "b": form.b}
    elif isinstance(form, GeneralSPD):
        body = {"kind": "general_spd", "precision": np.asarray(form.precision).tolist()}
    else:  # pragma: no cover
        raise TypeError(f"unknown prior form {form!r}")
    return {"mean": np.asarray(prior.mean).tolist(), "form": body}


def prior_from_dict(d: dict) -> PriorSpec:
    body = dict(d["form"])
    kind = body.pop("kind")
    if kind not in _FORM_KINDS:
        raise ValueError(f"unknown prior kind {kind!r}")
    if kind == "general_spd":
        body["precision"] = np.asarray(body["precision"], dtype=float)
    form = _FORM_KINDS[kind](**body)
    return PriorSpec(mean=np.asarray(d["mean"], dtype=float), form=form)


def save_design_csv(path, X: np.ndarray) -> None:
    np.savetxt(path, np.asarray(X, dtype=float), delimiter=",", fmt="%.17g")


def load_design_csv(path) -> np.ndarray:
    X = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    return X


def save_response_csv(path, y: np.ndarray) -> None:
    np.savetxt(path, np.asarray(y, dtype=int).reshape(-1, 1), delimiter=",", fmt="%d")


def load_response_csv(path) -> np.ndarray:
    y = np.loadtxt(path, delimiter=",", dtype=float, ndmin=1).reshape(-1)
    return y.astype(np.int64)


def save_model_json(path, model: ProbitModel) -> None:
    bundle = {
        "X": model.X.tolist(),
        "y": model.y.tolist(),
        "prior": prior_to_dict(model.prior),
    }
    with open(path, "w") as fh:
        json.dump(bundle, fh)


def load_model_json(path) -> ProbitModel:
    with open(path) as fh:
        bundle = json.load(fh)
    return ProbitModel(
        X=np.asarray(bundle["X"], dtype=float),
        y=np.asarray(bundle["y"]),
        prior=prior_from_dict(bundle["prior"]),
    )
