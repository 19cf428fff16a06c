"""Turn meeting-time samples into empirical total-variation upper bounds.

dbar(t) = E[ max{0, ceil((tau - L - t)/L)} ] estimated over un-censored
records; the smallest grid point with dbar(t) <= eps upper-bounds the
TV mixing time.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .couplings import MeetingRecord


class GridExhaustedError(RuntimeError):
    """The curve never drops below the requested threshold on its grid."""


@dataclass(frozen=True)
class TVBoundCurve:
    t_grid: np.ndarray
    dbar: np.ndarray
    se: np.ndarray
    n_used: int
    n_censored: int
    lag: int


def _per_record_bound(tau: np.ndarray, lag: int, t: int) -> np.ndarray:
    # integer ceil of (tau - L - t)/L, floored at zero
    num = tau - lag - t
    return np.maximum(0, -((-num) // lag))


def tv_bound_curve(
    records: list[MeetingRecord], t_grid: np.ndarray | None = None
) -> TVBoundCurve:
    """Empirical dbar over a grid of t with plug-in Monte Carlo standard
    errors. Censored records are excluded (loudly); mixed lags are an error."""
    if not records:
        raise ValueError("no meeting-time records given")
    lags = {rec.lag for rec in records}
    if len(lags) != 1:
        raise ValueError(f"records mix lag values {sorted(lags)}")
    lag = lags.pop()
    used = np.array([rec.tau for rec in records if not rec.censored], dtype=np.int64)
    n_censored = len(records) - used.size
    if used.size == 0:
        raise ValueError("every record is censored; extend the horizon")
    if n_censored:
        warnings.warn(
            f"excluding {n_censored} censored meeting-time record(s); "
            "the resulting bound is biased downward",
            stacklevel=2,
        )
    if t_grid is None:
        t_max = max(int(used.max()) - lag, 1)
        t_grid = np.arange(1, t_max + 1, dtype=np.int64)
    else:
        t_grid = np.asarray(t_grid, dtype=np.int64)
        if t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
            raise ValueError("t_grid must be nonempty and strictly increasing")
    dbar = np.empty(t_grid.size)
    se = np.empty(t_grid.size)
    for k, t in enumerate(t_grid):
        vals = _per_record_bound(used, lag, int(t))
        dbar[k] = vals.mean()
        se[k] = vals.std(ddof=1) / np.sqrt(used.size) if used.size > 1 else 0.0
    return TVBoundCurve(
        t_grid=t_grid,
        dbar=dbar,
        se=se,
        n_used=int(used.size),
        n_censored=int(n_censored),
        lag=int(lag),
    )


def tv_mixing_time_upper(curve: TVBoundCurve, eps: float) -> int:
    """Smallest grid t with dbar(t) <= eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    hits = np.nonzero(curve.dbar <= eps)[0]
    if hits.size == 0:
        raise GridExhaustedError(
            f"dbar never drops to {eps} on the grid; extend the simulation horizon"
        )
    return int(curve.t_grid[hits[0]])


def write_curve_csv(path, curve: TVBoundCurve) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,dbar,se\n")
        for t, d, s in zip(curve.t_grid, curve.dbar, curve.se):
            fh.write(f"{int(t)},{d:.17g},{s:.17g}\n")


def read_curve_csv(path) -> TVBoundCurve:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return TVBoundCurve(
        t_grid=data[:, 0].astype(np.int64),
        dbar=data[:, 1],
        se=data[:, 2],
        n_used=0,
        n_censored=0,
        lag=0,
    )


def write_summary_json(path, curve: TVBoundCurve, epsilon: float, t_mix: int) -> None:
    payload = {
        "epsilon": epsilon,
        "t_mix_upper": t_mix,
        "n_used": curve.n_used,
        "n_censored": curve.n_censored,
        "L": curve.lag,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
