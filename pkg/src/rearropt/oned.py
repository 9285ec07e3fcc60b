"""1D rate theory for the rearrangement iteration on an interval.

On the interval the rearrangement step reduces to a scalar map y -> h(y) for
the offset y of the bang-bang support center from its optimal position.  Near
the fixed point y = 0 the map is h(y) ~ L y with L = (1 - f_-/f_+)(1 - delta),
so plain RM converges geometrically at rate L.  Extrapolating the iterate
(modified ARM) with the optimal constant weight theta* turns the linearized
two-step recurrence into a double root r* = 1 - sqrt(1 - L) < L.

This module provides the map and the rate constants, trajectory generation
for RM / modified ARM / optimal ARM, log-linear rate fitting (with an
envelope variant for bouncing trajectories), and an independent
finite-difference RM oracle on [0,1] that reproduces the rate from the
actual discrete optimizer rather than from the map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .rearrange import History, IterationRecord

__all__ = [
    "OneDParams",
    "MapIterate",
    "RateReport",
    "FitError",
    "MapDomainError",
    "map_h",
    "rate_L",
    "theta_star",
    "r_star",
    "iterate_map",
    "fit_rate",
    "rate_report",
    "fd_rm_1d",
]

_MAP_METHODS = ("rm", "marm", "oarm")


class FitError(ValueError):
    pass


class MapDomainError(ValueError):
    pass


@dataclass(frozen=True)
class OneDParams:
    f_minus: float
    f_plus: float
    delta: float

    def __post_init__(self):
        if not 0 < self.f_minus < self.f_plus:
            raise ValueError(
                f"need 0 < f_minus < f_plus, got {self.f_minus}, {self.f_plus}"
            )
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0,1), got {self.delta}")


@dataclass(frozen=True)
class MapIterate:
    k: int
    y: float


@dataclass(frozen=True)
class RateReport:
    L: float
    theta_star: float
    r_star: float
    fitted_rate: float


def rate_L(p: OneDParams) -> float:
    """Linearized rate of the map at its fixed point."""
    return (1.0 - p.f_minus / p.f_plus) * (1.0 - p.delta)


def theta_star(L: float) -> float:
    """Extrapolation weight that makes the linearized recurrence a double root."""
    if not 0.0 < L < 1.0:
        raise ValueError(f"L must lie in (0,1), got {L}")
    return (2.0 - L - 2.0 * math.sqrt(1.0 - L)) / L


def r_star(L: float) -> float:
    """Double-root rate 1 - sqrt(1 - L) of the optimally extrapolated map."""
    if not 0.0 < L < 1.0:
        raise ValueError(f"L must lie in (0,1), got {L}")
    return 1.0 - math.sqrt(1.0 - L)


def map_h(y: float, p: OneDParams) -> float:
    """One rearrangement step for the support-center offset y in [0,1].

    Piecewise map with branch switch at
    lambda = max(3 delta - 1, delta (f_- + f_+) / alpha),
    alpha = f_- + delta (f_+ - f_-).  The lower branch is evaluated with the
    conjugate of its square root: the textbook form
    y - (2/(f_+ - f_-)) (f_+ delta - sqrt(f_+^2 delta^2 - y delta (f_+-f_-) alpha))
    cancels catastrophically as y -> 0, while the conjugate form stays
    accurate down to the underflow threshold.
    """
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"y must lie in [0,1], got {y}")
    fm, fp, d = p.f_minus, p.f_plus, p.delta
    df = fp - fm
    alpha = fm + d * df
    lam = max(3.0 * d - 1.0, d * (fm + fp) / alpha)
    if y > lam:
        return (d / alpha) * df * (1.0 - y)
    q = y * d * df * alpha
    arg = fp * fp * d * d - q
    if arg < 0.0:
        raise MapDomainError(
            f"negative square-root argument {arg} at y={y} for params {p}"
        )
    return y - 2.0 * q / (df * (fp * d + math.sqrt(arg)))


def _h_signed(y: float, p: OneDParams) -> float:
    # the offset is signed; extend h oddly so bouncing trajectories can
    # cross the fixed point instead of sticking at 0
    if y >= 0.0:
        return map_h(y, p)
    return -map_h(-y, p)


def iterate_map(
    method: str,
    y0: float,
    p: OneDParams,
    n: int,
    theta_schedule: Optional[Callable[[int], float]] = None,
) -> list[MapIterate]:
    """Generate y_0 .. y_n for one of the three 1D schemes.

    rm     y_{k+1} = h(y_k)
    marm   y_tilde = y_k + theta_k (y_k - y_{k-1}), y_{k+1} = h(y_tilde),
           default Nesterov-style schedule theta_k = (k-1)/(k+2), theta_0 = 0
    oarm   same recurrence with the constant optimal weight theta*(L)

    The extrapolated state is clamped to [-1,1] before the (oddly extended)
    map is applied.  Iteration stops early once |y| < 1e-300 so downstream
    log fits never see a hard zero.
    """
    if method not in _MAP_METHODS:
        raise ValueError(f"method must be one of {_MAP_METHODS}, got {method!r}")
    if not 0.0 <= y0 <= 1.0:
        raise ValueError(f"y0 must lie in [0,1], got {y0}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if method == "oarm":
        ts = theta_star(rate_L(p))
        sched = lambda k: ts
    elif method == "marm":
        if theta_schedule is None:
            sched = lambda k: 0.0 if k == 0 else (k - 1.0) / (k + 2.0)
        else:
            sched = theta_schedule
    else:
        sched = lambda k: 0.0
    out = [MapIterate(0, float(y0))]
    y_prev = float(y0)
    y = float(y0)
    for k in range(n):
        theta = float(sched(k))
        y_t = y + theta * (y - y_prev)
        y_t = min(1.0, max(-1.0, y_t))
        y_prev, y = y, _h_signed(y_t, p)
        out.append(MapIterate(k + 1, y))
        if abs(y) < 1e-300:
            break
    return out


def fit_rate(
    values: Sequence[float], tail_fraction: float = 0.5, envelope: bool = False
) -> float:
    """Geometric rate exp(slope) of a log-linear fit of |y_k| against k.

    By default the fit uses the final tail_fraction of the entries.  With
    envelope=True it instead fits the local maxima of |y_k| in that tail,
    which is the right estimator for bouncing (sign-alternating) accelerated
    trajectories.  Raises FitError on zeros in the fitted tail or fewer than
    3 usable points.
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError(f"tail_fraction must lie in (0,1], got {tail_fraction}")
    a = np.abs(np.asarray(values, dtype=float))
    n = a.shape[0]
    if envelope:
        peaks = [
            i
            for i in range(1, n - 1)
            if a[i] > a[i - 1] and a[i] >= a[i + 1] and a[i] > 0.0
        ]
        ks = np.array([i for i in peaks if i >= (1.0 - tail_fraction) * n], dtype=int)
    else:
        m = int(math.ceil(tail_fraction * n))
        ks = np.arange(n - m, n)
    if ks.size < 3:
        raise FitError(f"need at least 3 points to fit a rate, got {ks.size}")
    tail = a[ks]
    if np.any(tail <= 0.0):
        raise FitError("zero entries in the fitted tail")
    slope = np.polyfit(ks, np.log(tail), 1)[0]
    return float(np.exp(slope))


def rate_report(p: OneDParams, fitted_rate: float = math.nan) -> RateReport:
    L = rate_L(p)
    return RateReport(
        L=L, theta_star=theta_star(L), r_star=r_star(L), fitted_rate=fitted_rate
    )


def fd_rm_1d(n: int, p: OneDParams, c0: float, max_iter: int = 500) -> History:
    """Plain RM on [0,1] with an n-cell finite-difference Poisson solve.

    Independent cross-check of the map rates: -u'' = f with u(0) = u(1) = 0
    is solved on a uniform grid (tridiagonal system), the cell averages of u
    are thresholded by the bathtub rule at volume delta, and the offset of
    the support centroid from 1/2 is recorded per iteration in the
    `objective` slot of the records (diff_l2 holds ||f_{k+1} - f_k||).
    The run stops when the support stops moving.

    final_density is the raw cell indicator, final_state the nodal solution,
    final_gradient the cell-averaged u.
    """
    if n < 64:
        raise ValueError(f"need n >= 64 grid cells, got {n}")
    half = 0.5 * p.delta
    if not (half < c0 < 1.0 - half):
        raise ValueError(
            f"initial center {c0} infeasible: support must fit inside (0,1), "
            f"need c0 in ({half}, {1.0 - half})"
        )
    h = 1.0 / n
    jump = p.f_plus - p.f_minus
    n_cells_d = int(math.floor(p.delta * n + 1e-12))
    mids = (np.arange(n) + 0.5) * h
    start = int(round((c0 - half) / h))
    start = min(max(start, 0), n - n_cells_d)
    ind = np.zeros(n, dtype=bool)
    ind[start : start + n_cells_d] = True

    # tridiagonal (1/h) [-1, 2, -1] for the n-1 interior nodes
    band = np.zeros((3, n - 1))
    band[0, 1:] = -1.0 / h
    band[1, :] = 2.0 / h
    band[2, :-1] = -1.0 / h

    records: list[IterationRecord] = []
    termination = "max_iter"
    u = np.zeros(n + 1)
    g = np.zeros(n)
    for k in range(max_iter):
        f = np.where(ind, p.f_plus, p.f_minus)
        rhs = 0.5 * h * (f[:-1] + f[1:])
        u = np.zeros(n + 1)
        u[1:-1] = solve_banded((1, 1), band, rhs)
        g = 0.5 * (u[:-1] + u[1:])
        order = np.argsort(-g, kind="stable")[:n_cells_d]
        new = np.zeros(n, dtype=bool)
        new[order] = True
        offset = float(mids[new].mean() - 0.5)
        d = jump * math.sqrt(h * int((new ^ ind).sum()))
        records.append(
            IterationRecord(k=k, objective=offset, diff_l2=d, theta=0.0, restarted=False)
        )
        moved = not np.array_equal(new, ind)
        ind = new
        if not moved:
            termination = "diff_zero"
            break
    return History(
        records=records,
        final_density=ind,
        final_state=u,
        final_gradient=g,
        termination=termination,
    )
