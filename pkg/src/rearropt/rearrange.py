"""Optimizer core: bathtub thresholding, extrapolation, RM/ARM/RARM driver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .mesh import Mesh
from .problems import BangBangDensity, ProblemParams, check_admissible

__all__ = [
    "OptimizerConfig",
    "IterationRecord",
    "History",
    "bathtub_threshold",
    "extrapolate",
    "density_diff_l2",
    "run",
]

_METHODS = ("rm", "arm", "rarm")


def bathtub_threshold(g, mesh: Mesh, volume: float) -> np.ndarray:
    """Indicator of the cells with the largest g-values filling `volume`.

    Cells are sorted by descending g (ties broken by ascending cell index via
    a stable sort) and taken while the cumulative area stays <= volume, so
    the achieved volume never exceeds the target and lands within one cell
    area of it.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (mesh.n_cells,):
        raise ValueError(f"expected {mesh.n_cells} cell values, got shape {g.shape}")
    if not 0.0 < volume < mesh.total_area:
        raise ValueError(
            f"target volume must lie in (0, {mesh.total_area}), got {volume}"
        )
    order = np.argsort(-g, kind="stable")
    csum = np.cumsum(mesh.cell_area[order])
    # 1e-12 relative slack so exact-fill targets are not lost to roundoff
    k = int(np.searchsorted(csum, volume * (1.0 + 1e-12), side="right"))
    indicator = np.zeros(mesh.n_cells, dtype=bool)
    indicator[order[:k]] = True
    return indicator


def extrapolate(g_now, g_prev, theta: float) -> np.ndarray:
    """Momentum extrapolation g_now + theta * (g_now - g_prev)."""
    g_now = np.asarray(g_now, dtype=float)
    g_prev = np.asarray(g_prev, dtype=float)
    if g_now.shape != g_prev.shape:
        raise ValueError(f"shape mismatch: {g_now.shape} vs {g_prev.shape}")
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0,1), got {theta}")
    return g_now + theta * (g_now - g_prev)


def density_diff_l2(a: BangBangDensity, b: BangBangDensity, mesh: Mesh) -> float:
    """||f_a - f_b||_{L2} = (f_plus - f_minus) * sqrt(|D_a sym-diff D_b|)."""
    sym = a.indicator ^ b.indicator
    jump = a.params.f_plus - a.params.f_minus
    return jump * float(np.sqrt(mesh.cell_area[sym].sum()))


@dataclass(frozen=True)
class OptimizerConfig:
    method: str
    epsilon: float = 0.0
    max_iter: int = 500
    # override for the ARM extrapolation weights; used by equivalence tests
    theta_schedule: Optional[Callable[[int], float]] = None

    def __post_init__(self):
        m = self.method.lower()
        if m not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        object.__setattr__(self, "method", m)
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class IterationRecord:
    k: int
    objective: float
    diff_l2: float
    theta: float
    restarted: bool


@dataclass
class History:
    records: list[IterationRecord]
    final_density: BangBangDensity
    final_state: np.ndarray
    final_gradient: np.ndarray
    termination: str

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def n_iterations(self) -> int:
        return len(self.records)


def run(
    mesh: Mesh,
    evaluate,
    params: ProblemParams,
    f0: BangBangDensity,
    config: OptimizerConfig,
) -> History:
    """Drive RM, ARM or RARM from f0 until ||f_{k+1} - f_k|| <= epsilon.

    Per step: extrapolate the gradient field with the method's theta,
    threshold it at the target volume, evaluate the proposal.  RARM accepts
    the proposal only if the objective strictly improves; otherwise it resets
    the momentum counter (k0 = k) and takes the plain RM step from the
    current gradient.  Records carry the theta actually used (0 on restart).
    """
    check_admissible(f0, mesh)
    target = params.target_volume(mesh.total_area)
    ev = evaluate(mesh, f0)
    sense = ev.sense
    f = f0
    g_prev = None
    k0 = 0
    records: list[IterationRecord] = []
    termination = "max_iter"
    for k in range(config.max_iter):
        if config.method == "rm":
            theta = 0.0
        elif config.method == "arm":
            if config.theta_schedule is not None:
                theta = float(config.theta_schedule(k))
            else:
                theta = k / (k + 3.0)
        else:
            theta = (k - k0) / (k - k0 + 3.0)
        if g_prev is None:
            theta = 0.0
        g = ev.gradient if theta == 0.0 else extrapolate(ev.gradient, g_prev, theta)
        ind = bathtub_threshold(g, mesh, target)
        f_new = BangBangDensity(ind, params)
        ev_new = evaluate(mesh, f_new)
        restarted = False
        if config.method == "rarm" and not sense * (ev_new.objective - ev.objective) > 0:
            k0 = k
            theta = 0.0
            restarted = True
            ind_rm = bathtub_threshold(ev.gradient, mesh, target)
            if not np.array_equal(ind_rm, ind):
                f_new = BangBangDensity(ind_rm, params)
                ev_new = evaluate(mesh, f_new)
        d = density_diff_l2(f_new, f, mesh)
        records.append(
            IterationRecord(
                k=k,
                objective=ev_new.objective,
                diff_l2=d,
                theta=theta,
                restarted=restarted,
            )
        )
        g_prev = ev.gradient
        f, ev = f_new, ev_new
        if d <= config.epsilon:
            termination = "diff_zero" if d == 0.0 else "epsilon"
            break
    return History(
        records=records,
        final_density=f,
        final_state=ev.state,
        final_gradient=ev.gradient,
        termination=termination,
    )
