"""The two model problems over bang-bang densities.

Both problems expose an Evaluation whose gradient field is chosen so that
thresholding it (maximizing <gradient, f> over admissible densities) moves
the objective in the improving direction: up for the Poisson work energy,
down for the principal eigenvalue.  The `sense` field records that direction
(+1 maximize, -1 minimize) so a single optimizer loop serves both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import (
    assemble_load,
    assemble_stiffness,
    assemble_weighted_mass,
    principal_eig,
    solve_dirichlet,
)
from .mesh import Mesh, cell_average, cell_average_square

__all__ = [
    "ProblemParams",
    "BangBangDensity",
    "Evaluation",
    "poisson_evaluate",
    "eigen_evaluate",
    "stationarity_residual",
    "check_admissible",
]


@dataclass(frozen=True)
class ProblemParams:
    """Phase values f_minus < f_plus and the volume fraction delta of the
    high phase."""

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

    @property
    def f_bar(self) -> float:
        return self.f_minus + self.delta * (self.f_plus - self.f_minus)

    def target_volume(self, total_area: float) -> float:
        return self.delta * total_area


@dataclass(frozen=True)
class BangBangDensity:
    """f = f_minus + (f_plus - f_minus) * indicator, one boolean per cell."""

    indicator: np.ndarray
    params: ProblemParams

    def __post_init__(self):
        ind = np.asarray(self.indicator, dtype=bool)
        ind.setflags(write=False)
        object.__setattr__(self, "indicator", ind)

    def values(self) -> np.ndarray:
        p = self.params
        return np.where(self.indicator, p.f_plus, p.f_minus)

    def volume(self, mesh: Mesh) -> float:
        return float(mesh.cell_area[self.indicator].sum())


def check_admissible(f: BangBangDensity, mesh: Mesh) -> None:
    """The achieved high-phase volume must sit within one cell area of the
    target delta * |Omega|."""
    if f.indicator.shape != (mesh.n_cells,):
        raise ValueError(
            f"indicator has {f.indicator.shape} entries, mesh has {mesh.n_cells} cells"
        )
    target = f.params.target_volume(mesh.total_area)
    vol = f.volume(mesh)
    slack = float(mesh.cell_area.max()) + 1e-12 * mesh.total_area
    if abs(vol - target) > slack:
        raise ValueError(
            f"density volume {vol:.6g} is not within one cell of the "
            f"target {target:.6g}"
        )


@dataclass(frozen=True)
class Evaluation:
    objective: float
    gradient: np.ndarray  # per-cell derivative field used for thresholding
    state: np.ndarray  # nodal solution u
    eigenvalue: float | None = None
    sense: int = 1  # +1: threshold steps maximize, -1: they minimize


def poisson_evaluate(mesh: Mesh, f: BangBangDensity) -> Evaluation:
    """Work energy J(f) = int f u with -lap u = f, u = 0 on the boundary.

    Since u depends on f, the derivative of J along df is 2 int u df; the
    gradient field is the exact P0 projection of 2u.  The scale does not
    affect thresholding, which only ranks cells.
    """
    vals = f.values()
    K = assemble_stiffness(mesh)
    b = assemble_load(mesh, vals)
    u = solve_dirichlet(K, b, mesh)
    return Evaluation(
        objective=float(b @ u),
        gradient=2.0 * cell_average(u, mesh),
        state=u,
        sense=+1,
    )


def eigen_evaluate(mesh: Mesh, f: BangBangDensity) -> Evaluation:
    """Principal eigenvalue of -lap u = lam f u with Dirichlet conditions.

    The derivative of lam along df is -lam * int df u^2 (u normalized by
    int f u^2 = 1), so the exposed gradient is +lam * P0(u^2): maximizing
    <gradient, f> over the admissible set decreases lam.
    """
    vals = f.values()
    K = assemble_stiffness(mesh)
    M = assemble_weighted_mass(mesh, vals)
    res = principal_eig(K, M, mesh)
    grad = res.lam * cell_average_square(res.u, mesh)
    return Evaluation(
        objective=res.lam,
        gradient=grad,
        state=res.u,
        eigenvalue=res.lam,
        sense=-1,
    )


def stationarity_residual(g, f: BangBangDensity, mesh: Mesh) -> float:
    """<g, f_best - f> in L2 where f_best thresholds g at the target volume.

    Nonnegative up to roundoff; zero exactly when f is a fixed point of its
    own threshold map.
    """
    from .rearrange import bathtub_threshold

    g = np.asarray(g, dtype=float)
    if g.shape != (mesh.n_cells,):
        raise ValueError(f"expected {mesh.n_cells} cell values, got shape {g.shape}")
    target = f.params.target_volume(mesh.total_area)
    best = bathtub_threshold(g, mesh, target)
    jump = f.params.f_plus - f.params.f_minus
    diff = best.astype(float) - f.indicator.astype(float)
    return jump * float((g * mesh.cell_area) @ diff)
