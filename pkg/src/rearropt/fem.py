"""P1 finite elements: assembly, Dirichlet solve, principal eigenpair.

Stiffness, load and f-weighted mass are assembled over the triangles with the
usual closed-form P1 element matrices.  Dirichlet conditions are imposed by
elimination (restriction to interior unknowns).  The linear solver is a
Jacobi-preconditioned conjugate gradient; the eigen solver is inverse power
iteration on K u = lambda M_f u with a sparse LU factorization of K reused
across power steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .mesh import Mesh

__all__ = [
    "AssemblyError",
    "SolverError",
    "EigenResult",
    "assemble_stiffness",
    "assemble_load",
    "assemble_weighted_mass",
    "solve_dirichlet",
    "principal_eig",
]

# local mass matrix of int phi_i phi_j on a triangle, divided by |T|/12
_MASS_BASE = np.ones((3, 3)) + np.eye(3)


class AssemblyError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class EigenResult:
    """Principal eigenpair: lam > 0 and the M_f-normalized eigenvector."""

    lam: float
    u: np.ndarray


def _scatter(mesh, local):
    """Accumulate (nt, 3, 3) local blocks into a CSR matrix."""
    nv = mesh.n_vertices
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(nv, nv))
    return mat.tocsr()


def assemble_stiffness(mesh: Mesh):
    """Stiffness K with K_ij = sum_T int_T grad(phi_i) . grad(phi_j)."""
    area = mesh.cell_area
    if np.any(area < 1e-14 * mesh.total_area):
        bad = int(np.argmin(area))
        raise AssemblyError(
            f"triangle {bad} is degenerate (area {area[bad]:.3e} "
            f"vs total {mesh.total_area:.3e})"
        )
    p = mesh.vertices[mesh.triangles]
    # grad phi_i = (y_j - y_k, x_k - x_j) / (2A) for (i, j, k) cyclic
    grads = np.empty((mesh.n_cells, 3, 2))
    for i, (j, k) in enumerate(((1, 2), (2, 0), (0, 1))):
        grads[:, i, 0] = p[:, j, 1] - p[:, k, 1]
        grads[:, i, 1] = p[:, k, 0] - p[:, j, 0]
    grads /= (2.0 * area)[:, None, None]
    local = np.einsum("tid,tjd->tij", grads, grads) * area[:, None, None]
    return _scatter(mesh, local)


def assemble_load(mesh: Mesh, f):
    """Load vector b_i = sum_{T contains i} f_T |T| / 3 for cellwise f."""
    f = np.asarray(f, dtype=float)
    if f.shape != (mesh.n_cells,):
        raise ValueError(f"expected {mesh.n_cells} cell values, got shape {f.shape}")
    w = np.repeat(f * mesh.cell_area / 3.0, 3)
    return np.bincount(mesh.triangles.ravel(), weights=w, minlength=mesh.n_vertices)


def assemble_weighted_mass(mesh: Mesh, f):
    """Weighted mass M_f = sum_T f_T (|T|/12) [[2,1,1],[1,2,1],[1,1,2]]."""
    f = np.asarray(f, dtype=float)
    if f.shape != (mesh.n_cells,):
        raise ValueError(f"expected {mesh.n_cells} cell values, got shape {f.shape}")
    if np.any(f <= 0.0):
        bad = int(np.flatnonzero(f <= 0.0)[0])
        raise ValueError(f"weight must be positive, cell {bad} has f={f[bad]}")
    local = (f * mesh.cell_area / 12.0)[:, None, None] * _MASS_BASE
    return _scatter(mesh, local)


def _pcg_jacobi(a, b, tol, max_iter):
    """Conjugate gradients with diagonal preconditioning.

    Stops at ||r|| <= tol * ||b||; raises SolverError (carrying the final
    relative residual) if max_iter sweeps do not get there.
    """
    n = b.shape[0]
    x = np.zeros(n)
    if n == 0:
        return x
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return x
    dinv = 1.0 / a.diagonal()
    r = b.copy()
    z = dinv * r
    p = z.copy()
    rz = float(r @ z)
    for _ in range(max_iter):
        ap = a @ p
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= tol * nb:
            return x
        z = dinv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    rel = float(np.linalg.norm(r) / nb)
    raise SolverError(
        f"CG did not converge in {max_iter} iterations "
        f"(relative residual {rel:.3e})",
        residual=rel,
    )


def solve_dirichlet(K, b, mesh: Mesh, tol: float = 1e-12):
    """Solve K u = b with u = 0 on boundary vertices.

    The interior subsystem goes through Jacobi-preconditioned CG with an
    iteration cap of 10x the interior dimension.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (mesh.n_vertices,):
        raise ValueError(f"expected {mesh.n_vertices} entries, got shape {b.shape}")
    interior = ~mesh.is_boundary
    a = K[interior][:, interior].tocsr()
    x = _pcg_jacobi(a, b[interior], tol=tol, max_iter=max(1, 10 * a.shape[0]))
    u = np.zeros(mesh.n_vertices)
    u[interior] = x
    return u


def principal_eig(
    K,
    M,
    mesh: Mesh,
    tol_lambda: float = 1e-12,
    tol_residual: float = 1e-8,
    max_iter: int = 10000,
) -> EigenResult:
    """Smallest eigenpair of K u = lam M u on the interior vertices.

    Inverse power iteration: each step solves K w = M u through a sparse LU
    factorization computed once, then M-normalizes w.  Iteration stops once
    the eigenvalue is stationary (|d lam| / lam < tol_lambda) and the
    relative residual ||K u - lam M u|| / ||K u|| is below tol_residual.
    The sign is fixed so the largest-magnitude entry is positive.
    """
    interior = ~mesh.is_boundary
    a = K[interior][:, interior].tocsc()
    m = M[interior][:, interior].tocsr()
    n = a.shape[0]
    if n == 0:
        raise SolverError("mesh has no interior vertices")
    lu = splu(a)
    u = np.ones(n)
    u /= np.sqrt(float(u @ (m @ u)))
    lam = np.inf
    for _ in range(max_iter):
        lam_prev = lam
        w = lu.solve(m @ u)
        w /= np.sqrt(float(w @ (m @ w)))
        aw = a @ w
        lam = float(w @ aw)
        resid = float(np.linalg.norm(aw - lam * (m @ w)) / np.linalg.norm(aw))
        u = w
        if abs(lam - lam_prev) <= tol_lambda * lam and resid < tol_residual:
            break
    else:
        raise SolverError(
            f"inverse power iteration did not converge in {max_iter} "
            f"iterations (relative residual {resid:.3e})",
            residual=resid,
        )
    full = np.zeros(mesh.n_vertices)
    full[interior] = u
    if full[np.argmax(np.abs(full))] < 0:
        full = -full
    return EigenResult(lam=lam, u=full)
