"""Independent numeric oracles shared by the test modules.

These deliberately avoid the code paths they check: quadrature instead of
closed-form means, exhaustive search instead of sorting, rational arithmetic
instead of floating shortcuts.
"""

import itertools
import math

import numpy as np

# 7-point Gauss rule on the reference triangle (degree 5), barycentric
# points and weights normalized to sum to 1.
_A = (6.0 - math.sqrt(15.0)) / 21.0
_B = (6.0 + math.sqrt(15.0)) / 21.0
_WA = (155.0 - math.sqrt(15.0)) / 1200.0
_WB = (155.0 + math.sqrt(15.0)) / 1200.0
GAUSS7_BARY = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [_A, _A, 1 - 2 * _A],
        [_A, 1 - 2 * _A, _A],
        [1 - 2 * _A, _A, _A],
        [_B, _B, 1 - 2 * _B],
        [_B, 1 - 2 * _B, _B],
        [1 - 2 * _B, _B, _B],
    ]
)
GAUSS7_W = np.array([9 / 40, _WA, _WA, _WA, _WB, _WB, _WB])


def quad_cell_mean(mesh, u, square=False):
    """Per-cell mean of the P1 interpolant of u (or its square) by quadrature."""
    corner = u[mesh.triangles]  # (nt, 3)
    vals = corner @ GAUSS7_BARY.T  # interpolant at the quadrature points
    if square:
        vals = vals**2
    return vals @ GAUSS7_W


def quad_load(mesh, f):
    """Load vector b_i = sum_T f_T int_T phi_i by quadrature."""
    b = np.zeros(mesh.n_vertices)
    for t in range(mesh.n_cells):
        for loc in range(3):
            phi = GAUSS7_BARY[:, loc]
            integral = float((phi * GAUSS7_W).sum()) * mesh.cell_area[t]
            b[mesh.triangles[t, loc]] += f[t] * integral
    return b


def brute_force_threshold(g, areas, volume):
    """Best fixed-size subset by exhaustive search.

    Mirrors the discrete bathtub problem: among all subsets whose cell count
    equals the bathtub count for `volume` (areas equal), maximize
    sum_{T in D} g_T |T|.  Returns (best value, best subset as a frozenset).
    """
    n = len(g)
    weighted = np.asarray(g) * np.asarray(areas)
    order = np.argsort(-np.asarray(g), kind="stable")
    csum = np.cumsum(np.asarray(areas)[order])
    k = int(np.searchsorted(csum, volume * (1.0 + 1e-12), side="right"))
    combs = np.array(list(itertools.combinations(range(n), k)), dtype=int)
    vals = weighted[combs].sum(axis=1)
    best = int(np.argmax(vals))
    return float(vals[best]), frozenset(int(i) for i in combs[best])


# Dirichlet Poisson -lap u = 1 on the unit square, value at the center,
# from the double sine series sum 16/(pi^4 m n (m^2+n^2)) sin(m pi/2) sin(n pi/2)
FOURIER_CENTER_UNIT_SQUARE = 0.0736713512666702
