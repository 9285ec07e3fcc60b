"""Planar triangle meshes: structured generation, text I/O, P0 projections.

A mesh is an immutable collection of vertices and counterclockwise triangles
together with precomputed cell areas and boundary-vertex flags.  Boundary
detection is combinatorial: a vertex is on the boundary exactly when it is
incident to an edge that belongs to a single triangle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Mesh",
    "MeshParseError",
    "build_rect_mesh",
    "load_mesh",
    "write_mesh",
    "cell_average",
    "cell_average_square",
]


class MeshParseError(ValueError):
    """Malformed mesh file; the message names the offending line."""


@dataclass(frozen=True)
class Mesh:
    """Immutable planar triangulation.

    vertices    (nv, 2) float coordinates
    triangles   (nt, 3) vertex indices, counterclockwise
    cell_area   (nt,) positive triangle areas
    is_boundary (nv,) True for vertices on a single-incidence edge
    total_area  sum of cell areas, i.e. the domain measure
    """

    vertices: np.ndarray
    triangles: np.ndarray
    cell_area: np.ndarray
    is_boundary: np.ndarray
    total_area: float

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.triangles.shape[0]


def _signed_area(vertices, triangles):
    p = vertices[triangles]
    return 0.5 * (
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    )


def _boundary_flags(n_vertices, triangles):
    edges = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    flags = np.zeros(n_vertices, dtype=bool)
    flags[uniq[counts == 1].ravel()] = True
    return flags


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _assemble_mesh(vertices, triangles):
    """Reorient clockwise triangles, compute areas and boundary flags."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    sa = _signed_area(vertices, triangles)
    flipped = sa < 0.0
    if flipped.any():
        triangles = triangles.copy()
        triangles[flipped] = triangles[flipped][:, [0, 2, 1]]
        sa = np.abs(sa)
    if np.any(sa <= 0.0):
        bad = int(np.flatnonzero(sa <= 0.0)[0])
        raise ValueError(f"triangle {bad} is degenerate (zero area)")
    total = float(sa.sum())
    return Mesh(
        vertices=_freeze(vertices),
        triangles=_freeze(triangles),
        cell_area=_freeze(sa),
        is_boundary=_freeze(_boundary_flags(vertices.shape[0], triangles)),
        total_area=total,
    )


def build_rect_mesh(nx: int, ny: int, lx: float, ly: float) -> Mesh:
    """Structured triangulation of [0,lx] x [0,ly] with nx*ny grid cells.

    Every grid cell is split along its lower-left to upper-right diagonal,
    giving 2*nx*ny triangles on (nx+1)*(ny+1) vertices.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be integers >= 1, got nx={nx} ny={ny}")
    if not (lx > 0 and ly > 0):
        raise ValueError(f"side lengths must be positive, got lx={lx} ly={ly}")
    nx, ny = int(nx), int(ny)
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    xg, yg = np.meshgrid(xs, ys)
    vertices = np.column_stack([xg.ravel(), yg.ravel()])
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny))
    v00 = (jj * (nx + 1) + ii).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([v00, v10, v11])
    triangles[1::2] = np.column_stack([v00, v11, v01])
    return _assemble_mesh(vertices, triangles)


def load_mesh(source) -> Mesh:
    """Read a mesh from a text file or stream.

    Format: first line "nv nt", then nv lines "x y", then nt lines "i j k"
    with 0-based vertex indices.  Clockwise triangles are reoriented;
    degenerate ones are rejected.  Parse failures name the offending line.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()

    def fail(lineno, msg):
        raise MeshParseError(f"line {lineno}: {msg}")

    if not lines:
        fail(1, "empty mesh file")
    head = lines[0].split()
    if len(head) != 2:
        fail(1, f"expected header 'nv nt', got {lines[0]!r}")
    try:
        nv, nt = int(head[0]), int(head[1])
    except ValueError:
        fail(1, f"expected integer counts, got {lines[0]!r}")
    if nv < 3 or nt < 1:
        fail(1, f"need at least 3 vertices and 1 triangle, got nv={nv} nt={nt}")
    if len(lines) < 1 + nv + nt:
        fail(len(lines) + 1, f"file ends early, expected {1 + nv + nt} lines")

    vertices = np.empty((nv, 2))
    for i in range(nv):
        lineno = 2 + i
        parts = lines[1 + i].split()
        if len(parts) != 2:
            fail(lineno, f"expected 'x y', got {lines[1 + i]!r}")
        try:
            vertices[i] = [float(parts[0]), float(parts[1])]
        except ValueError:
            fail(lineno, f"expected two floats, got {lines[1 + i]!r}")

    triangles = np.empty((nt, 3), dtype=np.int64)
    for t in range(nt):
        lineno = 2 + nv + t
        parts = lines[1 + nv + t].split()
        if len(parts) != 3:
            fail(lineno, f"expected 'i j k', got {lines[1 + nv + t]!r}")
        try:
            idx = [int(p) for p in parts]
        except ValueError:
            fail(lineno, f"expected three integers, got {lines[1 + nv + t]!r}")
        for p in idx:
            if not 0 <= p < nv:
                fail(lineno, f"vertex index {p} out of range [0, {nv})")
        triangles[t] = idx

    try:
        return _assemble_mesh(vertices, triangles)
    except ValueError as exc:
        # locate the degenerate triangle for the line number
        sa = np.abs(_signed_area(vertices, triangles))
        bad = int(np.argmin(sa))
        fail(2 + nv + bad, str(exc))


def write_mesh(mesh: Mesh, target) -> None:
    """Write a mesh in the load_mesh text format (17 significant digits)."""
    own = not hasattr(target, "write")
    fh = open(target, "w", encoding="ascii") if own else target
    try:
        fh.write(f"{mesh.n_vertices} {mesh.n_cells}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
    finally:
        if own:
            fh.close()


def cell_average(u, mesh: Mesh) -> np.ndarray:
    """Exact per-cell mean of the P1 interpolant of nodal values u."""
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise ValueError(
            f"expected {mesh.n_vertices} nodal values, got shape {u.shape}"
        )
    return u[mesh.triangles].mean(axis=1)


def cell_average_square(u, mesh: Mesh) -> np.ndarray:
    """Exact per-cell mean of the squared P1 interpolant of u.

    On a triangle with corner values (a, b, c) the mean of the square is
    ((a+b+c)^2 + a^2 + b^2 + c^2) / 12.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise ValueError(
            f"expected {mesh.n_vertices} nodal values, got shape {u.shape}"
        )
    uc = u[mesh.triangles]
    return (uc.sum(axis=1) ** 2 + (uc**2).sum(axis=1)) / 12.0
