"""Structured triangulation of the unit square with tagged boundary edges.

Every cell of the n-by-n grid is split along its lower-left to upper-right
diagonal, so all triangles are congruent with signed area h^2/2 and the mesh
is deterministic for a given n. Boundary edges carry the tags

    GAMMA1 = {x=0},  GAMMA2 = {x=1},  GAMMA3 = {y=1},  GAMMA4 = {y=0}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GAMMA1, GAMMA2, GAMMA3, GAMMA4 = 1, 2, 3, 4

_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Immutable triangulation. Vertices are ordered y-major then x
    (vertex (i, j) -> index j*(n+1)+i), edges are lexicographically sorted
    unique vertex pairs, and tri_edges[t, k] is the edge joining local
    vertices k and (k+1) mod 3 of triangle t."""

    n: int
    h: float
    vertices: np.ndarray        # (V, 2) float
    triangles: np.ndarray       # (T, 3) int, counterclockwise
    edges: np.ndarray           # (E, 2) int, each row sorted, rows sorted
    tri_edges: np.ndarray       # (T, 3) int, edge ids for local edges (0,1),(1,2),(2,0)
    boundary_edge_ids: np.ndarray   # (nb,) int, indices into edges
    boundary_tags: np.ndarray       # (nb,) int, GAMMA1..GAMMA4
    boundary_normals: np.ndarray    # (nb, 2) float, outward unit normals
    boundary_tris: np.ndarray       # (nb,) int, the single incident triangle

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def boundary_edges(self):
        """(edge id, tag, outward normal) triples, one per boundary edge."""
        return list(zip(self.boundary_edge_ids.tolist(),
                        self.boundary_tags.tolist(),
                        [tuple(nrm) for nrm in self.boundary_normals]))

    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    def signed_areas(self) -> np.ndarray:
        p0 = self.vertices[self.triangles[:, 0]]
        p1 = self.vertices[self.triangles[:, 1]]
        p2 = self.vertices[self.triangles[:, 2]]
        return 0.5 * np.cross(p1 - p0, p2 - p0)


def classify_boundary(x: float, y: float, tol: float = _BOUNDARY_TOL) -> int:
    """Tag of a point on the unit-square boundary. Corners resolve by the
    priority GAMMA1 > GAMMA2 > GAMMA3 > GAMMA4; interior points are rejected."""
    if abs(x) <= tol:
        return GAMMA1
    if abs(x - 1.0) <= tol:
        return GAMMA2
    if abs(y - 1.0) <= tol:
        return GAMMA3
    if abs(y) <= tol:
        return GAMMA4
    raise ValueError(f"point ({x}, {y}) does not lie on the boundary")


def build_structured_mesh(n: int) -> Mesh:
    """Uniform diagonal-split triangulation with n subdivisions per side."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    h = 1.0 / n
    nv = n + 1

    xs = np.linspace(0.0, 1.0, nv)
    gx, gy = np.meshgrid(xs, xs)            # row j is y = j*h
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    a = (j * nv + i).ravel()                # lower-left corner of each cell
    b = a + 1
    c = a + nv + 1
    d = a + nv
    lower = np.column_stack([a, b, c])      # below the a-c diagonal
    upper = np.column_stack([a, c, d])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    # unique sorted vertex pairs; encode as a*V+b for vectorized lookup
    pairs = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]],
                            triangles[:, [2, 0]]])
    pairs.sort(axis=1)
    keys = pairs[:, 0] * (nv * nv) + pairs[:, 1]
    unique_keys, inverse = np.unique(keys, return_inverse=True)
    edges = np.column_stack([unique_keys // (nv * nv), unique_keys % (nv * nv)])
    t = triangles.shape[0]
    tri_edges = np.column_stack([inverse[:t], inverse[t:2 * t], inverse[2 * t:]])

    counts = np.bincount(tri_edges.ravel(), minlength=edges.shape[0])
    boundary_edge_ids = np.flatnonzero(counts == 1)

    # single incident triangle of each boundary edge
    owner = np.full(edges.shape[0], -1, dtype=np.int64)
    owner[tri_edges[:, 0]] = np.arange(t)
    owner[tri_edges[:, 1]] = np.arange(t)
    owner[tri_edges[:, 2]] = np.arange(t)
    boundary_tris = owner[boundary_edge_ids]

    mids = 0.5 * (vertices[edges[boundary_edge_ids, 0]]
                  + vertices[edges[boundary_edge_ids, 1]])
    boundary_tags = np.array([classify_boundary(xm, ym) for xm, ym in mids],
                             dtype=np.int64)

    # outward normal: rotate the edge tangent and orient away from the
    # opposite vertex of the incident triangle
    va = vertices[edges[boundary_edge_ids, 0]]
    vb = vertices[edges[boundary_edge_ids, 1]]
    tang = vb - va
    normals = np.column_stack([tang[:, 1], -tang[:, 0]])
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    for k, tri in enumerate(boundary_tris):
        tri_verts = set(triangles[tri])
        opp = (tri_verts - {edges[boundary_edge_ids[k], 0],
                            edges[boundary_edge_ids[k], 1]}).pop()
        if normals[k] @ (vertices[opp] - va[k]) > 0:
            normals[k] = -normals[k]

    return Mesh(n=n, h=h, vertices=vertices, triangles=triangles, edges=edges,
                tri_edges=tri_edges, boundary_edge_ids=boundary_edge_ids,
                boundary_tags=boundary_tags, boundary_normals=normals,
                boundary_tris=boundary_tris)
