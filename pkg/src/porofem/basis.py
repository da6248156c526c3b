"""Reference-triangle Lagrange bases, quadrature rules and degree-of-freedom maps.

The reference triangle is {(x, y): x >= 0, y >= 0, x + y <= 1}. P2 nodes are
the three vertices followed by the midpoints of local edges (0,1), (1,2),
(2,0), which matches the edge ordering used by Mesh.tri_edges, so the global
scalar P2 numbering is simply vertices first, then edge midpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh


class ReferenceBasis:
    """Lagrange basis of degree 1 or 2 on the reference triangle."""

    def __init__(self, degree: int):
        if degree not in (1, 2):
            raise ValueError(f"unsupported basis degree {degree}")
        self.degree = degree
        if degree == 1:
            self.nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        else:
            self.nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                                   [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
        self.n_nodes = self.nodes.shape[0]

    def eval(self, points: np.ndarray):
        """Shape values (m, k) and reference gradients (m, k, 2) at points (m, 2)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        m = pts.shape[0]
        if self.degree == 1:
            vals = np.column_stack([1.0 - x - y, x, y])
            grads = np.broadcast_to(
                np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]), (m, 3, 2)
            ).copy()
            return vals, grads
        l0, l1, l2 = 1.0 - x - y, x, y
        vals = np.column_stack([
            l0 * (2.0 * l0 - 1.0),
            l1 * (2.0 * l1 - 1.0),
            l2 * (2.0 * l2 - 1.0),
            4.0 * l0 * l1,
            4.0 * l1 * l2,
            4.0 * l2 * l0,
        ])
        grads = np.empty((m, 6, 2))
        # dl0 = (-1,-1), dl1 = (1,0), dl2 = (0,1)
        grads[:, 0, 0] = -(4.0 * l0 - 1.0)
        grads[:, 0, 1] = -(4.0 * l0 - 1.0)
        grads[:, 1, 0] = 4.0 * l1 - 1.0
        grads[:, 1, 1] = 0.0
        grads[:, 2, 0] = 0.0
        grads[:, 2, 1] = 4.0 * l2 - 1.0
        grads[:, 3, 0] = 4.0 * (l0 - l1)
        grads[:, 3, 1] = -4.0 * l1
        grads[:, 4, 0] = 4.0 * l2
        grads[:, 4, 1] = 4.0 * l1
        grads[:, 5, 0] = -4.0 * l2
        grads[:, 5, 1] = 4.0 * (l0 - l2)
        return vals, grads


P1 = ReferenceBasis(1)
P2 = ReferenceBasis(2)


def shape_eval(basis: ReferenceBasis, ref_point) -> tuple[np.ndarray, np.ndarray]:
    """Values and reference gradients of one basis at a single reference point."""
    vals, grads = basis.eval(np.asarray(ref_point, dtype=float)[None, :])
    return vals[0], grads[0]


@dataclass(frozen=True)
class QuadratureRule:
    degree: int                 # polynomial degree integrated exactly
    points: np.ndarray          # (m, 2) reference coordinates
    weights: np.ndarray         # (m,), positive, summing to 1/2


def _orbit3(a: float):
    b = 0.5 * (1.0 - a)
    return [(a, b, b), (b, a, b), (b, b, a)]


def _orbit6(a: float, b: float):
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _rule(degree, groups):
    pts, wts = [], []
    for w, orbit in groups:
        for lam in orbit:
            pts.append((lam[1], lam[2]))    # bary (l0,l1,l2) -> ref (x,y)=(l1,l2)
            wts.append(w)
    return QuadratureRule(degree=degree,
                          points=np.array(pts),
                          weights=0.5 * np.array(wts))


_CENTROID = [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)]

# Symmetric positive-weight rules; weights are normalized to sum to 1 here
# and scaled by the reference area 1/2 in _rule.
_RULES = {
    1: [(1.0, _CENTROID)],
    2: [(1.0 / 3.0, _orbit3(2.0 / 3.0))],
    4: [(0.223381589678011, _orbit3(0.108103018168070)),
        (0.109951743655322, _orbit3(0.816847572980459))],
    5: [(0.225, _CENTROID),
        (0.132394152788506, _orbit3(0.059715871789770)),
        (0.125939180544827, _orbit3(0.797426985353087))],
    6: [(0.116786275726379, _orbit3(0.501426509658179)),
        (0.050844906370207, _orbit3(0.873821971016996)),
        (0.082851075618374, _orbit6(0.053145049844817, 0.310352451033784))],
    8: [(0.144315607677787, _CENTROID),
        (0.095091634267285, _orbit3(0.081414823414554)),
        (0.103217370534718, _orbit3(0.658861384496480)),
        (0.032458497623198, _orbit3(0.898905543365938)),
        (0.027230314174435, _orbit6(0.008394777409958, 0.263112829634638))],
    9: [(0.097135796282799, _CENTROID),
        (0.031334700227139, _orbit3(0.020634961602525)),
        (0.077827541004774, _orbit3(0.125820817014127)),
        (0.079647738927210, _orbit3(0.623592928761935)),
        (0.025577675658698, _orbit3(0.910540973211095)),
        (0.043283539377289, _orbit6(0.036838412054736, 0.221962989160766))],
}

# The classical minimal degree-3 and degree-7 rules carry a negative weight,
# so those degrees are served by the next positive rule up.
_DEGREE_ALIAS = {3: 4, 7: 8}


def triangle_quadrature(degree: int) -> QuadratureRule:
    """Positive-weight symmetric Gauss rule exact for polynomials up to degree."""
    if degree not in range(1, 10):
        raise ValueError(f"unsupported quadrature degree {degree}")
    table = _RULES[_DEGREE_ALIAS.get(degree, degree)]
    return _rule(degree, table)


# 3-point Gauss-Legendre on [0, 1]; exact for quintics, used on boundary edges
EDGE_GAUSS_POINTS = np.array([0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)])
EDGE_GAUSS_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


def map_to_physical(mesh: Mesh, element: int, ref_point):
    """Affine map of a reference point into element: (point, Jacobian, det)."""
    tri = mesh.triangles[element]
    p0, p1, p2 = mesh.vertices[tri]
    jac = np.column_stack([p1 - p0, p2 - p0])
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    if det <= 0:
        raise ValueError(f"element {element} is degenerate (det={det})")
    ref = np.asarray(ref_point, dtype=float)
    return p0 + jac @ ref, jac, det


class DofMap:
    """Global numbering for vector-P2 displacement and the two P1 scalars.

    Scalar P2 dofs are vertices then edge midpoints; displacement dofs are
    interleaved (scalar node s, component c) -> 2*s + c. The monolithic
    layout is [u block | xi block | eta block].
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        v, e = mesh.n_vertices, mesh.n_edges
        self.n_p2 = v + e
        self.n_u = 2 * self.n_p2
        self.n_p1 = v
        self.xi_offset = self.n_u
        self.eta_offset = self.n_u + v
        self.size = self.n_u + 2 * v

        self.p2_coords = np.vstack([mesh.vertices, mesh.edge_midpoints()])
        self.elem_p2 = np.hstack([mesh.triangles, v + mesh.tri_edges])
        self.elem_u = np.empty((mesh.n_triangles, 12), dtype=np.int64)
        self.elem_u[:, 0::2] = 2 * self.elem_p2
        self.elem_u[:, 1::2] = 2 * self.elem_p2 + 1
        self.elem_p1 = mesh.triangles

        # boundary node sets per tag: P1 = vertices, P2 adds edge midpoints
        self.boundary_vertices: dict[int, np.ndarray] = {}
        self.boundary_p2_nodes: dict[int, np.ndarray] = {}
        for tag in (1, 2, 3, 4):
            sel = mesh.boundary_tags == tag
            eids = mesh.boundary_edge_ids[sel]
            verts = np.unique(mesh.edges[eids].ravel())
            self.boundary_vertices[tag] = verts
            self.boundary_p2_nodes[tag] = np.unique(
                np.concatenate([verts, v + eids]))
        self.all_boundary_vertices = np.unique(
            np.concatenate([self.boundary_vertices[t] for t in (1, 2, 3, 4)]))


def build_dof_map(mesh: Mesh) -> DofMap:
    return DofMap(mesh)
