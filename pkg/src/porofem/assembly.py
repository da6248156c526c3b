"""Sparse assembly of one linearized time step of the three-field system.

One backward-Euler step with the volumetric law frozen at a Picard iterate
u* solves, for trial (u, xi, eta) and the previous-level eta_prev:

    row u:    (N*(eps u), eps v) - (xi, div v)            = (f, v) + <f1, v>
    row xi:   kappa3 (xi, w) + (div u, w) - theta kappa1 (eta, w)
                                                          = (1-theta) kappa1 (eta_prev, w)
    row eta:  (eta, s)/dt + (K/mu_f)(grad(kappa1 xi + kappa2 eta), grad s)
                    = (eta_prev, s)/dt + (phi, s) + <phi1, s> + (K/mu_f)(rho_f g, grad s)

with N*(eps) = mu_tilde(rho*) eps + (lambda_tilde(rho*) - 1/lambda) tr(eps) I
and rho* evaluated from u*. Element loops are vectorized over the whole mesh;
COO duplicates are summed in a fixed order, so assembly is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .basis import (EDGE_GAUSS_POINTS, EDGE_GAUSS_WEIGHTS, P1, P2, DofMap,
                    triangle_quadrature)
from .constitutive import ConstitutiveLaw
from .mesh import Mesh
from .params import DerivedCoeffs, PhysicalParams

ASSEMBLY_QUAD_DEGREE = 5

# Dirichlet-pinned displacement components per boundary tag: u1 on {x=0} and
# {y=1}, u2 on {x=1} and {y=0}; the complementary component on each edge is
# traction-driven.
DIRICHLET_COMPONENTS = {1: (0,), 2: (1,), 3: (0,), 4: (1,)}

_SQRT2 = np.sqrt(2.0)


class ElementData:
    """Shape values, physical gradients and quadrature data at one degree."""

    def __init__(self, mesh: Mesh, degree: int):
        rule = triangle_quadrature(degree)
        self.rule = rule
        self.p2_vals, p2_ref_grads = P2.eval(rule.points)
        self.p1_vals, p1_ref_grads = P1.eval(rule.points)

        tri = mesh.triangles
        p0 = mesh.vertices[tri[:, 0]]
        jac = np.stack([mesh.vertices[tri[:, 1]] - p0,
                        mesh.vertices[tri[:, 2]] - p0], axis=2)   # (T,2,2) cols
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        inv_t = np.empty_like(jac)                                # J^{-T}
        inv_t[:, 0, 0] = jac[:, 1, 1]
        inv_t[:, 0, 1] = -jac[:, 1, 0]
        inv_t[:, 1, 0] = -jac[:, 0, 1]
        inv_t[:, 1, 1] = jac[:, 0, 0]
        inv_t /= det[:, None, None]

        self.det = det
        self.wdet = rule.weights[None, :] * det[:, None]          # (T, nq)
        self.grad_p2 = np.einsum('tab,qib->tqia', inv_t, p2_ref_grads)
        self.grad_p1 = np.einsum('tab,qib->tqia', inv_t, p1_ref_grads)

        ref = rule.points
        phys = p0[:, None, :] + np.einsum('tab,qb->tqa', jac, ref)
        self.qx = phys[..., 0]
        self.qy = phys[..., 1]

        # strain of the 12 interleaved vector-P2 basis functions as
        # (e11, e22, sqrt2*e12) triples, so strain:strain is a dot product
        gx, gy = self.grad_p2[..., 0], self.grad_p2[..., 1]
        nt, nq = gx.shape[0], gx.shape[1]
        S = np.zeros((nt, nq, 12, 3))
        S[..., 0::2, 0] = gx
        S[..., 0::2, 2] = gy / _SQRT2
        S[..., 1::2, 1] = gy
        S[..., 1::2, 2] = gx / _SQRT2
        self.strain_basis = S
        D = np.zeros((nt, nq, 12))
        D[..., 0::2] = gx
        D[..., 1::2] = gy
        self.div_basis = D


class AssemblyContext:
    """Mesh + dof map with cached element data, constant blocks and edge data."""

    def __init__(self, mesh: Mesh, dofmap: DofMap | None = None,
                 quad_degree: int = ASSEMBLY_QUAD_DEGREE):
        self.mesh = mesh
        self.dofmap = dofmap if dofmap is not None else DofMap(mesh)
        self.quad_degree = quad_degree
        self._elem_data: dict[int, ElementData] = {}
        self._blocks: dict[str, sp.csr_matrix] = {}
        self._build_edge_cache()

    def element_data(self, degree: int | None = None) -> ElementData:
        degree = self.quad_degree if degree is None else degree
        if degree not in self._elem_data:
            self._elem_data[degree] = ElementData(self.mesh, degree)
        return self._elem_data[degree]

    # constant sparse blocks -------------------------------------------------

    def _scatter(self, local, rows_map, cols_map, shape) -> sp.csr_matrix:
        nloc_r, nloc_c = local.shape[1], local.shape[2]
        rows = np.repeat(rows_map, nloc_c, axis=1).ravel()
        cols = np.tile(cols_map, (1, nloc_r)).ravel()
        return sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsr()

    def block(self, name: str) -> sp.csr_matrix:
        if name in self._blocks:
            return self._blocks[name]
        ed = self.element_data()
        dm = self.dofmap
        if name == 'B':            # (xi, div v): rows u, cols xi
            local = np.einsum('tq,tqi,qj->tij', ed.wdet, ed.div_basis, ed.p1_vals)
            mat = self._scatter(local, dm.elem_u, dm.elem_p1, (dm.n_u, dm.n_p1))
        elif name == 'M1':         # P1 mass
            local = np.einsum('tq,qi,qj->tij', ed.wdet, ed.p1_vals, ed.p1_vals)
            mat = self._scatter(local, dm.elem_p1, dm.elem_p1, (dm.n_p1, dm.n_p1))
        elif name == 'D1':         # P1 stiffness
            local = np.einsum('tq,tqia,tqja->tij', ed.wdet, ed.grad_p1, ed.grad_p1)
            mat = self._scatter(local, dm.elem_p1, dm.elem_p1, (dm.n_p1, dm.n_p1))
        elif name == 'Ku':         # vector P2 full-gradient stiffness
            k2 = np.einsum('tq,tqia,tqja->tij', ed.wdet, ed.grad_p2, ed.grad_p2)
            local = np.einsum('tij,cd->ticjd', k2, np.eye(2)).reshape(-1, 12, 12)
            mat = self._scatter(local, dm.elem_u, dm.elem_u, (dm.n_u, dm.n_u))
        elif name == 'Mu':         # vector P2 mass
            m2 = np.einsum('tq,qi,qj->tij', ed.wdet, ed.p2_vals, ed.p2_vals)
            local = np.einsum('tij,cd->ticjd', m2, np.eye(2)).reshape(-1, 12, 12)
            mat = self._scatter(local, dm.elem_u, dm.elem_u, (dm.n_u, dm.n_u))
        else:
            raise KeyError(name)
        self._blocks[name] = mat
        return mat

    # boundary edge cache ----------------------------------------------------

    def _build_edge_cache(self):
        mesh, dm = self.mesh, self.dofmap
        eids = mesh.boundary_edge_ids
        a = mesh.edges[eids, 0]
        b = mesh.edges[eids, 1]
        va, vb = mesh.vertices[a], mesh.vertices[b]
        self.be_nodes = np.column_stack([a, b, mesh.n_vertices + eids])
        self.be_tags = mesh.boundary_tags
        self.be_normals = mesh.boundary_normals
        self.be_len = np.linalg.norm(vb - va, axis=1)
        s = EDGE_GAUSS_POINTS
        self.be_qx = va[:, None, 0] + s[None, :] * (vb[:, 0] - va[:, 0])[:, None]
        self.be_qy = va[:, None, 1] + s[None, :] * (vb[:, 1] - va[:, 1])[:, None]
        # traces of the edge's P2 nodes (endpoints a, b and midpoint) and of
        # the P1 endpoints at the edge Gauss points
        self.edge_trace_p2 = np.column_stack([
            (1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)])
        self.edge_trace_p1 = np.column_stack([1.0 - s, s])

    # pointwise evaluation of a discrete displacement ------------------------

    def strain_at_qp(self, u: np.ndarray, degree: int | None = None):
        """(e11, e22, e12) arrays of shape (T, nq) for a u coefficient vector."""
        ed = self.element_data(degree)
        uloc = u[self.dofmap.elem_u]
        sv = np.einsum('tqia,ti->tqa', ed.strain_basis, uloc)
        return sv[..., 0], sv[..., 1], sv[..., 2] / _SQRT2


@dataclass
class BoundaryData:
    """Per-tag boundary specification for displacement and the flow pair.

    Components listed in dirichlet_u are pinned; the complementary ones on
    each edge take the traction integral. The flow variables are either both
    pinned on the whole boundary ('dirichlet-xi-eta') or left free with a
    prescribed normal flux ('neumann-flux').
    """

    dirichlet_u: dict            # tag -> {component: g(x, y, t)}
    traction: Optional[Callable]  # (x, y, t, (nx, ny)) -> (f1_1, f1_2)
    flow_strategy: str = 'dirichlet-xi-eta'
    xi_value: Optional[Callable] = None     # (x, y, t)
    eta_value: Optional[Callable] = None
    flux_value: Optional[Callable] = None   # (x, y, t, (nx, ny))

    def __post_init__(self):
        if self.flow_strategy not in ('dirichlet-xi-eta', 'neumann-flux'):
            raise ValueError(f"unknown flow strategy {self.flow_strategy!r}")
        for tag in (1, 2, 3, 4):
            comps = self.dirichlet_u.get(tag, {})
            for c in (0, 1):
                if c not in comps and self.traction is None:
                    raise ValueError(
                        f"component {c} on tag {tag} has neither Dirichlet "
                        f"data nor a traction evaluator")
        if self.flow_strategy == 'dirichlet-xi-eta':
            if self.xi_value is None or self.eta_value is None:
                raise ValueError("dirichlet-xi-eta strategy needs xi and eta values")
        elif self.flux_value is None:
            raise ValueError("neumann-flux strategy needs a flux evaluator")

    @classmethod
    def from_case(cls, case, strategy: str = 'dirichlet-xi-eta') -> "BoundaryData":
        dirich = {tag: {c: (lambda x, y, t, c=c: case.displacement(x, y, t)[c])
                        for c in comps}
                  for tag, comps in DIRICHLET_COMPONENTS.items()}
        return cls(dirichlet_u=dirich, traction=case.traction,
                   flow_strategy=strategy, xi_value=case.xi, eta_value=case.eta,
                   flux_value=case.flux)

    @classmethod
    def zero(cls, strategy: str = 'dirichlet-xi-eta') -> "BoundaryData":
        zero_s = lambda x, y, t: 0.0 * np.asarray(x)
        zero_v = lambda x, y, t, normal: (0.0 * np.asarray(x), 0.0 * np.asarray(x))
        dirich = {tag: {c: zero_s for c in comps}
                  for tag, comps in DIRICHLET_COMPONENTS.items()}
        return cls(dirichlet_u=dirich, traction=zero_v, flow_strategy=strategy,
                   xi_value=zero_s, eta_value=zero_s,
                   flux_value=lambda x, y, t, normal: 0.0 * np.asarray(x))


@dataclass
class SparseSystem:
    """One assembled step: matrix, right-hand side and the Dirichlet record."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    bc_dofs: np.ndarray
    bc_vals: np.ndarray
    eliminated: bool = False


def eliminate_dirichlet(matrix: sp.csr_matrix, rhs: np.ndarray,
                        bc_dofs: np.ndarray, bc_vals: np.ndarray):
    """Symmetric elimination: move known columns to the rhs, replace
    constrained rows/columns by identity rows carrying the values."""
    n = rhs.shape[0]
    x_bc = np.zeros(n)
    x_bc[bc_dofs] = bc_vals
    rhs2 = rhs - matrix @ x_bc
    free = np.ones(n)
    free[bc_dofs] = 0.0
    proj = sp.diags(free)
    pinned = sp.diags(1.0 - free)
    mat2 = (proj @ matrix @ proj + pinned).tocsr()
    rhs2 *= free
    rhs2[bc_dofs] = bc_vals
    return mat2, rhs2


def apply_dirichlet(system: SparseSystem, dofmap: DofMap | None = None) -> SparseSystem:
    """Eliminate the system's recorded constraints. If a dof map is given,
    every constrained dof must belong to a boundary node."""
    if dofmap is not None and system.bc_dofs.size:
        allowed = _boundary_dof_set(dofmap)
        bad = np.setdiff1d(system.bc_dofs, allowed)
        if bad.size:
            raise ValueError(f"Dirichlet value specified for non-boundary dofs {bad[:5]}")
    mat, rhs = eliminate_dirichlet(system.matrix, system.rhs,
                                   system.bc_dofs, system.bc_vals)
    return SparseSystem(matrix=mat, rhs=rhs, bc_dofs=system.bc_dofs,
                        bc_vals=system.bc_vals, eliminated=True)


def _boundary_dof_set(dofmap: DofMap) -> np.ndarray:
    nodes = np.unique(np.concatenate([dofmap.boundary_p2_nodes[t] for t in (1, 2, 3, 4)]))
    u_dofs = np.concatenate([2 * nodes, 2 * nodes + 1])
    bv = dofmap.all_boundary_vertices
    return np.unique(np.concatenate([
        u_dofs, dofmap.xi_offset + bv, dofmap.eta_offset + bv]))


def dirichlet_record(ctx: AssemblyContext, boundary: BoundaryData, t: float):
    """Constrained monolithic dofs and their values at time t."""
    dm = ctx.dofmap
    dofs, vals = [], []
    for tag, comps in boundary.dirichlet_u.items():
        nodes = dm.boundary_p2_nodes[tag]
        xs, ys = dm.p2_coords[nodes, 0], dm.p2_coords[nodes, 1]
        for comp, fn in comps.items():
            dofs.append(2 * nodes + comp)
            vals.append(np.broadcast_to(np.asarray(fn(xs, ys, t), dtype=float),
                                        nodes.shape).copy())
    if boundary.flow_strategy == 'dirichlet-xi-eta':
        bv = dm.all_boundary_vertices
        xs, ys = ctx.mesh.vertices[bv, 0], ctx.mesh.vertices[bv, 1]
        dofs.append(dm.xi_offset + bv)
        vals.append(np.broadcast_to(np.asarray(boundary.xi_value(xs, ys, t),
                                               dtype=float), bv.shape).copy())
        dofs.append(dm.eta_offset + bv)
        vals.append(np.broadcast_to(np.asarray(boundary.eta_value(xs, ys, t),
                                               dtype=float), bv.shape).copy())
    if not dofs:
        return np.empty(0, dtype=np.int64), np.empty(0)
    dofs = np.concatenate(dofs)
    vals = np.concatenate(vals)
    uniq, first = np.unique(dofs, return_index=True)
    return uniq, vals[first]


# element-volume contributions ------------------------------------------------

def assemble_stiffness_u(ctx: AssemblyContext, law: ConstitutiveLaw,
                         u_frozen: np.ndarray) -> sp.csr_matrix:
    """(N*(eps u), eps v) with coefficients frozen at u_frozen."""
    ed = ctx.element_data()
    dm = ctx.dofmap
    if u_frozen.shape[0] != dm.n_u:
        raise ValueError(f"u_frozen has size {u_frozen.shape[0]}, expected {dm.n_u}")
    e11, e22, e12 = ctx.strain_at_qp(u_frozen)
    rho = 0.5 * (e11 - e22) ** 2 + 2.0 * e12 ** 2
    mu_t = law.mu_tilde(rho)
    lam_s = law.lambda_shift(rho)
    local = (np.einsum('tq,tqia,tqja->tij', ed.wdet * mu_t,
                       ed.strain_basis, ed.strain_basis, optimize=True)
             + np.einsum('tq,tqi,tqj->tij', ed.wdet * lam_s,
                         ed.div_basis, ed.div_basis, optimize=True))
    return ctx._scatter(local, dm.elem_u, dm.elem_u, (dm.n_u, dm.n_u))


def assemble_load_u(ctx: AssemblyContext, body_force: Callable, t: float) -> np.ndarray:
    """(f(t), v) over the vector P2 test space."""
    ed = ctx.element_data()
    dm = ctx.dofmap
    f1, f2 = body_force(ed.qx, ed.qy, t)
    rhs = np.zeros(dm.n_u)
    loc1 = np.einsum('tq,qi->ti', ed.wdet * f1, ed.p2_vals)
    loc2 = np.einsum('tq,qi->ti', ed.wdet * f2, ed.p2_vals)
    np.add.at(rhs, dm.elem_u[:, 0::2].ravel(), loc1.ravel())
    np.add.at(rhs, dm.elem_u[:, 1::2].ravel(), loc2.ravel())
    return rhs


def assemble_load_p1(ctx: AssemblyContext, source: Callable, t: float) -> np.ndarray:
    """(phi(t), s) over the P1 test space."""
    ed = ctx.element_data()
    dm = ctx.dofmap
    phi = source(ed.qx, ed.qy, t)
    rhs = np.zeros(dm.n_p1)
    loc = np.einsum('tq,qi->ti', ed.wdet * phi, ed.p1_vals)
    np.add.at(rhs, dm.elem_p1.ravel(), loc.ravel())
    return rhs


def assemble_gravity_p1(ctx: AssemblyContext, params: PhysicalParams) -> np.ndarray:
    """(K/mu_f)(rho_f g, grad s); zero vector when gravity is off."""
    dm = ctx.dofmap
    g = np.asarray(params.rho_f_g, dtype=float)
    if not g.any():
        return np.zeros(dm.n_p1)
    ed = ctx.element_data()
    loc = (params.K / params.mu_f) * np.einsum('tq,tqia,a->ti', ed.wdet, ed.grad_p1, g)
    rhs = np.zeros(dm.n_p1)
    np.add.at(rhs, dm.elem_p1.ravel(), loc.ravel())
    return rhs


# boundary-edge contributions --------------------------------------------------

def assemble_traction(ctx: AssemblyContext, traction: Callable, t: float,
                      dirichlet_u: dict) -> np.ndarray:
    """Edge Gauss integration of <f1, v>, skipping test components that are
    Dirichlet-pinned on the edge's tag."""
    dm = ctx.dofmap
    rhs = np.zeros(dm.n_u)
    if traction is None or ctx.be_nodes.shape[0] == 0:
        return rhs
    nx = ctx.be_normals[:, 0][:, None]
    ny = ctx.be_normals[:, 1][:, None]
    t1, t2 = traction(ctx.be_qx, ctx.be_qy, t, (nx, ny))
    w = EDGE_GAUSS_WEIGHTS
    for comp, tv in ((0, np.asarray(t1, dtype=float)), (1, np.asarray(t2, dtype=float))):
        tv = np.broadcast_to(tv, ctx.be_qx.shape).copy()
        for tag, comps in dirichlet_u.items():
            if comp in comps:
                tv[ctx.be_tags == tag] = 0.0
        loc = ctx.be_len[:, None] * np.einsum('eq,qk->ek', w * tv, ctx.edge_trace_p2)
        np.add.at(rhs, (2 * ctx.be_nodes + comp).ravel(), loc.ravel())
    return rhs


def assemble_flux(ctx: AssemblyContext, flux: Callable, t: float) -> np.ndarray:
    """<phi1, s> over the P1 trace of every boundary edge."""
    dm = ctx.dofmap
    rhs = np.zeros(dm.n_p1)
    if flux is None or ctx.be_nodes.shape[0] == 0:
        return rhs
    nx = ctx.be_normals[:, 0][:, None]
    ny = ctx.be_normals[:, 1][:, None]
    fv = np.broadcast_to(np.asarray(flux(ctx.be_qx, ctx.be_qy, t, (nx, ny)),
                                    dtype=float), ctx.be_qx.shape)
    w = EDGE_GAUSS_WEIGHTS
    loc = ctx.be_len[:, None] * np.einsum('eq,qk->ek', w * fv, ctx.edge_trace_p1)
    np.add.at(rhs, ctx.be_nodes[:, :2].ravel(), loc.ravel())
    return rhs


# the full step system ---------------------------------------------------------

def step_rhs_blocks(ctx: AssemblyContext, params: PhysicalParams,
                    coeffs: DerivedCoeffs, eta_prev: np.ndarray, t_next: float,
                    dt: float, theta: int, forcing, boundary: BoundaryData):
    """Right-hand sides of the three rows; independent of the Picard iterate."""
    m1 = ctx.block('M1')
    rhs_u = (assemble_load_u(ctx, forcing.body_force, t_next)
             + assemble_traction(ctx, boundary.traction, t_next, boundary.dirichlet_u))
    rhs_xi = (1.0 - theta) * coeffs.kappa1 * (m1 @ eta_prev)
    rhs_eta = (m1 @ eta_prev) / dt + assemble_load_p1(ctx, forcing.source, t_next)
    rhs_eta += assemble_gravity_p1(ctx, params)
    if boundary.flow_strategy == 'neumann-flux':
        rhs_eta += assemble_flux(ctx, boundary.flux_value, t_next)
    return rhs_u, rhs_xi, rhs_eta


def assemble_step_system(ctx: AssemblyContext, params: PhysicalParams,
                         coeffs: DerivedCoeffs, law: ConstitutiveLaw,
                         u_frozen: np.ndarray, state_prev, t_next: float,
                         dt: float, theta: int, forcing,
                         boundary: BoundaryData) -> SparseSystem:
    """Monolithic system for one Picard iterate of one time step.

    For theta=0 the matrix is block-triangular between (u, xi) and eta; the
    solver exploits that with two smaller solves, but the monolithic form
    assembled here yields the identical solution and is what the dense
    brute-force oracle checks against.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if theta not in (0, 1):
        raise ValueError(f"theta must be 0 or 1, got {theta}")
    dm = ctx.dofmap
    if state_prev.eta.shape[0] != dm.n_p1 or u_frozen.shape[0] != dm.n_u:
        raise ValueError("state vectors do not match the dof map")

    a_uu = assemble_stiffness_u(ctx, law, u_frozen)
    b = ctx.block('B')
    m1 = ctx.block('M1')
    d1 = ctx.block('D1')
    kd = params.K / params.mu_f
    k1, k2, k3 = coeffs.kappa1, coeffs.kappa2, coeffs.kappa3

    matrix = sp.bmat([
        [a_uu, -b, None],
        [b.T, k3 * m1, (-theta * k1) * m1 if theta else None],
        [None, (kd * k1) * d1, m1 / dt + (kd * k2) * d1],
    ], format='csr')

    rhs_u, rhs_xi, rhs_eta = step_rhs_blocks(
        ctx, params, coeffs, state_prev.eta, t_next, dt, theta, forcing, boundary)
    rhs = np.concatenate([rhs_u, rhs_xi, rhs_eta])
    bc_dofs, bc_vals = dirichlet_record(ctx, boundary, t_next)
    return SparseSystem(matrix=matrix, rhs=rhs, bc_dofs=bc_dofs, bc_vals=bc_vals)
