"""Independent brute-force reference assembly for oracle tests.

Everything here is written as plain Python loops over elements, quadrature
points and basis-function pairs, with dense numpy storage and its own shape
functions, strain bookkeeping, boundary integrals and Dirichlet elimination.
It shares with the production path only the contract-level inputs: mesh
topology, dof numbering, the constitutive coefficient functions, the
quadrature point/weight data and the boundary-data evaluators.
"""

import numpy as np

from porofem.basis import triangle_quadrature
from porofem.constitutive import dev_components


def p2_shape(pt):
    x, y = pt
    l0, l1, l2 = 1.0 - x - y, x, y
    vals = np.array([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
    ])
    grads = np.array([
        [1 - 4 * l0, 1 - 4 * l0],
        [4 * l1 - 1, 0.0],
        [0.0, 4 * l2 - 1],
        [4 * (l0 - l1), -4 * l1],
        [4 * l2, 4 * l1],
        [-4 * l2, 4 * (l0 - l2)],
    ])
    return vals, grads


def p1_shape(pt):
    x, y = pt
    vals = np.array([1.0 - x - y, x, y])
    grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    return vals, grads


def basis_strain(grad, comp):
    """Strain (e11, e22, e12) of the vector basis (scalar grad, component)."""
    gx, gy = grad
    if comp == 0:
        return gx, 0.0, 0.5 * gy
    return 0.0, gy, 0.5 * gx


def dense_step_system(mesh, dofmap, law, coeffs, params, u_frozen, state_prev,
                      t_next, dt, theta, forcing, boundary, quad_degree=5):
    """Dense (matrix, rhs) of one linearized step plus the Dirichlet record."""
    size = dofmap.size
    mat = np.zeros((size, size))
    rhs = np.zeros(size)
    rule = triangle_quadrature(quad_degree)
    kd = params.K / params.mu_f
    k1, k2, k3 = coeffs.kappa1, coeffs.kappa2, coeffs.kappa3
    xi_off, eta_off = dofmap.xi_offset, dofmap.eta_offset
    grav = np.asarray(params.rho_f_g, dtype=float)

    for el in range(mesh.n_triangles):
        tri = mesh.triangles[el]
        v0, v1, v2 = mesh.vertices[tri]
        jac = np.column_stack([v1 - v0, v2 - v0])
        det = np.linalg.det(jac)
        jinv_t = np.linalg.inv(jac).T
        p2g = dofmap.elem_p2[el]
        p1g = dofmap.elem_p1[el]
        for pt, w in zip(rule.points, rule.weights):
            wdet = w * det
            vals2, ref2 = p2_shape(pt)
            grads2 = np.array([jinv_t @ g for g in ref2])
            vals1, ref1 = p1_shape(pt)
            grads1 = np.array([jinv_t @ g for g in ref1])
            xq, yq = v0 + jac @ np.asarray(pt)

            # frozen strain of u_frozen at this point
            e11 = e22 = e12 = 0.0
            for i in range(6):
                ux = u_frozen[2 * p2g[i]]
                uy = u_frozen[2 * p2g[i] + 1]
                e11 += ux * grads2[i, 0]
                e22 += uy * grads2[i, 1]
                e12 += 0.5 * (ux * grads2[i, 1] + uy * grads2[i, 0])
            rho = float(dev_components(e11, e22, e12))
            mu_t = float(law.mu_tilde(rho))
            lam_s = float(law.lambda_shift(rho))

            f1, f2 = forcing.body_force(xq, yq, t_next)
            phi = forcing.source(xq, yq, t_next)
            eta_prev = 0.0
            for j in range(3):
                eta_prev += state_prev.eta[p1g[j]] * vals1[j]

            for i in range(6):
                for ci in (0, 1):
                    row = 2 * p2g[i] + ci
                    ei = basis_strain(grads2[i], ci)
                    div_i = ei[0] + ei[1]
                    rhs[row] += wdet * (f1 if ci == 0 else f2) * vals2[i]
                    for j in range(6):
                        for cj in (0, 1):
                            ej = basis_strain(grads2[j], cj)
                            div_j = ej[0] + ej[1]
                            ee = (ei[0] * ej[0] + ei[1] * ej[1]
                                  + 2.0 * ei[2] * ej[2])
                            mat[row, 2 * p2g[j] + cj] += wdet * (
                                mu_t * ee + lam_s * div_i * div_j)
                    for j in range(3):
                        mat[row, xi_off + p1g[j]] -= wdet * vals1[j] * div_i
                        mat[xi_off + p1g[j], row] += wdet * vals1[j] * div_i

            for i in range(3):
                ri_xi = xi_off + p1g[i]
                ri_eta = eta_off + p1g[i]
                rhs[ri_xi] += wdet * (1 - theta) * k1 * eta_prev * vals1[i]
                rhs[ri_eta] += wdet * (eta_prev * vals1[i] / dt + phi * vals1[i])
                if grav.any():
                    rhs[ri_eta] += wdet * kd * (grav @ grads1[i])
                for j in range(3):
                    mm = wdet * vals1[i] * vals1[j]
                    dd = wdet * (grads1[i] @ grads1[j])
                    mat[ri_xi, xi_off + p1g[j]] += k3 * mm
                    mat[ri_xi, eta_off + p1g[j]] -= theta * k1 * mm
                    mat[ri_eta, xi_off + p1g[j]] += kd * k1 * dd
                    mat[ri_eta, eta_off + p1g[j]] += mm / dt + kd * k2 * dd

    # boundary edges: 3-point Gauss in the edge parameter s in [0, 1]
    sq = np.array([0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)])
    wq = np.array([5.0, 8.0, 5.0]) / 18.0
    for k, eid in enumerate(mesh.boundary_edge_ids):
        a, b = mesh.edges[eid]
        mid = mesh.n_vertices + eid
        va, vb = mesh.vertices[a], mesh.vertices[b]
        length = float(np.hypot(*(vb - va)))
        tag = int(mesh.boundary_tags[k])
        normal = mesh.boundary_normals[k]
        pinned = boundary.dirichlet_u.get(tag, {})
        for s, w in zip(sq, wq):
            xq, yq = va + s * (vb - va)
            tr2 = np.array([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)])
            tr1 = np.array([1 - s, s])
            if boundary.traction is not None:
                t1, t2 = boundary.traction(xq, yq, t_next,
                                           (normal[0], normal[1]))
                for comp, tv in ((0, float(t1)), (1, float(t2))):
                    if comp in pinned:
                        continue
                    for node, shape in zip((a, b, mid), tr2):
                        rhs[2 * node + comp] += w * length * tv * shape
            if boundary.flow_strategy == 'neumann-flux':
                fv = float(boundary.flux_value(xq, yq, t_next,
                                               (normal[0], normal[1])))
                for node, shape in zip((a, b), tr1):
                    rhs[eta_off + node] += w * length * fv * shape

    bc = {}
    for tag, comps in boundary.dirichlet_u.items():
        for node in dofmap.boundary_p2_nodes[tag]:
            x, y = dofmap.p2_coords[node]
            for comp, fn in comps.items():
                bc[2 * node + comp] = float(fn(x, y, t_next))
    if boundary.flow_strategy == 'dirichlet-xi-eta':
        for node in dofmap.all_boundary_vertices:
            x, y = mesh.vertices[node]
            bc[xi_off + node] = float(boundary.xi_value(x, y, t_next))
            bc[eta_off + node] = float(boundary.eta_value(x, y, t_next))
    return mat, rhs, bc


def dense_eliminate(mat, rhs, bc):
    """In-place symmetric elimination on dense storage."""
    mat = mat.copy()
    rhs = rhs.copy()
    for dof, val in bc.items():
        rhs -= mat[:, dof] * val
        mat[:, dof] = 0.0
        mat[dof, :] = 0.0
        mat[dof, dof] = 1.0
        rhs[dof] = val
    # re-apply values clobbered by later eliminations of other dofs
    for dof, val in bc.items():
        rhs[dof] = val
    return mat, rhs
