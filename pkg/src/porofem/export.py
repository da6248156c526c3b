"""Field export: legacy ASCII VTK unstructured grids and flat CSV tables.

Fields are written on the P1 vertex set; the P2 displacement is sampled at
the vertices (its vertex coefficients, since the basis is nodal).
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh


def vertex_fields(mesh: Mesh, state) -> dict:
    """Vertex-sampled field arrays of a state: u (V, 2), p, xi, eta (V,)."""
    nv = mesh.n_vertices
    u = np.column_stack([state.u[0:2 * nv:2], state.u[1:2 * nv:2]])
    return {'u': u, 'p': state.p.copy(), 'xi': state.xi.copy(),
            'eta': state.eta.copy()}


def write_vtk(path, mesh: Mesh, state=None, title: str = "porofem fields") -> None:
    """Legacy VTK unstructured grid (triangle cell type 5) with optional
    point data; with state=None only the mesh is written."""
    lines = ["# vtk DataFile Version 3.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} double"]
    for x, y in mesh.vertices:
        lines.append(f"{x:.12g} {y:.12g} 0.0")
    t = mesh.n_triangles
    lines.append(f"CELLS {t} {4 * t}")
    for a, b, c in mesh.triangles:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {t}")
    lines.extend(["5"] * t)
    if state is not None:
        fields = vertex_fields(mesh, state)
        lines.append(f"POINT_DATA {mesh.n_vertices}")
        lines.append("VECTORS u double")
        for ux, uy in fields['u']:
            lines.append(f"{ux:.12g} {uy:.12g} 0.0")
        for name in ('p', 'xi', 'eta'):
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.12g}" for v in fields[name])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_fields_csv(path, mesh: Mesh, state) -> None:
    """CSV of (x, y, u1, u2, p) on the vertex set."""
    fields = vertex_fields(mesh, state)
    with open(path, "w") as fh:
        fh.write("x,y,u1,u2,p\n")
        for k, (x, y) in enumerate(mesh.vertices):
            fh.write(f"{x:.12g},{y:.12g},{fields['u'][k, 0]:.12g},"
                     f"{fields['u'][k, 1]:.12g},{fields['p'][k]:.12g}\n")


def write_diagnostics_csv(path, diagnostics) -> None:
    """Per-step CSV rows (step, t, picard_iters, energy)."""
    with open(path, "w") as fh:
        fh.write("step,t,picard_iters,energy\n")
        for step, t, iters, energy in diagnostics:
            fh.write(f"{step},{t:.12g},{iters},{energy:.12g}\n")
