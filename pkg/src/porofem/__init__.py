"""porofem: three-field finite element solver for nonlinear poroelasticity.

The displacement/pressure system with strain-dependent Lame moduli is
rewritten in the variables (u, xi, eta), discretized with P2-P1-P1 Lagrange
triangles and backward Euler, and linearized by frozen-coefficient Picard
iteration. The manufactured verification cases drive convergence studies.
"""

from .analysis import (ConvergenceReport, ErrorNorms, convergence_study,
                       error_norms, spatial_order, temporal_order_T,
                       temporal_study)
from .assembly import (AssemblyContext, BoundaryData, SparseSystem,
                       apply_dirichlet, assemble_step_system)
from .basis import DofMap, QuadratureRule, build_dof_map, triangle_quadrature
from .constitutive import (ConstitutiveLaw, SymMat2, dev_scalar, lame_tilde,
                           make_law, n_tensor, stored_energy, stress)
from .manufactured import ManufacturedCase, exact_fields, make_case
from .mesh import Mesh, build_structured_mesh, classify_boundary
from .params import (DerivedCoeffs, ParameterError, PhysicalParams,
                     derive_kappas, derive_lame, from_xi_eta, to_xi_eta)
from .solver import (FieldState, LinearSolveFailed, MarchResult,
                     PicardDiverged, Problem, SolverConfig, discrete_energy,
                     initial_state, picard_step, recover_pressure,
                     sparse_solve, time_march, zero_problem)

__version__ = "0.1.0"

__all__ = [
    "AssemblyContext", "BoundaryData", "ConstitutiveLaw", "ConvergenceReport",
    "DerivedCoeffs", "DofMap", "ErrorNorms", "FieldState", "LinearSolveFailed",
    "ManufacturedCase", "MarchResult", "Mesh", "ParameterError",
    "PhysicalParams", "PicardDiverged", "Problem", "QuadratureRule",
    "SolverConfig", "SparseSystem", "SymMat2", "apply_dirichlet",
    "assemble_step_system", "build_dof_map", "build_structured_mesh",
    "classify_boundary", "convergence_study", "derive_kappas", "derive_lame",
    "dev_scalar", "discrete_energy", "error_norms", "exact_fields",
    "from_xi_eta", "initial_state", "lame_tilde", "make_case", "make_law",
    "n_tensor", "picard_step", "recover_pressure", "spatial_order",
    "sparse_solve", "stored_energy", "stress", "temporal_order_T",
    "temporal_study", "time_march", "to_xi_eta", "zero_problem",
]
