"""Backward-Euler time marching with Picard linearization of the stress law.

Each step solves the three-field system with the volumetric coefficients
frozen at the previous iterate, repeating until the relative H1-seminorm
increment of the displacement drops below the Picard tolerance, then recovers
the pressure p = kappa1*xi + kappa2*eta^(n+theta). With theta=1 the step is
one coupled solve; with theta=0 the (u, xi) pair decouples from eta, the step
runs two smaller solves, and the time step must obey dt <= c_stab * h^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (AssemblyContext, BoundaryData, SparseSystem,
                       assemble_stiffness_u, assemble_traction,
                       dirichlet_record, eliminate_dirichlet, step_rhs_blocks)
from .basis import DofMap
from .constitutive import ConstitutiveLaw, make_law
from .manufactured import ManufacturedCase, make_case
from .mesh import build_structured_mesh
from .params import DerivedCoeffs, PhysicalParams

RCOND_FLOOR = 1e-15


class PicardDiverged(RuntimeError):
    """The Picard loop hit its iteration cap or kept growing."""


class LinearSolveFailed(RuntimeError):
    """The sparse solve failed or the matrix is numerically singular."""


@dataclass
class FieldState:
    """Coefficient vectors of one time level."""

    t: float
    u: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    p: np.ndarray

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.u.copy(), self.xi.copy(),
                          self.eta.copy(), self.p.copy())


@dataclass
class SolverConfig:
    dt: float
    t_end: float = 1.0
    theta: int = 1
    picard_tol: float = 1e-9
    picard_max: int = 50
    picard_accel: str = 'anderson'   # 'anderson' | 'none'
    anderson_depth: int = 3
    c_stab: float = 1.0
    enforce_dt_proviso: bool = True
    linear_solver: str = 'splu'
    solver_rtol: float = 1e-12

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.theta not in (0, 1):
            raise ValueError(f"theta must be 0 or 1, got {self.theta}")
        if self.linear_solver != 'splu':
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")
        if self.picard_accel not in ('anderson', 'none'):
            raise ValueError(f"unknown picard_accel {self.picard_accel!r}")


@dataclass
class Problem:
    """A discrete problem: mesh context, law, data and initial evaluators."""

    ctx: AssemblyContext
    params: PhysicalParams
    coeffs: DerivedCoeffs
    law: ConstitutiveLaw
    forcing: object                     # provides body_force(x,y,t), source(x,y,t)
    boundary: BoundaryData
    u0: Optional[Callable] = None       # (x, y) -> (u1, u2) at t=0
    p0: Optional[Callable] = None       # (x, y) -> p at t=0
    div_u0: Optional[Callable] = None   # (x, y) -> div u at t=0
    _eta_solver_cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_case(cls, case: ManufacturedCase | str, n: int,
                  strategy: str = 'dirichlet-xi-eta',
                  params: PhysicalParams | None = None) -> "Problem":
        if isinstance(case, str):
            case = make_case(case, params)
        ctx = AssemblyContext(build_structured_mesh(n))
        return cls(ctx=ctx, params=case.params, coeffs=case.coeffs, law=case.law,
                   forcing=case, boundary=BoundaryData.from_case(case, strategy),
                   u0=lambda x, y: case.displacement(x, y, 0.0),
                   p0=lambda x, y: case.pressure(x, y, 0.0),
                   div_u0=lambda x, y: case.div_u(x, y, 0.0))


class _ZeroForcing:
    def body_force(self, x, y, t):
        z = 0.0 * np.asarray(x)
        return z, z

    def source(self, x, y, t):
        return 0.0 * np.asarray(x)


def zero_problem(n: int, params: PhysicalParams | None = None,
                 law_name: str = 'test1',
                 strategy: str = 'dirichlet-xi-eta') -> Problem:
    """Homogeneous problem (zero data everywhere) for stability checks."""
    params = params or PhysicalParams()
    coeffs = DerivedCoeffs.from_params(params)
    ctx = AssemblyContext(build_structured_mesh(n))
    return Problem(ctx=ctx, params=params, coeffs=coeffs,
                   law=make_law(law_name, coeffs), forcing=_ZeroForcing(),
                   boundary=BoundaryData.zero(strategy))


def sparse_solve(system: SparseSystem | sp.spmatrix, rhs: np.ndarray | None = None,
                 rtol: float = 1e-12) -> np.ndarray:
    """Direct sparse solve with a residual check and one refinement pass.

    Raises LinearSolveFailed for factorization errors, a reciprocal-condition
    proxy below RCOND_FLOOR (ratio of extreme |U| pivots), or a residual that
    refinement cannot push under rtol.
    """
    if isinstance(system, SparseSystem):
        matrix, rhs = system.matrix, system.rhs
    else:
        matrix = system
    matrix = sp.csc_matrix(matrix)
    try:
        lu = spla.splu(matrix)
    except RuntimeError as exc:
        raise LinearSolveFailed(f"factorization failed: {exc}") from exc
    udiag = np.abs(lu.U.diagonal())
    if udiag.min() == 0.0 or udiag.min() / udiag.max() < RCOND_FLOOR:
        raise LinearSolveFailed(
            f"matrix numerically singular: pivot ratio "
            f"{udiag.min():.3e}/{udiag.max():.3e}")
    x = lu.solve(rhs)
    scale = max(np.linalg.norm(rhs), 1e-300)
    res = np.linalg.norm(rhs - matrix @ x) / scale
    if res > rtol:
        x += lu.solve(rhs - matrix @ x)
        res = np.linalg.norm(rhs - matrix @ x) / scale
        if res > rtol and res > 1e-9:
            raise LinearSolveFailed(f"relative residual {res:.3e} exceeds {rtol:.1e}")
    return x


def recover_pressure(xi: np.ndarray, eta_at_theta_level: np.ndarray,
                     coeffs: DerivedCoeffs) -> np.ndarray:
    """p = kappa1*xi + kappa2*eta^(n+theta), nodally."""
    if xi.shape != eta_at_theta_level.shape:
        raise ValueError("xi and eta vectors must have equal length")
    return coeffs.kappa1 * xi + coeffs.kappa2 * eta_at_theta_level


def initial_state(dofmap: DofMap, coeffs: DerivedCoeffs,
                  u0: Callable | None = None, p0: Callable | None = None,
                  div_u0: Callable | None = None, t0: float = 0.0) -> FieldState:
    """Nodal interpolation of the initial data, then the algebraic change of
    variables eta0 = c0*p0 + alpha*q0 and xi0 = alpha*p0 - q0/lambda."""
    xs, ys = dofmap.p2_coords[:, 0], dofmap.p2_coords[:, 1]
    u = np.zeros(dofmap.n_u)
    if u0 is not None:
        u1, u2 = u0(xs, ys)
        u[0::2] = np.broadcast_to(np.asarray(u1, dtype=float), xs.shape)
        u[1::2] = np.broadcast_to(np.asarray(u2, dtype=float), xs.shape)
    vx = dofmap.mesh.vertices[:, 0]
    vy = dofmap.mesh.vertices[:, 1]
    p = np.zeros(dofmap.n_p1)
    if p0 is not None:
        p = np.broadcast_to(np.asarray(p0(vx, vy), dtype=float), vx.shape).copy()
    q = np.zeros(dofmap.n_p1)
    if div_u0 is not None:
        q = np.broadcast_to(np.asarray(div_u0(vx, vy), dtype=float), vx.shape).copy()
    eta = coeffs.c0 * p + coeffs.alpha * q
    xi = coeffs.alpha * p - q / coeffs.lam
    return FieldState(t=t0, u=u, xi=xi, eta=eta, p=p)


def _picard_norm(ctx: AssemblyContext, vec: np.ndarray) -> float:
    ku = ctx.block('Ku')
    return float(np.sqrt(max(vec @ (ku @ vec), 0.0)))


def picard_step(state_prev: FieldState, t_next: float, config: SolverConfig,
                problem: Problem, u_guess: np.ndarray | None = None
                ) -> tuple[FieldState, int]:
    """Advance one time step; returns the new state and iterations used.

    The fixed point u -> solve-with-coefficients-frozen-at-u is iterated from
    u_guess (default: the previous state), optionally Anderson-accelerated.
    Convergence is the relative H1-seminorm of the unrelaxed u increment.
    """
    ctx, coeffs, params = problem.ctx, problem.coeffs, problem.params
    dm = ctx.dofmap
    dt = t_next - state_prev.t
    theta = config.theta
    boundary = problem.boundary

    rhs_u, rhs_xi, rhs_eta = step_rhs_blocks(
        ctx, params, coeffs, state_prev.eta, t_next, dt, theta,
        problem.forcing, boundary)
    bc_dofs, bc_vals = dirichlet_record(ctx, boundary, t_next)

    b = ctx.block('B')
    m1 = ctx.block('M1')
    d1 = ctx.block('D1')
    kd = params.K / params.mu_f
    k1, k2, k3 = coeffs.kappa1, coeffs.kappa2, coeffs.kappa3

    if theta == 1:
        rhs = np.concatenate([rhs_u, rhs_xi, rhs_eta])
        nsub = dm.size
    else:
        rhs = np.concatenate([rhs_u, rhs_xi])
        nsub = dm.n_u + dm.n_p1
    sub = bc_dofs < nsub
    bc_sub_dofs, bc_sub_vals = bc_dofs[sub], bc_vals[sub]

    def solve_frozen(u_at):
        a_uu = assemble_stiffness_u(ctx, problem.law, u_at)
        if theta == 1:
            matrix = sp.bmat([
                [a_uu, -b, None],
                [b.T, k3 * m1, -k1 * m1],
                [None, (kd * k1) * d1, m1 / dt + (kd * k2) * d1],
            ], format='csr')
        else:
            matrix = sp.bmat([[a_uu, -b], [b.T, k3 * m1]], format='csr')
        mat2, rhs2 = eliminate_dirichlet(matrix, rhs, bc_sub_dofs, bc_sub_vals)
        return sparse_solve(mat2, rhs2, rtol=config.solver_rtol)

    u_frozen = (state_prev.u if u_guess is None else u_guess).copy()
    res_hist: list[np.ndarray] = []
    pt_hist: list[np.ndarray] = []
    prev_inc = None
    grow = 0
    iters = 0
    converged = False
    x = None
    while iters < config.picard_max:
        iters += 1
        x = solve_frozen(u_frozen)
        u_new = x[:dm.n_u]
        resid = u_new - u_frozen

        inc = _picard_norm(ctx, resid)
        rel = inc / max(_picard_norm(ctx, u_new), 1e-14)
        if rel <= config.picard_tol:
            converged = True
            break
        if prev_inc is not None and inc > prev_inc:
            grow += 1
            if grow >= 5:
                raise PicardDiverged(
                    f"increment grew for 5 consecutive iterations "
                    f"(last {inc:.3e}) at t={t_next}")
        else:
            grow = 0
        prev_inc = inc
        u_frozen = _next_iterate(u_frozen, resid, res_hist, pt_hist, config)
    if not converged:
        raise PicardDiverged(
            f"no convergence in {config.picard_max} iterations at t={t_next}")

    u = x[:dm.n_u]
    xi = x[dm.n_u:dm.n_u + dm.n_p1]
    if theta == 1:
        eta = x[dm.n_u + dm.n_p1:]
        p = recover_pressure(xi, eta, coeffs)
    else:
        eta = _solve_eta_block(problem, config, dt, rhs_eta, xi, bc_dofs, bc_vals)
        p = recover_pressure(xi, state_prev.eta, coeffs)
    return FieldState(t=t_next, u=u, xi=xi, eta=eta, p=p), iters


def _next_iterate(u_frozen: np.ndarray, resid: np.ndarray,
                  res_hist: list, pt_hist: list, config: SolverConfig) -> np.ndarray:
    """Next linearization point: plain Picard update or Anderson mixing of
    the last few (point, residual) pairs."""
    if config.picard_accel == 'none':
        return u_frozen + resid
    res_hist.append(resid.copy())
    pt_hist.append(u_frozen.copy())
    depth = max(2, config.anderson_depth)
    if len(res_hist) > depth:
        del res_hist[0], pt_hist[0]
    if len(res_hist) < 2:
        return u_frozen + resid
    rm = np.array(res_hist)
    dr = rm[1:] - rm[:-1]
    dx = np.array(pt_hist)[1:] - np.array(pt_hist)[:-1]
    try:
        gamma, *_ = np.linalg.lstsq(dr.T, resid, rcond=None)
    except np.linalg.LinAlgError:
        return u_frozen + resid
    return u_frozen + resid - (dx + dr).T @ gamma


def _solve_eta_block(problem: Problem, config: SolverConfig, dt: float,
                     rhs_eta: np.ndarray, xi: np.ndarray,
                     bc_dofs: np.ndarray, bc_vals: np.ndarray) -> np.ndarray:
    """Decoupled eta solve of the theta=0 step; its matrix is constant over
    the march, so the factorization is cached per dt."""
    ctx, dm = problem.ctx, problem.ctx.dofmap
    params, coeffs = problem.params, problem.coeffs
    kd = params.K / params.mu_f
    sel = (bc_dofs >= dm.eta_offset)
    eta_bc = bc_dofs[sel] - dm.eta_offset
    eta_vals = bc_vals[sel]
    rhs = rhs_eta - (kd * coeffs.kappa1) * (ctx.block('D1') @ xi)

    key = (dt, eta_bc.tobytes())
    cached = problem._eta_solver_cache.get(key)
    if cached is None:
        matrix = ctx.block('M1') / dt + (kd * coeffs.kappa2) * ctx.block('D1')
        x_template = np.zeros(dm.n_p1)
        mat2, _ = eliminate_dirichlet(matrix, x_template, eta_bc, np.zeros_like(eta_vals))
        lu = spla.splu(sp.csc_matrix(mat2))
        # keep the raw matrix to move Dirichlet columns to the rhs per step
        problem._eta_solver_cache[key] = (lu, matrix)
        cached = problem._eta_solver_cache[key]
    lu, matrix = cached
    x_bc = np.zeros(dm.n_p1)
    x_bc[eta_bc] = eta_vals
    rhs2 = rhs - matrix @ x_bc
    free = np.ones(dm.n_p1)
    free[eta_bc] = 0.0
    rhs2 *= free
    rhs2[eta_bc] = eta_vals
    return lu.solve(rhs2)


@dataclass
class MarchResult:
    state: FieldState
    diagnostics: list            # rows of (step, t, picard_iters, energy)
    trajectory: Optional[list] = None


def time_march(config: SolverConfig, problem: Problem,
               store_trajectory: bool = False) -> MarchResult:
    """Run N = t_end/dt backward-Euler steps from the interpolated initial data."""
    ratio = config.t_end / config.dt
    n_steps = round(ratio)
    if n_steps < 1 or abs(ratio - n_steps) > 1e-12 * max(1.0, n_steps):
        raise ValueError(f"t_end/dt = {ratio} is not an integer step count")
    h = problem.ctx.mesh.h
    if config.theta == 0 and config.enforce_dt_proviso:
        if config.dt > config.c_stab * h * h + 1e-14:
            raise ValueError(
                f"theta=0 requires dt <= c_stab*h^2 = {config.c_stab * h * h:.3e}, "
                f"got dt = {config.dt:.3e}; set enforce_dt_proviso=False to override")

    state = initial_state(problem.ctx.dofmap, problem.coeffs,
                          problem.u0, problem.p0, problem.div_u0)
    trajectory = [state.copy()] if store_trajectory else None
    diagnostics = []
    u_hist = [state.u]
    for step in range(1, n_steps + 1):
        t_next = step * config.dt
        # extrapolate the last levels in time to seed the Picard loop
        if len(u_hist) >= 3:
            guess = 3.0 * u_hist[-1] - 3.0 * u_hist[-2] + u_hist[-3]
        elif len(u_hist) == 2:
            guess = 2.0 * u_hist[-1] - u_hist[-2]
        else:
            guess = None
        try:
            state, iters = picard_step(state, t_next, config, problem, u_guess=guess)
        except (PicardDiverged, LinearSolveFailed) as exc:
            raise type(exc)(f"step {step} (t={t_next:g}): {exc}") from exc
        u_hist.append(state.u)
        if len(u_hist) > 3:
            u_hist.pop(0)
        energy = discrete_energy(problem, state, t_next)
        diagnostics.append((step, t_next, iters, energy))
        if store_trajectory:
            trajectory.append(state.copy())
    return MarchResult(state=state, diagnostics=diagnostics, trajectory=trajectory)


def discrete_energy(problem: Problem, state: FieldState, t: float | None = None,
                    include_forcing: bool = True) -> float:
    """J_h = (N(eps u), eps u) + kappa3/2 |xi|^2 + kappa2/2 |eta|^2
    - (f, u) - <f1, u>; the quadratic part alone with include_forcing=False."""
    ctx, coeffs, law = problem.ctx, problem.coeffs, problem.law
    ed = ctx.element_data()
    e11, e22, e12 = ctx.strain_at_qp(state.u)
    rho = 0.5 * (e11 - e22) ** 2 + 2.0 * e12 ** 2
    ee = e11 ** 2 + e22 ** 2 + 2.0 * e12 ** 2
    tr2 = (e11 + e22) ** 2
    n_dot_e = float(np.sum(ed.wdet * (law.mu_tilde(rho) * ee
                                      + law.lambda_shift(rho) * tr2)))
    m1 = ctx.block('M1')
    energy = (n_dot_e + 0.5 * coeffs.kappa3 * float(state.xi @ (m1 @ state.xi))
              + 0.5 * coeffs.kappa2 * float(state.eta @ (m1 @ state.eta)))
    if not include_forcing:
        return energy
    if t is None:
        t = state.t
    dm = ctx.dofmap
    f1, f2 = problem.forcing.body_force(ed.qx, ed.qy, t)
    u1 = np.einsum('qi,ti->tq', ed.p2_vals, state.u[dm.elem_u[:, 0::2]])
    u2 = np.einsum('qi,ti->tq', ed.p2_vals, state.u[dm.elem_u[:, 1::2]])
    energy -= float(np.sum(ed.wdet * (f1 * u1 + f2 * u2)))
    if problem.boundary.traction is not None:
        trac = assemble_traction(ctx, problem.boundary.traction, t,
                                 problem.boundary.dirichlet_u)
        energy -= float(trac @ state.u)
    return energy
