"""How the inner linearization policy changes the measured errors.

The volumetric law freezes its coefficients at an iterate and each time step
repeats the linearized solve until the displacement increment drops below a
tolerance. This demo contrasts three policies on the trigonometric case at
h=1/4, dt=h^2:

1. converged loop (relative increment <= 1e-9), plain fixed-point updates;
2. converged loop with Anderson mixing (the solver default: same linear
   systems, far fewer of them);
3. a single frozen solve per step (coefficients lagged to the previous time
   level), built here from the low-level assembly API.

Policy 3 is first-order accurate in time on top of the spatial error: its
displacement errors at this dt are an order of magnitude larger than the
converged loop's, which is worth knowing when comparing against reference
error tables for schemes of this family: a single-sweep linearization can
dominate every displacement column at coarse dt while leaving the observed
convergence rates plausible.

Run:  python demos/04_linearization_study.py
"""

import time

import numpy as np
import scipy.sparse as sp

from porofem import (Problem, SolverConfig, error_norms, make_case,
                     sparse_solve, time_march)
from porofem.assembly import (apply_dirichlet, assemble_step_system)
from porofem.solver import initial_state, recover_pressure

case = make_case("test1")
n = 4
dt = 1.0 / (n * n)


def run_converged(accel):
    problem = Problem.from_case(case, n)
    config = SolverConfig(dt=dt, t_end=1.0, theta=1, picard_accel=accel,
                          picard_max=200)
    t0 = time.time()
    result = time_march(config, problem)
    iters = sum(row[2] for row in result.diagnostics)
    return result.state, problem, iters, time.time() - t0


def run_single_sweep():
    """One frozen-coefficient solve per step, lagged to the previous level."""
    problem = Problem.from_case(case, n)
    dm = problem.ctx.dofmap
    state = initial_state(dm, case.coeffs, problem.u0, problem.p0,
                          problem.div_u0)
    t0 = time.time()
    steps = round(1.0 / dt)
    for k in range(1, steps + 1):
        system = assemble_step_system(problem.ctx, case.params, case.coeffs,
                                      case.law, state.u, state, k * dt, dt, 1,
                                      case, problem.boundary)
        x = sparse_solve(apply_dirichlet(system))
        state.u = x[:dm.n_u]
        state.xi = x[dm.n_u:dm.n_u + dm.n_p1]
        state.eta = x[dm.n_u + dm.n_p1:]
        state.p = recover_pressure(state.xi, state.eta, case.coeffs)
        state.t = k * dt
    return state, problem, steps, time.time() - t0


print(f"case test1, n={n}, dt=1/{round(1/dt)}, T=1\n")
rows = []
for label, runner in (("plain converged loop", lambda: run_converged('none')),
                      ("Anderson-mixed loop", lambda: run_converged('anderson')),
                      ("single frozen sweep", run_single_sweep)):
    state, problem, solves, wall = runner()
    errs = error_norms(state, case, problem.ctx)
    rows.append((label, solves, wall, errs))
    print(f"{label:22s}: {solves:4d} solves, {wall:5.2f}s, "
          f"uL2={errs.u_l2:.3e} uH1={errs.u_h1:.3e} "
          f"pL2={errs.p_l2:.3e} pH1={errs.p_h1:.3e}")

base = rows[0][3]
single = rows[2][3]
print(f"\nsingle-sweep vs converged displacement error ratio: "
      f"L2 {single.u_l2 / base.u_l2:.1f}x, H1 {single.u_h1 / base.u_h1:.1f}x")
print("the pressure columns barely move: the time error enters them through "
      "the damped eta path")
