"""Error norms against exact fields, convergence orders and study tables.

H1 errors are reported as the full H1 norm (L2 part plus seminorm). The
reference tables this mirrors do not state their convention; the observed
H1 orders (about 2 for u, about 1 for p) are insensitive to the choice, but
absolute magnitudes may differ from reference values by a bounded factor.
"""

from __future__ import annotations

import math
import time
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .assembly import AssemblyContext
from .solver import MarchResult, Problem, SolverConfig, time_march

ERROR_QUAD_DEGREE = 7
ORDER_FLOOR = 1e-12     # errors at solver noise level leave orders undefined

ErrorNorms = namedtuple('ErrorNorms', ['u_l2', 'u_h1', 'p_l2', 'p_h1'])

COLUMNS = ('u_L2', 'u_H1', 'p_L2', 'p_H1')


def error_norms(state, case, ctx: AssemblyContext,
                quad_degree: int = ERROR_QUAD_DEGREE) -> ErrorNorms:
    """Element-wise quadrature of the four error norms at state.t."""
    ed = ctx.element_data(quad_degree)
    dm = ctx.dofmap
    t = state.t
    x, y = ed.qx, ed.qy

    u1h = np.einsum('qi,ti->tq', ed.p2_vals, state.u[dm.elem_u[:, 0::2]])
    u2h = np.einsum('qi,ti->tq', ed.p2_vals, state.u[dm.elem_u[:, 1::2]])
    g1h = np.einsum('tqia,ti->tqa', ed.grad_p2, state.u[dm.elem_u[:, 0::2]])
    g2h = np.einsum('tqia,ti->tqa', ed.grad_p2, state.u[dm.elem_u[:, 1::2]])
    ph = np.einsum('qi,ti->tq', ed.p1_vals, state.p[dm.elem_p1])
    gph = np.einsum('tqia,ti->tqa', ed.grad_p1, state.p[dm.elem_p1])

    u1e, u2e = case.displacement(x, y, t)
    d1x, d1y, d2x, d2y = case.grad_u(x, y, t)
    pe = case.pressure(x, y, t)
    pex, pey = case.grad_p(x, y, t)

    du_sq = (u1h - u1e) ** 2 + (u2h - u2e) ** 2
    dgu_sq = ((g1h[..., 0] - d1x) ** 2 + (g1h[..., 1] - d1y) ** 2
              + (g2h[..., 0] - d2x) ** 2 + (g2h[..., 1] - d2y) ** 2)
    dp_sq = (ph - pe) ** 2
    dgp_sq = (gph[..., 0] - pex) ** 2 + (gph[..., 1] - pey) ** 2

    u_l2 = float(np.sqrt(np.sum(ed.wdet * du_sq)))
    u_semi = float(np.sum(ed.wdet * dgu_sq))
    p_l2 = float(np.sqrt(np.sum(ed.wdet * dp_sq)))
    p_semi = float(np.sum(ed.wdet * dgp_sq))
    return ErrorNorms(u_l2=u_l2,
                      u_h1=float(np.sqrt(u_l2 ** 2 + u_semi)),
                      p_l2=p_l2,
                      p_h1=float(np.sqrt(p_l2 ** 2 + p_semi)))


def spatial_order(err_coarse: float, err_fine: float) -> float:
    """order = log(R(h)/R(h/2)) / log 2."""
    if err_coarse <= 0 or err_fine <= 0:
        raise ValueError("spatial_order needs positive errors")
    return math.log(err_coarse / err_fine) / math.log(2.0)


def temporal_order_T(err_dt: float, err_dt2: float, err_dt4: float) -> float:
    """order_T = |R(dt) - R(dt/2)| / |R(dt/2) - R(dt/4)|; about 2 signals
    first order in time. Returns nan when the denominator vanishes."""
    denom = abs(err_dt2 - err_dt4)
    if denom == 0.0:
        return math.nan
    return abs(err_dt - err_dt2) / denom


def _fmt_err(v: float) -> str:
    return f"{v:.6e}"


def _fmt_ord(v: float) -> str:
    return "--" if not np.isfinite(v) else f"{v:.4f}"


@dataclass
class ConvergenceReport:
    """Per-refinement errors and orders, mirroring the reference tables."""

    kind: str                    # 'spatial' | 'temporal'
    case_name: str
    theta: int
    resolution: list             # h values (spatial) or dt values (temporal)
    errors: np.ndarray           # (nlev, 4) columns u_L2, u_H1, p_L2, p_H1
    metadata: dict = field(default_factory=dict)

    def orders(self) -> np.ndarray:
        """Orders per column; nan where undefined (first row, noise-floor
        errors, or missing neighbors for the temporal ratio)."""
        n = len(self.resolution)
        out = np.full((n, 4), np.nan)
        for j in range(4):
            col = self.errors[:, j]
            if self.kind == 'spatial':
                for i in range(1, n):
                    if col[i - 1] > ORDER_FLOOR and col[i] > ORDER_FLOOR:
                        out[i, j] = spatial_order(col[i - 1], col[i])
            else:
                for i in range(1, n - 1):
                    out[i, j] = temporal_order_T(col[i - 1], col[i], col[i + 1])
        return out

    def _res_label(self) -> str:
        return 'h' if self.kind == 'spatial' else 'dt'

    def to_csv(self) -> str:
        orders = self.orders()
        header = [self._res_label()]
        for c in COLUMNS:
            header += [f"err_{c}", f"ord_{c}"]
        lines = [",".join(header)]
        for i, res in enumerate(self.resolution):
            row = [f"{res:.10g}"]
            for j in range(4):
                row.append(_fmt_err(self.errors[i, j]))
                row.append("" if not np.isfinite(orders[i, j]) else f"{orders[i, j]:.4f}")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        orders = self.orders()
        head = [self._res_label()]
        for c in COLUMNS:
            head += [f"err {c}", "order"]
        lines = ["| " + " | ".join(head) + " |",
                 "|" + "---|" * len(head)]
        for i, res in enumerate(self.resolution):
            cells = [f"1/{round(1.0 / res)}" if res < 1 else f"{res:g}"]
            for j in range(4):
                err = self.errors[i, j]
                cells.append("failed" if not np.isfinite(err) else _fmt_err(err))
                cells.append(_fmt_ord(orders[i, j]))
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def _resolve_case(case):
    from .manufactured import make_case
    return make_case(case) if isinstance(case, str) else case


def _march_and_measure(case, n: int, dt: float, theta: int, strategy: str,
                       t_end: float, picard_tol: float, quad_degree: int,
                       solver_opts: dict | None = None) -> ErrorNorms:
    problem = Problem.from_case(case, n, strategy=strategy)
    config = SolverConfig(dt=dt, t_end=t_end, theta=theta,
                          picard_tol=picard_tol, **(solver_opts or {}))
    result: MarchResult = time_march(config, problem)
    return error_norms(result.state, case, problem.ctx, quad_degree=quad_degree)


def convergence_study(case, levels, theta: int = 1, dt_rule: str = 'h2',
                      fixed_dt: float | None = None, t_end: float = 1.0,
                      strategy: str = 'dirichlet-xi-eta',
                      picard_tol: float = 1e-9,
                      quad_degree: int = ERROR_QUAD_DEGREE,
                      on_error: str = 'raise',
                      solver_opts: dict | None = None) -> ConvergenceReport:
    """Spatial study: march each mesh level to t_end and tabulate terminal
    errors; dt = h^2 under the default rule, or a fixed dt. With
    on_error='mark', a failed level records nan errors and the study goes on."""
    if len(levels) < 1:
        raise ValueError("need at least one level")
    if dt_rule not in ('h2', 'fixed'):
        raise ValueError(f"unknown dt rule {dt_rule!r}")
    if dt_rule == 'fixed' and fixed_dt is None:
        raise ValueError("fixed dt rule needs fixed_dt")
    case = _resolve_case(case)
    errors, hs, failures = [], [], []
    for n in levels:
        h = 1.0 / n
        dt = h * h if dt_rule == 'h2' else fixed_dt
        try:
            errors.append(_march_and_measure(case, n, dt, theta, strategy,
                                             t_end, picard_tol, quad_degree,
                                             solver_opts))
        except Exception as exc:
            if on_error == 'raise':
                raise RuntimeError(f"level n={n} failed: {exc}") from exc
            failures.append((n, str(exc)))
            errors.append(ErrorNorms(math.nan, math.nan, math.nan, math.nan))
        hs.append(h)
    return ConvergenceReport(kind='spatial', case_name=case.name, theta=theta,
                             resolution=hs, errors=np.array(errors),
                             metadata={'dt_rule': dt_rule, 't_end': t_end,
                                       'strategy': strategy, 'failures': failures,
                                       'created': time.strftime('%Y-%m-%d %H:%M:%S')})


def temporal_study(case, n: int, dt_values, theta: int = 1, t_end: float = 1.0,
                   strategy: str = 'dirichlet-xi-eta', picard_tol: float = 1e-9,
                   quad_degree: int = ERROR_QUAD_DEGREE,
                   on_error: str = 'raise',
                   solver_opts: dict | None = None) -> ConvergenceReport:
    """Temporal study: fixed mesh, errors at t_end for each dt."""
    case = _resolve_case(case)
    errors, failures = [], []
    for dt in dt_values:
        try:
            errors.append(_march_and_measure(case, n, dt, theta, strategy,
                                             t_end, picard_tol, quad_degree,
                                             solver_opts))
        except Exception as exc:
            if on_error == 'raise':
                raise RuntimeError(f"dt={dt} failed: {exc}") from exc
            failures.append((dt, str(exc)))
            errors.append(ErrorNorms(math.nan, math.nan, math.nan, math.nan))
    return ConvergenceReport(kind='temporal', case_name=case.name, theta=theta,
                             resolution=list(dt_values), errors=np.array(errors),
                             metadata={'n': n, 't_end': t_end, 'strategy': strategy,
                                       'failures': failures,
                                       'created': time.strftime('%Y-%m-%d %H:%M:%S')})
