"""Closed-form verification cases: exact fields, forcing, and boundary data.

Each case bundles an exact (u, p) pair on the unit square with the matching
stress law, the body force f and fluid source phi that make the pair solve
the coupled system, and evaluators for every derived quantity the solver or
the error norms need. All evaluators are vectorized over x and y (scalar t).

The hand-coded forcing formulas satisfy f = -div(sigma(u)) + alpha*grad(p)
and phi = (c0 p + alpha div u)_t + div v_f exactly for the stated fields;
the finite-difference residual tests guard every transcription.
"""

from __future__ import annotations

import numpy as np

from .constitutive import ConstitutiveLaw, dev_components, make_law
from .params import DerivedCoeffs, PhysicalParams, to_xi_eta

CASE_NAMES = ("test1", "test2")


class ManufacturedCase:
    """Shared machinery; subclasses provide the primitive exact fields."""

    name: str = ""
    law_name: str = ""

    def __init__(self, params: PhysicalParams):
        self.params = params
        self.coeffs = DerivedCoeffs.from_params(params)
        self.law: ConstitutiveLaw = make_law(self.law_name, self.coeffs)

    # primitive evaluators, provided by each case
    def displacement(self, x, y, t):
        raise NotImplementedError

    def grad_u(self, x, y, t):
        """(du1/dx, du1/dy, du2/dx, du2/dy)."""
        raise NotImplementedError

    def pressure(self, x, y, t):
        raise NotImplementedError

    def grad_p(self, x, y, t):
        raise NotImplementedError

    def body_force(self, x, y, t):
        raise NotImplementedError

    def source(self, x, y, t):
        raise NotImplementedError

    # derived quantities
    def strain(self, x, y, t):
        d1x, d1y, d2x, d2y = self.grad_u(x, y, t)
        return d1x, d2y, 0.5 * (d1y + d2x)

    def div_u(self, x, y, t):
        d1x, _, _, d2y = self.grad_u(x, y, t)
        return d1x + d2y

    def dev(self, x, y, t):
        e11, e22, e12 = self.strain(x, y, t)
        return dev_components(e11, e22, e12)

    def xi(self, x, y, t):
        return to_xi_eta(self.pressure(x, y, t), self.div_u(x, y, t), self.coeffs)[0]

    def eta(self, x, y, t):
        return to_xi_eta(self.pressure(x, y, t), self.div_u(x, y, t), self.coeffs)[1]

    def traction(self, x, y, t, normal):
        """f1 = sigma(u)*n - alpha*p*n, from the exact strain via the law."""
        e11, e22, e12 = self.strain(x, y, t)
        rho = dev_components(e11, e22, e12)
        mu_t = self.law.mu_tilde(rho)
        lam_t = self.law.lambda_tilde(rho)
        tr = e11 + e22
        s11 = lam_t * tr + mu_t * e11
        s22 = lam_t * tr + mu_t * e22
        s12 = mu_t * e12
        ap = self.params.alpha * self.pressure(x, y, t)
        nx, ny = normal
        return ((s11 - ap) * nx + s12 * ny,
                s12 * nx + (s22 - ap) * ny)

    def flux(self, x, y, t, normal):
        """phi1 = -(K/mu_f)*(grad p - rho_f*g) . n."""
        px, py = self.grad_p(x, y, t)
        gx, gy = self.params.rho_f_g
        nx, ny = normal
        return -(self.params.K / self.params.mu_f) * ((px - gx) * nx + (py - gy) * ny)


class _Test1(ManufacturedCase):
    """u = t^2 (sin(pi x) sin(pi y), sin(pi x) sin(pi y)),
    p = -(t/pi) sin(pi(x+y)); square-root law, c0 = 1e3."""

    name = "test1"
    law_name = "test1"

    def displacement(self, x, y, t):
        s = t * t * np.sin(np.pi * x) * np.sin(np.pi * y)
        return s, s + 0.0 * np.asarray(x)

    def grad_u(self, x, y, t):
        cx, sx = np.cos(np.pi * x), np.sin(np.pi * x)
        cy, sy = np.cos(np.pi * y), np.sin(np.pi * y)
        dx = np.pi * t * t * cx * sy
        dy = np.pi * t * t * sx * cy
        return dx, dy, dx, dy

    def pressure(self, x, y, t):
        return -(t / np.pi) * np.sin(np.pi * (x + y))

    def grad_p(self, x, y, t):
        g = -t * np.cos(np.pi * (x + y))
        return g, g + 0.0 * np.asarray(x)

    def dev_closed_form(self, x, y, t):
        sx, cx = np.sin(np.pi * x), np.cos(np.pi * x)
        sy, cy = np.sin(np.pi * y), np.cos(np.pi * y)
        return np.pi ** 2 * t ** 4 * (sx * sx * cy * cy + cx * cx * sy * sy)

    def body_force(self, x, y, t):
        lam, mu = self.coeffs.lam, self.coeffs.mu
        alpha = self.params.alpha
        pi = np.pi
        sx, cx = np.sin(pi * x), np.cos(pi * x)
        sy, cy = np.sin(pi * y), np.cos(pi * y)
        rho = self.dev_closed_form(x, y, t)
        g12 = (1.0 + rho) ** (-0.5)
        g32 = (1.0 + rho) ** (-1.5)
        quart = 0.25 * mu * pi ** 4 * t ** 6 * g32
        shared = (mu * pi ** 2 * t ** 2 * g12 * sx * sy
                  - (1.0 / lam + 0.5 * mu) * pi ** 2 * t ** 2 * np.cos(pi * (x + y))
                  - alpha * t * np.cos(pi * (x + y)))
        f1 = (quart * np.sin(2 * pi * x) * np.sin(pi * (y - x)) * np.cos(2 * pi * y)
              + quart * np.sin(2 * pi * y) * np.sin(pi * (x + y)) * np.cos(2 * pi * x)
              + shared)
        f2 = (quart * np.sin(2 * pi * x) * np.sin(pi * (x + y)) * np.cos(2 * pi * y)
              + quart * np.sin(2 * pi * y) * np.sin(pi * (x - y)) * np.cos(2 * pi * x)
              + shared)
        return f1, f2

    def source(self, x, y, t):
        p = self.params
        return ((-p.c0 / np.pi + 2.0 * p.alpha * np.pi * t
                 - 2.0 * np.pi * t * p.K / p.mu_f) * np.sin(np.pi * (x + y)))


class _Test2(ManufacturedCase):
    """u = t (x^2, y^2), p = t (x^2 + y^2); exponential law, c0 = 2."""

    name = "test2"
    law_name = "test2"

    def displacement(self, x, y, t):
        return t * np.asarray(x) ** 2, t * np.asarray(y) ** 2

    def grad_u(self, x, y, t):
        zero = 0.0 * np.asarray(x)
        return 2.0 * t * np.asarray(x), zero, zero + 0.0, 2.0 * t * np.asarray(y)

    def pressure(self, x, y, t):
        return t * (np.asarray(x) ** 2 + np.asarray(y) ** 2)

    def grad_p(self, x, y, t):
        return 2.0 * t * np.asarray(x), 2.0 * t * np.asarray(y)

    def dev_closed_form(self, x, y, t):
        return 2.0 * t * t * (np.asarray(x) - np.asarray(y)) ** 2

    def body_force(self, x, y, t):
        lam, mu = self.coeffs.lam, self.coeffs.mu
        alpha = self.params.alpha
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        damp = np.exp(-2.0 * t * t * (x - y) ** 2)
        f1 = -(8.0 * mu * t ** 3 * (y * y - x * y) * damp
               + 2.0 * t / lam + 2.0 * mu * t) + 2.0 * t * alpha * x
        f2 = -(8.0 * mu * t ** 3 * (x * x - x * y) * damp
               + 2.0 * t / lam + 2.0 * mu * t) + 2.0 * t * alpha * y
        return f1, f2

    def source(self, x, y, t):
        p = self.params
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (p.c0 * (x * x + y * y) + 2.0 * p.alpha * (x + y)
                - 4.0 * t * p.K / p.mu_f)


_CASE_PARAMS = {
    "test1": PhysicalParams(c0=1.0e3),
    "test2": PhysicalParams(c0=2.0),
}

_CASE_CLASSES = {"test1": _Test1, "test2": _Test2}


def make_case(name: str, params: PhysicalParams | None = None) -> ManufacturedCase:
    """Build a verification case; params defaults to the case's pinned table."""
    if name not in CASE_NAMES:
        raise ValueError(f"unknown case {name!r}; choose one of {CASE_NAMES}")
    return _CASE_CLASSES[name](params or _CASE_PARAMS[name])


def exact_fields(case: ManufacturedCase, x, y, t):
    """(u, p, div_u, strain, xi, eta) of the exact solution at (x, y, t)."""
    u = case.displacement(x, y, t)
    p = case.pressure(x, y, t)
    q = case.div_u(x, y, t)
    strain = case.strain(x, y, t)
    xi, eta = to_xi_eta(p, q, case.coeffs)
    return u, p, q, strain, xi, eta
