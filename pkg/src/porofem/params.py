"""Physical parameters and the coefficients of the three-field change of variables.

The solver works in the variables (u, xi, eta) with

    xi  = alpha*p - (1/lambda)*div(u),      eta = c0*p + alpha*div(u),

inverted by p = kappa1*xi + kappa2*eta and div(u) = kappa1*eta - kappa3*xi.
The kappa coefficients stay bounded and nonzero as lambda grows, which is
what makes the split robust near incompressibility.
"""

from __future__ import annotations

from dataclasses import dataclass


class ParameterError(ValueError):
    """A physical parameter lies outside its admissible range."""


@dataclass(frozen=True)
class PhysicalParams:
    """Material and fluid constants (SI units). Defaults match the stiff,
    nearly incompressible configuration used by the verification cases."""

    E: float = 1.0e6            # Young's modulus [Pa]
    nu: float = 0.499           # Poisson ratio
    alpha: float = 1.0          # Biot-Willis coupling constant
    c0: float = 1.0e3           # constrained specific storage [1/Pa]
    K: float = 1.0e-5           # scalar permeability, K(x) = K*I [m^2]
    mu_f: float = 1.0           # fluid viscosity [Pa*s]
    rho_f_g: tuple = (0.0, 0.0)  # gravity body force rho_f*g [N/m^3]

    def __post_init__(self):
        if not self.E > 0:
            raise ParameterError(f"E must be positive, got {self.E}")
        if not (0.0 <= self.nu < 0.5):
            raise ParameterError(f"nu must lie in [0, 0.5), got {self.nu}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if self.c0 < 0:
            raise ParameterError(f"c0 must be nonnegative, got {self.c0}")
        if not self.K > 0:
            raise ParameterError(f"K must be positive, got {self.K}")
        if not self.mu_f > 0:
            raise ParameterError(f"mu_f must be positive, got {self.mu_f}")
        if len(self.rho_f_g) != 2:
            raise ParameterError("rho_f_g must be a 2-vector")


@dataclass(frozen=True)
class DerivedCoeffs:
    """Lame constants and the kappa coefficients, with alpha and c0 carried
    along so the (p, div u) <-> (xi, eta) maps need no second argument."""

    lam: float
    mu: float
    kappa1: float
    kappa2: float
    kappa3: float
    alpha: float
    c0: float

    @classmethod
    def from_params(cls, params: PhysicalParams) -> "DerivedCoeffs":
        lam, mu = derive_lame(params)
        k1, k2, k3 = derive_kappas(lam, params.alpha, params.c0)
        return cls(lam=lam, mu=mu, kappa1=k1, kappa2=k2, kappa3=k3,
                   alpha=params.alpha, c0=params.c0)


def derive_lame(params: PhysicalParams) -> tuple[float, float]:
    """Lame constants from (E, nu):

        lambda = E*nu / ((1+nu)(1-2nu)),    mu = E / (2(1+nu)).
    """
    if params.nu >= 0.5:
        raise ParameterError("nu >= 0.5 makes lambda singular")
    lam = params.E * params.nu / ((1.0 + params.nu) * (1.0 - 2.0 * params.nu))
    mu = params.E / (2.0 * (1.0 + params.nu))
    return lam, mu


def derive_kappas(lam: float, alpha: float, c0: float) -> tuple[float, float, float]:
    """kappa1 = lam*alpha/(lam*alpha^2 + c0), kappa2 = 1/(lam*alpha^2 + c0),
    kappa3 = lam*c0/(lam*alpha^2 + c0)."""
    if not lam > 0:
        raise ParameterError(f"lam must be positive, got {lam}")
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if c0 < 0:
        raise ParameterError(f"c0 must be nonnegative, got {c0}")
    denom = lam * alpha * alpha + c0
    return lam * alpha / denom, 1.0 / denom, lam * c0 / denom


def to_xi_eta(p, div_u, coeffs: DerivedCoeffs):
    """(p, div u) -> (xi, eta). Works on scalars and numpy arrays."""
    xi = coeffs.alpha * p - div_u / coeffs.lam
    eta = coeffs.c0 * p + coeffs.alpha * div_u
    return xi, eta


def from_xi_eta(xi, eta, coeffs: DerivedCoeffs):
    """(xi, eta) -> (p, q) with q = div u; exact inverse of to_xi_eta."""
    p = coeffs.kappa1 * xi + coeffs.kappa2 * eta
    q = coeffs.kappa1 * eta - coeffs.kappa3 * xi
    return p, q
