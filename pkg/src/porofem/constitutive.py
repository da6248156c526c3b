"""Stress laws with strain-dependent Lame moduli.

A law is fixed by a scalar potential Phi and a coefficient kappa. With the
deviatoric invariant rho = tr(eps^2) - tr(eps)^2/2 >= 0, the moduli are

    mu_tilde(rho) = 2*mu*Phi'(rho),   lambda_tilde(rho) = kappa(rho) - mu_tilde/2,

the stress is sigma(eps) = lambda_tilde*tr(eps)*I + mu_tilde*eps, and the
shifted tensor driving the displacement block is

    N(eps) = sigma(eps) - (1/lambda)*tr(eps)*I.

The three members form a closed family: each needs a mutually consistent
(Phi, Phi', kappa) triple, so arbitrary user laws are not accepted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import DerivedCoeffs

LAW_NAMES = ("linear", "test1", "test2")


@dataclass(frozen=True)
class SymMat2:
    """Symmetric 2x2 tensor stored as its three independent components."""

    e11: float
    e22: float
    e12: float

    def trace(self) -> float:
        return self.e11 + self.e22

    def inner(self, other: "SymMat2") -> float:
        """Full contraction a:b, counting the off-diagonal pair twice."""
        return self.e11 * other.e11 + self.e22 * other.e22 + 2.0 * self.e12 * other.e12

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def __sub__(self, other: "SymMat2") -> "SymMat2":
        return SymMat2(self.e11 - other.e11, self.e22 - other.e22, self.e12 - other.e12)


def dev_components(e11, e22, e12):
    """Deviatoric invariant from raw components; vectorizes over arrays."""
    return 0.5 * (e11 - e22) ** 2 + 2.0 * e12 ** 2


def dev_scalar(eps: SymMat2) -> float:
    """rho = tr(eps^2) - tr(eps)^2/2, a nonnegative scalar (not a tensor)."""
    return float(dev_components(eps.e11, eps.e22, eps.e12))


@dataclass(frozen=True)
class ConstitutiveLaw:
    """One member of the closed law family, bound to fixed (lambda, mu)."""

    name: str
    lam: float
    mu: float

    def phi(self, rho):
        if self.name == "linear":
            return np.asarray(rho, dtype=float) + 0.0
        if self.name == "test1":
            return np.sqrt(1.0 + np.asarray(rho, dtype=float))
        return np.asarray(rho, dtype=float) + 0.5 * np.exp(-np.asarray(rho, dtype=float))

    def phi_prime(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.name == "linear":
            return np.ones_like(rho)
        if self.name == "test1":
            return 0.5 / np.sqrt(1.0 + rho)
        return 1.0 - 0.5 * np.exp(-rho)

    def kappa(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.name == "linear":
            return np.full_like(rho, self.lam + self.mu)
        if self.name == "test1":
            return np.full_like(rho, 1.0 / self.lam + 0.5 * self.mu)
        return 1.0 / self.lam + 0.5 * self.mu * np.exp(-rho)

    def mu_tilde(self, rho):
        return 2.0 * self.mu * self.phi_prime(rho)

    def lambda_shift(self, rho):
        """lambda_tilde - 1/lambda, the volumetric coefficient of N.

        Evaluated from per-law closed forms rather than kappa - mu_tilde/2
        - 1/lambda, whose double cancellation (terms of size mu against a
        result of size 1/lambda) loses all significant digits at small rho.
        """
        rho = np.asarray(rho, dtype=float)
        if self.name == "linear":
            return np.full_like(rho, self.lam - 1.0 / self.lam)
        if self.name == "test1":
            return 0.5 * self.mu * (1.0 - 1.0 / np.sqrt(1.0 + rho))
        return self.mu * np.expm1(-rho)

    def lambda_tilde(self, rho):
        return self.lambda_shift(rho) + 1.0 / self.lam


def make_law(name: str, coeffs: DerivedCoeffs) -> ConstitutiveLaw:
    if name not in LAW_NAMES:
        raise ValueError(f"unknown law {name!r}; choose one of {LAW_NAMES}")
    return ConstitutiveLaw(name=name, lam=coeffs.lam, mu=coeffs.mu)


def lame_tilde(law: ConstitutiveLaw, rho):
    """(mu_tilde, lambda_tilde) at a given invariant value."""
    return law.mu_tilde(rho), law.lambda_tilde(rho)


def stress(law: ConstitutiveLaw, eps: SymMat2) -> SymMat2:
    rho = dev_scalar(eps)
    mu_t = float(law.mu_tilde(rho))
    lam_t = float(law.lambda_tilde(rho))
    tr = eps.trace()
    return SymMat2(lam_t * tr + mu_t * eps.e11,
                   lam_t * tr + mu_t * eps.e22,
                   mu_t * eps.e12)


def n_tensor(law: ConstitutiveLaw, eps: SymMat2) -> SymMat2:
    """N(eps) = sigma(eps) - (1/lambda)*tr(eps)*I."""
    sig = stress(law, eps)
    shift = eps.trace() / law.lam
    return SymMat2(sig.e11 - shift, sig.e22 - shift, sig.e12)


def stored_energy(law: ConstitutiveLaw, eps: SymMat2) -> float:
    """Psi(eps) = kappa(rho)/2 * tr(eps)^2 + mu * Phi(rho).

    For test2 the kappa factor depends on rho itself, so this Psi does not
    differentiate back to the test2 stress; the stress display is
    authoritative there and the gradient identity is only meaningful for
    the linear and test1 laws.
    """
    rho = dev_scalar(eps)
    tr = eps.trace()
    return float(0.5 * law.kappa(rho) * tr * tr + law.mu * law.phi(rho))


def frozen_coefficients(law: ConstitutiveLaw, eps: SymMat2) -> tuple[float, float]:
    """Picard coefficients (mu_tilde, lambda_tilde - 1/lambda) at a frozen strain."""
    rho = dev_scalar(eps)
    return float(law.mu_tilde(rho)), float(law.lambda_shift(rho))
