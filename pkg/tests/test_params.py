import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from porofem import (DerivedCoeffs, ParameterError, PhysicalParams,
                     derive_kappas, derive_lame, from_xi_eta, to_xi_eta)


def coeffs_for(lam, alpha, c0):
    k1, k2, k3 = derive_kappas(lam, alpha, c0)
    return DerivedCoeffs(lam=lam, mu=1.0, kappa1=k1, kappa2=k2, kappa3=k3,
                         alpha=alpha, c0=c0)


class TestDeriveLame:
    def test_zero_poisson(self):
        lam, mu = derive_lame(PhysicalParams(E=1e6, nu=0.0))
        assert lam == 0.0
        assert mu == pytest.approx(5e5)

    def test_stiff_configuration(self):
        lam, mu = derive_lame(PhysicalParams(E=1e6, nu=0.499))
        assert lam == pytest.approx(1.664443e8, rel=1e-6)
        assert mu == pytest.approx(3.335557e5, rel=1e-6)

    def test_quarter_poisson_gives_equal_constants(self):
        lam, mu = derive_lame(PhysicalParams(E=1e6, nu=0.25))
        assert lam == pytest.approx(4e5)
        assert mu == pytest.approx(4e5)

    def test_incompressible_limit_rejected(self):
        with pytest.raises(ParameterError):
            PhysicalParams(nu=0.5)
        with pytest.raises(ParameterError):
            PhysicalParams(nu=0.6)


class TestParamValidation:
    @pytest.mark.parametrize("bad", [
        dict(E=0.0), dict(E=-1.0), dict(alpha=0.0), dict(c0=-1.0),
        dict(K=0.0), dict(mu_f=0.0), dict(nu=-0.1),
    ])
    def test_rejects(self, bad):
        with pytest.raises(ParameterError):
            PhysicalParams(**bad)


class TestDeriveKappas:
    def test_zero_storage(self):
        k1, k2, k3 = derive_kappas(7.5, 1.0, 0.0)
        assert k3 == 0.0
        assert k1 == pytest.approx(1.0)
        assert k2 == pytest.approx(1.0 / 7.5)

    def test_case1_parameters(self):
        lam, _ = derive_lame(PhysicalParams(E=1e6, nu=0.499))
        k1, k2, k3 = derive_kappas(lam, 1.0, 1e3)
        assert k1 == pytest.approx(0.99999399, rel=1e-4)
        assert k2 == pytest.approx(6.00804e-9, rel=1e-4)
        assert k3 == pytest.approx(999.99399, rel=1e-4)

    def test_case2_parameters(self):
        lam, _ = derive_lame(PhysicalParams(E=1e6, nu=0.499))
        k1, k2, k3 = derive_kappas(lam, 1.0, 2.0)
        assert k1 == pytest.approx(0.999999988, rel=1e-6)
        assert k2 == pytest.approx(6.0080e-9, rel=1e-4)
        assert k3 == pytest.approx(1.999999976, rel=1e-6)

    def test_rejects_nonpositive_lambda(self):
        with pytest.raises(ParameterError):
            derive_kappas(0.0, 1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(lam=st.floats(1e2, 1e9), alpha=st.floats(0.1, 10.0),
       c0=st.floats(0.0, 1e4))
def test_kappa_identities(lam, alpha, c0):
    k1, k2, k3 = derive_kappas(lam, alpha, c0)
    assert alpha * k1 + c0 * k2 == pytest.approx(1.0, rel=1e-13)
    assert k1 == pytest.approx(lam * alpha * k2, rel=1e-13)
    assert k3 == pytest.approx(c0 * k1 / alpha, rel=1e-13)


def test_locking_limit_keeps_kappas_bounded():
    # kappa1 -> 1/alpha and kappa3 = c0*kappa1/alpha -> c0/alpha^2: both stay
    # bounded and nonzero as lambda grows without bound
    for alpha, c0 in ((1.0, 1e3), (0.7, 2.0)):
        k1, k2, k3 = derive_kappas(1e15, alpha, c0)
        assert k1 == pytest.approx(1.0 / alpha, rel=1e-10)
        assert k3 == pytest.approx(c0 / alpha ** 2, rel=1e-10)
        assert k1 > 0 and k3 > 0


class TestChangeOfVariables:
    def test_zero_maps_to_zero(self):
        coeffs = coeffs_for(1e6, 1.0, 10.0)
        assert to_xi_eta(0.0, 0.0, coeffs) == (0.0, 0.0)

    def test_roundtrip(self):
        coeffs = coeffs_for(3.7e5, 1.3, 42.0)
        xi, eta = to_xi_eta(2.0, 3.0, coeffs)
        p, q = from_xi_eta(xi, eta, coeffs)
        assert p == pytest.approx(2.0, rel=1e-12)
        assert q == pytest.approx(3.0, rel=1e-12)

    def test_case2_exact_point(self):
        # p = 2, div u = 4 at (x, y, t) = (1, 1, 1) for the polynomial case
        params = PhysicalParams(c0=2.0)
        coeffs = DerivedCoeffs.from_params(params)
        xi, eta = to_xi_eta(2.0, 4.0, coeffs)
        assert xi == pytest.approx(2.0 * coeffs.alpha - 4.0 / coeffs.lam, rel=1e-14)
        assert eta == pytest.approx(2.0 * coeffs.c0 + 4.0 * coeffs.alpha, rel=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(lam=st.floats(1e2, 1e9), alpha=st.floats(0.1, 10.0),
           c0=st.floats(0.0, 1e4), xi=st.floats(-10, 10), eta=st.floats(-10, 10))
    def test_inverse_both_ways(self, lam, alpha, c0, xi, eta):
        coeffs = coeffs_for(lam, alpha, c0)
        p, q = from_xi_eta(xi, eta, coeffs)
        xi2, eta2 = to_xi_eta(p, q, coeffs)
        # cancellation in c0*p + alpha*q sets the attainable precision
        scale = max(1.0, abs(c0 * p), abs(alpha * q), abs(eta))
        assert xi2 == pytest.approx(xi, rel=1e-12, abs=1e-12 * max(1.0, abs(alpha * p)))
        assert eta2 == pytest.approx(eta, rel=1e-12, abs=1e-12 * scale)

    def test_vectorized(self):
        coeffs = coeffs_for(1e4, 1.0, 5.0)
        p = np.linspace(-1, 1, 7)
        q = np.linspace(2, 3, 7)
        xi, eta = to_xi_eta(p, q, coeffs)
        p2, q2 = from_xi_eta(xi, eta, coeffs)
        np.testing.assert_allclose(p2, p, rtol=1e-13)
        np.testing.assert_allclose(q2, q, rtol=1e-13)
