"""Unit tests for the bump weight and entropy functionals."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from mckv.errors import DomainError
from mckv.solvers.entropy import EntropyKit, phi_bump, phi_derivatives, phi_inflection


class TestBump:
    """Tests for the bump function."""

    def test_values(self) -> None:
        """Test phi(0) = 1/e and compact support."""
        assert float(phi_bump(0.0)) == pytest.approx(math.exp(-1.0))
        np.testing.assert_array_equal(phi_bump(np.array([1.0, 1.5, 10.0])), 0.0)

    def test_derivatives_match_differences(self) -> None:
        """Test closed-form derivatives against central differences."""
        x = np.linspace(0.1, 0.9, 9)
        eps = 1e-6
        d = phi_derivatives(x)
        up, down = phi_derivatives(x + eps), phi_derivatives(x - eps)
        np.testing.assert_allclose(d.d1, (up.phi - down.phi) / (2 * eps), rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(d.d2, (up.d1 - down.d1) / (2 * eps), rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(d.d3, (up.d2 - down.d2) / (2 * eps), rtol=1e-5, atol=1e-7)

    def test_no_overflow_near_one(self) -> None:
        """Test finite values as x approaches one."""
        d = phi_derivatives(np.array([0.999, 0.99999, 1.0 - 1e-12]))
        for arr in d:
            assert np.all(np.isfinite(arr))

    def test_inflection(self) -> None:
        """Test the root of phi'' at 3^(-1/4)."""
        root = phi_inflection()
        assert root == pytest.approx(3.0**-0.25, abs=1e-10)
        assert float(phi_derivatives(root).d2) == pytest.approx(0.0, abs=1e-10)

    def test_negative_input(self) -> None:
        """Test that x < 0 is rejected."""
        with pytest.raises(DomainError):
            phi_bump(-0.1)


class TestEntropyKit:
    """Tests for the stationary profile and functionals."""

    def test_kappa_range(self) -> None:
        """Test that kappa must lie in (0, 1/8]."""
        with pytest.raises(DomainError):
            EntropyKit(0.0)
        with pytest.raises(DomainError):
            EntropyKit(0.2)

    @pytest.mark.parametrize("kappa", [0.125, 0.05])
    def test_profile_mass_and_slope(self, kappa: float) -> None:
        """Test unit mass and the slope at zero."""
        kit = EntropyKit(kappa)
        total, _ = quad(lambda x: float(kit.omega(x)), 0.0, math.inf)
        assert total == pytest.approx(1.0, rel=1e-8)
        eps = 1e-7
        assert float(kit.omega(eps)) / eps == pytest.approx(kit.omega_slope_at_zero, rel=1e-5)

    def test_profile_is_stationary(self) -> None:
        """Test omega''/2 + rate omega' + kappa omega = 0."""
        kit = EntropyKit(0.08)
        x = np.linspace(0.1, 10.0, 50)
        eps = 1e-4
        w = kit.omega(x)
        w1 = (kit.omega(x + eps) - kit.omega(x - eps)) / (2 * eps)
        w2 = (kit.omega(x + eps) - 2 * w + kit.omega(x - eps)) / eps**2
        residual = 0.5 * w2 + kit.rate * w1 + kit.kappa * w
        assert np.max(np.abs(residual)) < 1e-6

    def test_functionals_of_stationary_profile(self) -> None:
        """Test I equals the reference level and J vanishes for r = omega."""
        kit = EntropyKit()
        x = np.linspace(0.0, 3.0, 3001)
        I, J = kit.functionals(kit.omega(x), x, -kit.kappa)
        assert I == pytest.approx(kit.reference_level(x), rel=1e-10)
        assert J == pytest.approx(0.0, abs=1e-12)

    def test_ratio_at_origin(self) -> None:
        """Test the boundary limit -lambda / kappa."""
        kit = EntropyKit()
        x = np.linspace(0.0, 1.0, 11)
        h = kit.ratio(2.0 * kit.omega(x), x, -2.0 * kit.kappa)
        np.testing.assert_allclose(h, 2.0)
