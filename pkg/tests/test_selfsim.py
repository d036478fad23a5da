"""Unit tests for the self-similar closed-form solutions."""

import math

import numpy as np
import pytest

from mckv.core.selfsim import (
    S_eval,
    SelfSimilar,
    SelfSimilarStart,
    U_eval,
    U_profile,
    U_x_profile,
    beta_inf,
    selfsim_residual,
)
from mckv.errors import DomainError


@pytest.fixture
def unit_pair() -> SelfSimilar:
    """Pair with c = 0, beta = 1, alpha = 1."""
    return SelfSimilar(c=0.0, beta=1.0, alpha=1.0)


@pytest.mark.unit
class TestBetaInf:
    """Tests for the far-field value."""

    @pytest.mark.parametrize(
        ("beta", "expected"),
        [(1.0, 0.7579), (2.0, 0.9054)],
    )
    def test_known_values(self, beta: float, expected: float) -> None:
        """Test tabulated values."""
        assert beta_inf(beta) == pytest.approx(expected, abs=1e-4)

    def test_erfc_identity(self) -> None:
        """Test against 2 beta exp(beta^2) int_beta^inf exp(-z^2) dz."""
        from scipy.special import erfcx

        for beta in (0.1, 0.5, 3.0):
            expected = beta * math.sqrt(math.pi) * erfcx(beta)
            assert beta_inf(beta) == pytest.approx(expected, rel=1e-10)

    def test_large_beta_no_overflow(self) -> None:
        """Test that large beta tends to one without overflow."""
        value = beta_inf(50.0)
        assert math.isfinite(value)
        assert value == pytest.approx(1.0, abs=1e-3)

    def test_increasing_and_below_one(self) -> None:
        """Test monotonicity in beta."""
        values = [beta_inf(b) for b in (0.2, 0.5, 1.0, 2.0, 5.0)]
        assert np.all(np.diff(values) > 0)
        assert all(0 < v < 1 for v in values)

    @pytest.mark.parametrize("beta", [0.0, -1.0])
    def test_domain(self, beta: float) -> None:
        """Test that beta must be positive."""
        with pytest.raises(DomainError):
            beta_inf(beta)


class TestSelfSimilar:
    """Tests for the pair parameters and the free boundary."""

    def test_validation(self) -> None:
        """Test positive beta and alpha."""
        with pytest.raises(DomainError):
            SelfSimilar(c=0.0, beta=0.0, alpha=1.0)
        with pytest.raises(DomainError):
            SelfSimilar(c=0.0, beta=1.0, alpha=-1.0)

    def test_boundary(self) -> None:
        """Test S(t) = (c + beta sqrt(2t)) / alpha."""
        ss = SelfSimilar(c=0.5, beta=1.0, alpha=2.0)
        assert S_eval(ss, 0.0) == pytest.approx(0.25)
        assert S_eval(ss, 2.0) == pytest.approx((0.5 + 2.0) / 2.0)

    def test_negative_time(self, unit_pair) -> None:
        """Test that S is undefined for t < 0."""
        with pytest.raises(DomainError):
            S_eval(unit_pair, -1.0)


class TestProfile:
    """Tests for U_eval and U_profile."""

    def test_reference_value(self, unit_pair) -> None:
        """Test U(0.5, 2; c=0, beta=1, alpha=1)."""
        result = U_eval(unit_pair, 0.5, 2.0)
        assert result.value == pytest.approx(0.73533, abs=1e-5)
        assert result.below_boundary is False

    def test_left_of_boundary(self, unit_pair) -> None:
        """Test that points left of the boundary are clamped and flagged."""
        result = U_eval(unit_pair, 0.5, 0.5)
        assert result.value == 0.0
        assert result.below_boundary is True

    def test_initial_step(self) -> None:
        """Test the step profile at t = 0."""
        ss = SelfSimilar(c=1.0, beta=1.0, alpha=2.0)
        assert U_eval(ss, 0.0, 2.0).value == pytest.approx(beta_inf(1.0) / 2.0)
        assert U_eval(ss, 0.0, 0.5).value == 0.0

    def test_vectorized_matches_quadrature(self) -> None:
        """Test U_profile against U_eval."""
        ss = SelfSimilar(c=0.3, beta=1.5, alpha=0.7)
        xs = np.linspace(0.0, 8.0, 17)
        fast = U_profile(ss, 0.8, xs)
        slow = np.array([U_eval(ss, 0.8, x).value for x in xs])
        np.testing.assert_allclose(fast, slow, atol=1e-10)

    def test_far_field(self, unit_pair) -> None:
        """Test that the profile approaches beta_inf / alpha far right."""
        far = U_profile(unit_pair, 1.0, np.array([50.0]))[0]
        assert far == pytest.approx(beta_inf(1.0), rel=1e-10)

    def test_large_beta_stable(self) -> None:
        """Test that the erfcx form stays finite for large beta."""
        ss = SelfSimilar(c=0.0, beta=30.0, alpha=1.0)
        values = U_profile(ss, 0.5, np.linspace(30.0, 40.0, 11))
        assert np.all(np.isfinite(values))

    def test_profile_needs_positive_time(self, unit_pair) -> None:
        """Test that the vectorized form rejects t <= 0."""
        with pytest.raises(DomainError):
            U_profile(unit_pair, 0.0, np.array([1.0]))

    def test_stefan_condition(self) -> None:
        """Test S' = U_x / 2 at the boundary."""
        ss = SelfSimilar(c=0.2, beta=0.8, alpha=1.3)
        t = 0.6
        xb = ss.alpha * S_eval(ss, t)
        slope = U_x_profile(ss, t, np.array([xb]))[0]
        speed = ss.beta / (ss.alpha * math.sqrt(2 * t))
        assert 0.5 * slope == pytest.approx(speed, rel=1e-12)


class TestResidual:
    """Tests for selfsim_residual."""

    def test_small_defect(self, unit_pair) -> None:
        """Test that the closed form solves the equation to grid accuracy."""
        grid = np.linspace(2.5, 6.0, 351)
        assert selfsim_residual(unit_pair, grid, (0.5, 1.0)) < 1e-2

    def test_defect_shrinks_with_h(self, unit_pair) -> None:
        """Test second-order convergence of the defect."""
        coarse = selfsim_residual(unit_pair, np.linspace(2.5, 6.0, 71), (0.5, 1.0))
        fine = selfsim_residual(unit_pair, np.linspace(2.5, 6.0, 141), (0.5, 1.0))
        assert fine < coarse

    def test_grid_crossing_boundary(self, unit_pair) -> None:
        """Test that grids reaching the boundary are rejected."""
        with pytest.raises(DomainError):
            selfsim_residual(unit_pair, np.linspace(0.5, 3.0, 51), (0.5, 1.0))

    def test_bad_window(self, unit_pair) -> None:
        """Test that windows must start after zero."""
        with pytest.raises(DomainError):
            selfsim_residual(unit_pair, np.linspace(2.5, 6.0, 51), (0.0, 1.0))


class TestSelfSimilarStart:
    """Tests for the moving-frame start data."""

    def test_initial_vanishes_at_origin(self, unit_pair) -> None:
        """Test that the shifted profile is zero at y = 0."""
        start = SelfSimilarStart(unit_pair, t0=0.5)
        assert start.initial(np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-14)
        assert start.initial(np.array([1.0]))[0] > 0

    def test_exact_loss(self, unit_pair) -> None:
        """Test s(t) = S(t0 + t) - S(t0)."""
        start = SelfSimilarStart(unit_pair, t0=0.5)
        assert float(start.exact_loss(0.0)) == pytest.approx(0.0)
        expected = S_eval(unit_pair, 1.0) - S_eval(unit_pair, 0.5)
        assert float(start.exact_loss(0.5)) == pytest.approx(expected)

    def test_right_value_matches_profile(self, unit_pair) -> None:
        """Test the right boundary value in the moving frame."""
        start = SelfSimilarStart(unit_pair, t0=0.5)
        shift = unit_pair.alpha * S_eval(unit_pair, 0.75)
        expected = U_profile(unit_pair, 0.75, np.array([5.0 + shift]))[0]
        assert start.right_value(0.25, 5.0) == pytest.approx(expected)

    def test_positive_t0(self, unit_pair) -> None:
        """Test that t0 must be positive."""
        with pytest.raises(DomainError):
            SelfSimilarStart(unit_pair, t0=0.0)
