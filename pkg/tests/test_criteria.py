"""Unit tests for blow-up and global-solvability criteria."""

import math

import numpy as np
import pytest

from mckv.core.criteria import (
    RECORD_HEADER,
    Verdict,
    VerdictKind,
    blowup_linear,
    blowup_log,
    delta_verdict,
)
from mckv.core.model import Density, ModelKind
from mckv.errors import ConfigurationError


@pytest.mark.unit
class TestBlowupLinear:
    """Tests for the linear-feedback verdict."""

    def test_gamma_alpha4_touches_criterion(self, gamma1) -> None:
        """Test the single feasible exponent mu = 1 and its time bound."""
        verdict = blowup_linear(gamma1, 4.0)
        assert verdict.kind is VerdictKind.BLOWUP
        assert verdict.witness_mu == pytest.approx(1.0, abs=1e-3)
        assert verdict.T_bound == pytest.approx(2.0 * math.log(4.0), abs=1e-3)

    def test_gamma_alpha3_regular(self, gamma1) -> None:
        """Test the regular side with its deficit witness."""
        verdict = blowup_linear(gamma1, 3.0)
        assert verdict.kind is VerdictKind.NO_BLOWUP
        assert verdict.T_bound is None
        assert verdict.witness_x == pytest.approx(1.512, abs=0.01)
        assert verdict.margin == pytest.approx(0.174, abs=0.005)

    def test_gamma_between_criteria(self, gamma1) -> None:
        """Test that alpha = 3.7 satisfies neither side."""
        assert blowup_linear(gamma1, 3.7).kind is VerdictKind.INDETERMINATE

    def test_large_alpha_mean_criterion(self, gamma1) -> None:
        """Test that a large alpha is a blow-up with a finite bound."""
        verdict = blowup_linear(gamma1, 10.0)
        assert verdict.kind is VerdictKind.BLOWUP
        assert math.isfinite(verdict.T_bound)

    def test_mean_criterion_without_time(self) -> None:
        """Test alpha > 2 mean with no feasible exponent on the grid."""
        verdict = blowup_linear(Density.gamma_shape2(1.0), 4.5, mu_grid=[50.0, 100.0])
        assert verdict.kind is VerdictKind.BLOWUP
        assert verdict.T_bound == math.inf
        assert verdict.witness_mu is None

    def test_exponential_never_regular(self, exp1) -> None:
        """Test that a density positive at zero is never declared regular."""
        verdict = blowup_linear(exp1, 0.5)
        assert verdict.kind is not VerdictKind.NO_BLOWUP

    def test_exponential_blowup(self, exp1) -> None:
        """Test mu alpha rate/(rate+mu) >= 1 for large alpha."""
        verdict = blowup_linear(exp1, 3.0)
        assert verdict.kind is VerdictKind.BLOWUP
        assert verdict.T_bound > 0

    def test_empty_grid(self, gamma1) -> None:
        """Test that an empty exponent grid is a configuration error."""
        with pytest.raises(ConfigurationError):
            blowup_linear(gamma1, 4.0, mu_grid=[])

    def test_non_positive_grid(self, gamma1) -> None:
        """Test that exponents must be positive."""
        with pytest.raises(ConfigurationError):
            blowup_linear(gamma1, 4.0, mu_grid=[0.0, 1.0])

    def test_tabulated_agrees_with_analytic(self, gamma1) -> None:
        """Test the same verdict from a tabulated gamma density."""
        x = np.linspace(0.0, 40.0, 8001)
        tabulated = Density.tabulated(x, gamma1.pdf(x))
        assert blowup_linear(tabulated, 3.0).kind is VerdictKind.NO_BLOWUP
        assert blowup_linear(tabulated, 6.0).kind is VerdictKind.BLOWUP


@pytest.mark.unit
class TestBlowupLog:
    """Tests for the log-feedback verdict."""

    def test_no_drift(self, gamma1) -> None:
        """Test T = 4 ln 4 / 9 at the largest feasible mu = 3."""
        verdict = blowup_log(gamma1, 5.0, 0.0)
        assert verdict.kind is VerdictKind.BLOWUP
        assert verdict.model is ModelKind.LOG
        assert verdict.witness_mu == pytest.approx(3.0, abs=1e-6)
        assert verdict.T_bound == pytest.approx(4.0 * math.log(4.0) / 9.0, abs=1e-6)
        assert verdict.T_bound <= math.log(3.0)

    def test_with_drift(self, gamma1) -> None:
        """Test T = 4 ln 4 / 6 with beta = 0.5."""
        verdict = blowup_log(gamma1, 5.0, 0.5)
        assert verdict.kind is VerdictKind.BLOWUP
        assert verdict.witness_mu > 1.0
        assert verdict.T_bound == pytest.approx(4.0 * math.log(4.0) / 6.0, abs=1e-6)
        assert verdict.T_bound <= math.log(9.0)

    def test_zero_alpha(self, gamma1) -> None:
        """Test that alpha = 0 never blows up."""
        assert blowup_log(gamma1, 0.0, 0.0).kind is VerdictKind.INDETERMINATE

    def test_drift_excludes_grid(self, gamma1) -> None:
        """Test that no trial exponent above 2 beta gives Indeterminate."""
        verdict = blowup_log(gamma1, 5.0, 1.0, mu_grid=[0.5, 1.0, 2.0])
        assert verdict.kind is VerdictKind.INDETERMINATE

    def test_unnormalized_mass(self) -> None:
        """Test that the verdict is invariant under scaling the data."""
        x = np.linspace(0.0, 40.0, 8001)
        g = Density.gamma_shape2(1.0)
        half = Density.tabulated(x, 0.5 * g.pdf(x))
        verdict = blowup_log(half, 5.0, 0.0)
        assert verdict.kind is VerdictKind.BLOWUP
        assert verdict.T_bound == pytest.approx(4.0 * math.log(4.0) / 9.0, abs=1e-3)


@pytest.mark.unit
class TestDeltaVerdict:
    """Tests for point-mass starts."""

    def test_regular(self) -> None:
        """Test alpha < x0."""
        verdict = delta_verdict(1.0, 0.5)
        assert verdict.kind is VerdictKind.NO_BLOWUP
        assert verdict.margin == pytest.approx(0.5)

    def test_indeterminate(self) -> None:
        """Test x0 <= alpha <= 2 x0."""
        assert delta_verdict(1.0, 1.5).kind is VerdictKind.INDETERMINATE

    def test_blowup_without_time(self) -> None:
        """Test that alpha <= e x0 gives an infinite bound."""
        verdict = delta_verdict(1.0, 2.5)
        assert verdict.kind is VerdictKind.BLOWUP
        assert verdict.T_bound == math.inf

    def test_blowup_with_time(self) -> None:
        """Test the Lambert-W bound for alpha = 3."""
        verdict = delta_verdict(1.0, 3.0)
        mu = verdict.witness_mu
        assert verdict.kind is VerdictKind.BLOWUP
        assert mu * 3.0 * math.exp(-mu) == pytest.approx(1.0, abs=1e-10)
        assert mu > 1.0
        assert verdict.T_bound == pytest.approx(2.0 / mu)

    def test_bad_x0(self) -> None:
        """Test that x0 must be positive."""
        with pytest.raises(ConfigurationError):
            delta_verdict(0.0, 1.0)


RANK = {VerdictKind.NO_BLOWUP: 0, VerdictKind.INDETERMINATE: 1, VerdictKind.BLOWUP: 2}


@pytest.mark.unit
class TestCriteriaConsistency:
    """Tests for orderings and limits shared by the criteria."""

    def test_monotone_in_alpha(self, gamma1) -> None:
        """Test that raising alpha never moves a verdict towards regularity."""
        verdicts = [blowup_linear(gamma1, a) for a in (1.0, 2.0, 3.0, 3.7, 4.0, 5.0, 8.0)]
        ranks = [RANK[v.kind] for v in verdicts]
        assert ranks == sorted(ranks)
        assert ranks[0] == 0 and ranks[-1] == 2
        bounds = [v.T_bound for v in verdicts if v.kind is VerdictKind.BLOWUP]
        assert all(b >= c for b, c in zip(bounds, bounds[1:]))

    def test_log_monotone_in_alpha(self, gamma1) -> None:
        """Test that the log bound shrinks as alpha grows."""
        bounds = [blowup_log(gamma1, a, 0.0).T_bound for a in (3.0, 5.0, 10.0)]
        assert all(b > c for b, c in zip(bounds, bounds[1:]))

    @pytest.mark.parametrize("alpha", [0.5, 1.5, 2.5, 3.0])
    def test_delta_matches_narrow_gaussian(self, alpha: float) -> None:
        """Test that a narrow Gaussian start gets the point-mass verdict."""
        point = delta_verdict(1.0, alpha)
        narrow = blowup_linear(Density.narrow_gaussian(1.0, 0.01), alpha)
        assert narrow.kind is point.kind
        if point.T_bound is not None:
            if math.isfinite(point.T_bound):
                assert narrow.T_bound == pytest.approx(point.T_bound, abs=2e-3)
            else:
                assert narrow.T_bound == math.inf

    def test_bound_shrinks_under_upward_refinement(self, exp1) -> None:
        """Test T_bound non-increasing as the exponent grid extends upward."""
        grid = np.logspace(-2.0, 2.0, 33)
        bounds = []
        for top in (2.0, 3.0, 4.0):
            if top > 2.0:
                grid = np.concatenate([grid, np.logspace(top - 1.0, top, 9)[1:]])
            verdict = blowup_linear(exp1, 2.0, mu_grid=grid)
            assert verdict.kind is VerdictKind.BLOWUP
            bounds.append(verdict.T_bound)
        assert bounds[0] >= bounds[1] >= bounds[2]
        assert bounds[2] < bounds[0]


class TestVerdictRecord:
    """Tests for the Verdict record and its invariants."""

    def test_blowup_needs_bound(self) -> None:
        """Test that Blowup verdicts carry a positive bound."""
        with pytest.raises(ValueError):
            Verdict(VerdictKind.BLOWUP)

    def test_regular_has_no_bound(self) -> None:
        """Test that other kinds carry no bound."""
        with pytest.raises(ValueError):
            Verdict(VerdictKind.NO_BLOWUP, T_bound=1.0)

    def test_record_line(self) -> None:
        """Test the CSV record layout."""
        verdict = Verdict(VerdictKind.INDETERMINATE, alpha=3.7)
        fields = verdict.to_record().split(",")
        assert len(fields) == len(RECORD_HEADER.split(","))
        assert fields[0] == "linear"
        assert fields[3] == "Indeterminate"
        assert fields[4] == ""

    def test_infinite_bound_record(self) -> None:
        """Test that an infinite bound is written as inf."""
        verdict = delta_verdict(1.0, 2.5)
        assert verdict.to_record().split(",")[4] == "inf"
