"""Tests for the log-feedback Fokker-Planck solver."""

import math

import numpy as np
import pytest

from mckv.core.artifacts import read_csv, read_meta
from mckv.core.model import Density
from mckv.core.oracles import averaged_survival
from mckv.errors import ConfigurationError, InvalidDensityError
from mckv.solvers.entropy import EntropyKit
from mckv.solvers.fp_log import (
    SOBOLEV_GROWTH_LIMIT,
    LogSolution,
    entropy_series,
    lambda_l2_budget,
    sobolev_growth,
    sobolev_norms,
    solve_log,
    survival_rate_bound,
    write_run,
)
from mckv.solvers.scheme import GridConfig, boundary_flux, make_grid, trapezoid_mass


@pytest.fixture
def log_grid() -> GridConfig:
    """Grid on [0, 12] with dt at the step limit."""
    return GridConfig(h=0.05, dt=0.00125, x_max=12.0, record_every=4)


class TestValidation:
    """Tests for solve_log argument checks."""

    def test_wrong_model(self, gamma1, linear_params, log_grid) -> None:
        """Test that linear parameters are rejected."""
        with pytest.raises(ConfigurationError):
            solve_log(gamma1, linear_params(1.0), 0.1, log_grid)

    def test_must_vanish_at_origin(self, exp1, log_params, log_grid) -> None:
        """Test that data positive at zero are rejected."""
        with pytest.raises(InvalidDensityError, match="origin"):
            solve_log(exp1, log_params(1.0), 0.1, log_grid)

    def test_non_positive_horizon(self, gamma1, log_params, log_grid) -> None:
        """Test that T must be positive."""
        with pytest.raises(ConfigurationError):
            solve_log(gamma1, log_params(1.0), -1.0, log_grid)

    def test_sobolev_norms_finite(self, gamma1) -> None:
        """Test both norms of gamma data."""
        h1, weighted = sobolev_norms(gamma1, make_grid(0.01, 20.0))
        assert math.isfinite(h1) and h1 > 0
        assert math.isfinite(weighted) and weighted > 0

    def test_smooth_data_norms_converge(self, gamma1) -> None:
        """Test that gamma data barely change their norms under refinement."""
        assert sobolev_growth(gamma1, make_grid(0.05, 12.0)) < 0.005

    def test_rejects_square_root_onset(self, log_params, log_grid) -> None:
        """Test that data rising like sqrt(x) at the origin fail the Sobolev check."""
        x = np.concatenate(([0.0], np.geomspace(1e-8, 1.0, 400), np.linspace(1.01, 40.0, 4000)))
        root = Density.tabulated(x, 2.0 / math.sqrt(math.pi) * np.sqrt(x) * np.exp(-x))
        assert sobolev_growth(root, make_grid(log_grid.h, 12.0)) > SOBOLEV_GROWTH_LIMIT
        with pytest.raises(InvalidDensityError, match="Sobolev"):
            solve_log(root, log_params(1.0), 0.1, log_grid)


class TestSolveLog:
    """Tests for solver runs on small grids."""

    @pytest.mark.parametrize("beta", [0.0, 0.5])
    def test_no_feedback_matches_survival(self, gamma1, log_params, log_grid, beta: float) -> None:
        """Test that alpha = 0 reproduces the drifted survival probability."""
        sol = solve_log(gamma1, log_params(0.0, beta), 1.0, log_grid)
        assert sol.blowup is None
        assert sol.qbar.final == pytest.approx(averaged_survival(gamma1, 1.0, beta), abs=5e-3)

    def test_survival_starts_at_one_and_decreases(self, gamma1, log_params, log_grid) -> None:
        """Test qbar(0) = 1 and a nonincreasing survival."""
        sol = solve_log(gamma1, log_params(1.0), 1.0, log_grid)
        assert sol.qbar.values[0] == 1.0
        assert np.all(np.diff(sol.qbar.values) <= 1e-12)
        assert np.all(sol.lambda_.values <= 1e-12)

    def test_feedback_lowers_survival(self, gamma1, log_params, log_grid) -> None:
        """Test that positive alpha defaults more."""
        free = solve_log(gamma1, log_params(0.0), 0.5, log_grid)
        coupled = solve_log(gamma1, log_params(1.0), 0.5, log_grid)
        assert coupled.qbar.final < free.qbar.final

    def test_normalized_mass(self, gamma1, log_params, log_grid) -> None:
        """Test the renormalization keeps r a probability density."""
        sol = solve_log(gamma1, log_params(1.0, 0.2), 0.5, log_grid)
        assert sol.max_mass_drift < 1e-2

    def test_lambda_energy(self, gamma1, log_params, log_grid) -> None:
        """Test the cumulative lambda energy and its affine summary."""
        sol = solve_log(gamma1, log_params(1.0), 1.0, log_grid)
        cum = sol.lambda_l2.values
        assert cum[0] == 0.0
        assert np.all(np.diff(cum) >= 0)
        budget = lambda_l2_budget(sol)
        assert budget.affine_constant >= cum[-1] / 2.0 - 1e-12
        assert survival_rate_bound(budget) == pytest.approx(
            math.sqrt(2 * budget.affine_constant)
        )

    def test_snapshots_and_entropy(self, gamma1, log_params, log_grid) -> None:
        """Test q snapshots and entropy functionals at snapshot times."""
        cfg = log_grid.model_copy(update={"snapshot_times": (0.0, 0.25)})
        sol = solve_log(gamma1, log_params(1.0), 0.5, cfg)
        assert len(sol.r_snapshots) == 2
        q = sol.q_snapshots[1]
        r = sol.r_snapshots[1]
        np.testing.assert_allclose(q.values, r.values * float(sol.qbar.at(r.t)))
        I, J = entropy_series(sol, EntropyKit())
        assert len(I) == 2
        assert np.all(I.values > 0)
        assert np.all(J.values >= 0)

    def test_entropy_needs_snapshots(self, gamma1, log_params, log_grid) -> None:
        """Test that entropy_series needs snapshots."""
        sol = solve_log(gamma1, log_params(1.0), 0.05, log_grid)
        with pytest.raises(ConfigurationError):
            entropy_series(sol, EntropyKit())

    @pytest.mark.slow
    def test_blowup_before_bound(self, gamma1, log_params) -> None:
        """Test that alpha = 5 stops before the criterion time 4 ln 4 / 9 at two refinements."""
        bound = 4.0 * math.log(4.0) / 9.0
        times = []
        for h in (0.05, 0.025):
            cfg = GridConfig(h=h, dt=0.5 * h * h, x_max=12.0, record_every=20)
            sol = solve_log(gamma1, log_params(5.0), 1.5, cfg)
            assert sol.blowup is not None
            assert sol.blowup.is_blowup
            assert sol.blowup.time < bound
            assert lambda_l2_budget(sol).affine_excess > 0.0
            times.append(sol.blowup.time)
        assert abs(times[0] - times[1]) / times[0] < 0.25

    @pytest.mark.slow
    @pytest.mark.parametrize("beta", [2.0, 4.0, 8.0])
    def test_large_drift_budget_is_affine(self, gamma1, log_params, beta: float) -> None:
        """Test a run to T = 10 whose lambda energy grows at most affinely."""
        cfg = GridConfig(h=0.05, dt=0.00125, record_every=20)
        sol = solve_log(gamma1, log_params(0.05, beta), 10.0, cfg)
        assert sol.blowup is None
        assert sol.times[-1] == pytest.approx(10.0)
        budget = lambda_l2_budget(sol)
        assert budget.affine_excess < 0.05
        assert math.isfinite(budget.affine_constant)
        assert np.all(np.isfinite(sol.I.values))
        assert sol.I.values.max() < 1.0

    def test_survival_lower_bound(self, gamma1, log_params, log_grid) -> None:
        """Test qbar(t) >= exp(-C' t) for t >= 1 with C' from the lambda budget."""
        sol = solve_log(gamma1, log_params(1.0), 2.0, log_grid)
        rate = survival_rate_bound(lambda_l2_budget(sol))
        late = sol.times >= 1.0
        assert late.any()
        assert np.all(sol.qbar.values[late] >= np.exp(-rate * sol.times[late]) * (1 - 1e-12))


class TestSurvivalIdentities:
    """Tests for the links between lambda, qbar and the snapshots."""

    @pytest.fixture
    def run(self, gamma1, log_params) -> LogSolution:
        """Run recorded at every step with three snapshots."""
        cfg = GridConfig(
            h=0.05, dt=0.00125, x_max=12.0, record_every=1, snapshot_times=(0.0, 0.2, 0.4)
        )
        return solve_log(gamma1, log_params(1.0, 0.2), 0.5, cfg)

    def test_qbar_is_mass_of_q(self, run) -> None:
        """Test that qbar equals the integral of the q snapshots."""
        h = run.grid_config.h
        for q in run.q_snapshots:
            assert trapezoid_mass(q.values, h) == pytest.approx(float(run.qbar.at(q.t)), rel=1e-10)

    def test_lambda_is_log_derivative(self, run) -> None:
        """Test that lambda is the step-wise log derivative of qbar."""
        rates = np.diff(np.log(run.qbar.values)) / np.diff(run.times)
        np.testing.assert_allclose(rates, run.lambda_.values[1:], rtol=1e-8, atol=1e-10)

    def test_lambda_is_boundary_flux(self, run) -> None:
        """Test lambda against minus half the boundary slope of r."""
        h = run.grid_config.h
        for snap in run.r_snapshots:
            lam = float(run.lambda_.at(snap.t))
            flux = boundary_flux(snap.values, h)
            assert abs(lam + flux) <= 2.0 * abs(lam) * run.max_mass_drift + 1e-9


class TestWriteRun:
    """Tests for log-run artifacts."""

    def test_files(self, tmp_path, gamma1, log_params, log_grid) -> None:
        """Test series, snapshot and meta files."""
        cfg = log_grid.model_copy(update={"snapshot_times": (0.05,)})
        sol = solve_log(gamma1, log_params(1.0), 0.1, cfg)
        out = write_run(sol, tmp_path / "log", {"scenario": "test"})
        header, data = read_csv(out / "series.csv")
        assert header == ["t", "lambda", "qbar", "I", "J", "lambda_l2_cum"]
        assert data.shape == (len(sol.times), 6)
        snaps = list(out.glob("snapshot_*.csv"))
        assert len(snaps) == 1
        assert read_csv(snaps[0])[0] == ["x", "r", "q"]
        meta = read_meta(out / "meta.json")
        assert meta["model"] == "log"
        assert meta["scenario"] == "test"


class TestStationaryState:
    """Tests for the stationary profile under the solver."""

    def test_profile_decays_like_omega(self, log_params) -> None:
        """Test that the stationary profile with drift -sqrt(2 kappa) keeps lambda = -kappa."""
        kit = EntropyKit()
        x = np.linspace(0.0, 40.0, 8001)
        start = Density.tabulated(x, kit.omega(x))
        cfg = GridConfig(h=0.05, dt=0.00125, x_max=40.0, record_every=8)
        sol = solve_log(start, log_params(0.0, -kit.rate), 0.5, cfg)
        assert sol.lambda_.values[-1] == pytest.approx(-kit.kappa, abs=5e-3)

    @pytest.mark.slow
    def test_omega_is_stationary_under_feedback(self, log_params) -> None:
        """Test r, lambda and I frozen for five time units from q0 = omega with alpha = 4."""
        kit = EntropyKit()
        omega = Density.gamma_shape2(kit.rate)
        cfg = GridConfig(
            h=0.02,
            dt=2e-4,
            x_max=40.0,
            record_every=50,
            snapshot_times=(0.0, 1.0, 2.0, 3.0, 4.0, 5.0),
        )
        sol = solve_log(omega, log_params(4.0), 5.0, cfg)
        assert sol.blowup is None
        np.testing.assert_allclose(sol.lambda_.values, -kit.kappa, atol=1e-3)
        assert np.ptp(sol.I.values) < 1e-4
        profile = kit.omega(sol.x)
        drift = max(float(np.max(np.abs(snap.values - profile))) for snap in sol.r_snapshots)
        assert drift < 1e-3
        assert len(sol.r_snapshots) == 6
