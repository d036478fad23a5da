"""Pytest configuration and shared fixtures."""

import numpy as np
import pytest

from mckv.core.model import Density, ModelKind, ModelParams
from mckv.solvers.scheme import GridConfig


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "unit: marks tests as unit tests (fast, closed-form checks)"
    )
    config.addinivalue_line(
        "markers", "slow: marks acceptance-scale solver and particle runs"
    )


@pytest.fixture
def gamma1() -> Density:
    """GammaShape2 with rate 1."""
    return Density.gamma_shape2(1.0)


@pytest.fixture
def exp1() -> Density:
    """Exponential with rate 1."""
    return Density.exponential(1.0)


@pytest.fixture
def linear_params():
    """Factory for linear-feedback parameters."""

    def make(alpha: float) -> ModelParams:
        return ModelParams(alpha=alpha, model=ModelKind.LINEAR)

    return make


@pytest.fixture
def log_params():
    """Factory for log-feedback parameters."""

    def make(alpha: float, beta: float = 0.0, kappa: float = 0.125) -> ModelParams:
        return ModelParams(alpha=alpha, beta=beta, kappa=kappa, model=ModelKind.LOG)

    return make


@pytest.fixture
def coarse_grid() -> GridConfig:
    """Coarse grid for quick solver runs."""
    return GridConfig(h=0.05, dt=0.00125, record_every=1)


@pytest.fixture
def tabulated_exp1() -> Density:
    """Exponential(1) tabulated on [0, 40] with 4000 points."""
    x = np.linspace(0.0, 40.0, 4000)
    return Density.tabulated(x, np.exp(-x))
