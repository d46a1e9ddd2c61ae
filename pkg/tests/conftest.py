from __future__ import annotations # Enable type annotation to be stored as string

import pytest
from hypothesis import settings

from shg_spectral.potential import cosine_potential, vacuum
from shg_spectral.run_config import RunConfig


settings.register_profile('spectral', max_examples=30, deadline=None)
settings.load_profile('spectral')


@pytest.fixture
def config() -> RunConfig:
    """Defaults only, independent of config/run_config.json and the environment."""
    return RunConfig()

@pytest.fixture
def small_config() -> RunConfig:
    """Coarser settings for the integration-heavy tests."""
    return RunConfig(K=4, K_align=2, tail_terms=256, quadrature_nodes=48)

@pytest.fixture
def vac():
    return vacuum()

@pytest.fixture
def cos_potential():
    """u = 0.3 cos 2πx, u_y = 0."""
    return cosine_potential(0.3)
