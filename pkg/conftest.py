import os
import sys

import numpy as np
import pytest

# Adiciona o diretório do projeto ao path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app.core.config import build_run_config
from app.models import LocalObservation

TINY = {
    "environment": {
        "M": 3, "N": 6, "T": 5, "L": 60.0, "U": 2,
        "R_cov": 25.0, "R_com": 40.0, "K": 2, "d_min": 10.0
    },
    "encoder": {
        "max_obs_users": 3, "mlp_hidden": 5, "cnn_channels": [2, 3], "cnn_kernels": [3, 2],
        "cnn_strides": [1, 1], "cnn_out": 4, "gat_dim": 6, "K_heads": 2
    },
    "ppo": {"epochs": 2, "minibatch": 4, "actor_hidden": 5, "critic_hidden": 4},
    "training": {"episodes": 2, "seed": 3, "checkpoint_interval": 1},
}


def _tiny_config(**overrides):
    config = build_run_config(TINY)
    return config.with_overrides(overrides) if overrides else config


@pytest.fixture
def make_config():
    """Fábrica de configurações pequenas (grid 6x6, dimensões mínimas)"""
    return _tiny_config


@pytest.fixture
def make_observation():
    """Fábrica de observações aleatórias compatíveis com a configuração pequena"""

    def factory(rng: np.random.Generator, uav_id: int = 0, config=None) -> LocalObservation:
        config = config or _tiny_config()
        k = config.environment.max_neighbors
        u = config.encoder.max_obs_users
        g = config.environment.grid_size
        user_mask = (rng.random(u) < 0.6).astype(float)
        grid = np.zeros((2, g, g))
        grid[0] = rng.random((g, g)) < 0.3
        grid[1][rng.integers(g), rng.integers(g)] = 1.0
        return LocalObservation(
            uav_id=uav_id,
            own=rng.random(5),
            neighbor_features=rng.random((k, 2)),
            neighbor_mask=(rng.random(k) < 0.7).astype(float),
            user_features=rng.uniform(-1, 1, (u, 3)),
            user_mask=user_mask,
            user_ids=[i if user_mask[i] else -1 for i in range(u)],
            grid=grid
        )

    return factory
