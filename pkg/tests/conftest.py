"""Shared fixtures for the test suite"""

import numpy as np
import pytest

from coerl.config import TrainerConfig
from coerl.nn.mlp import MlpSpec, init_params


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_params(rng):
    """A 2 -> 3 -> 1 tanh network with seeded weights"""
    return init_params(MlpSpec(2, (3,), 1, 'tanh'), rng)


@pytest.fixture
def tiny_config(tmp_path):
    """A fast point-mass run: short episodes, small population and networks"""
    return TrainerConfig(
        env_name='point_mass',
        total_generations=3,
        pop_size=4,
        sigma=0.1,
        es_lr=0.01,
        horizon=10,
        hidden_dims=(8,),
        batch_size=16,
        rl_steps_per_generation=5,
        eval_interval=2,
        eval_episodes=2,
        checkpoint_interval=2,
        seed=7,
        output_dir=str(tmp_path / 'run'),
    )
