"""Test helpers: a scripted environment and finite-difference utilities"""

from typing import Tuple

import numpy as np

from coerl.envs.base import Environment, EnvSpec


class ConstantRewardEnv(Environment):
    """1-D task paying a fixed reward every step; used for bookkeeping checks"""

    name = 'constant'

    def __init__(self, horizon: int = 5, reward: float = 0.0, bound: float = 10.0):
        super().__init__(horizon)
        self.reward = reward
        self.bound = bound

    @property
    def spec(self) -> EnvSpec:
        return EnvSpec(self.name, 1, 1, (-1.0,), (1.0,), self.horizon)

    @property
    def reward_bound(self) -> float:
        return self.bound

    def _initial(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=1)

    def _dynamics(self, internal: np.ndarray, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        return internal + 0.1 * action, self.reward, False


class ExplodingEnv(ConstantRewardEnv):
    """Produces a NaN state on the third step"""

    name = 'exploding'

    def _dynamics(self, internal, action):
        if internal[0] > 2.5:
            return np.array([np.nan]), 0.0, False
        return np.array([internal[0] + 1.0]), 0.0, False

    def _initial(self, rng):
        return np.zeros(1)


def central_difference(fn, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of a scalar function of a flat vector"""
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        up = theta.copy()
        down = theta.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (fn(up) - fn(down)) / (2.0 * h)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))
