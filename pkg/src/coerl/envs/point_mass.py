"""
Point-mass navigation
A 2-D mass driven by acceleration toward a fixed goal inside a walled arena
"""

from typing import Sequence, Tuple

import numpy as np

from .base import Environment, EnvSpec


class PointMass(Environment):
    """State is (position, velocity); walls stop the mass and zero the normal velocity"""

    name = 'point_mass'

    def __init__(
        self,
        horizon: int = 200,
        arena: float = 1.0,
        goal: Sequence[float] = (0.0, 0.0),
        dt: float = 0.05,
        max_speed: float = 2.0,
        max_accel: float = 1.0,
    ):
        super().__init__(horizon)
        self.arena = arena
        self.goal = np.asarray(goal, dtype=np.float64)
        self.dt = dt
        self.max_speed = max_speed
        self.max_accel = max_accel

    @property
    def spec(self) -> EnvSpec:
        return EnvSpec(self.name, 4, 2, (-self.max_accel,) * 2, (self.max_accel,) * 2, self.horizon)

    @property
    def reward_bound(self) -> float:
        return 2.0 * np.sqrt(2.0) * self.arena + 0.01 * 2.0 * self.max_accel ** 2

    def _initial(self, rng: np.random.Generator) -> np.ndarray:
        position = rng.uniform(-self.arena, self.arena, size=2)
        return np.concatenate([position, np.zeros(2)])

    def _dynamics(self, internal: np.ndarray, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        position, velocity = internal[:2], internal[2:]
        reward = -np.linalg.norm(position - self.goal) - 0.01 * float(action @ action)

        velocity = np.clip(velocity + self.dt * action, -self.max_speed, self.max_speed)
        position = position + self.dt * velocity
        hit = np.abs(position) > self.arena
        position = np.clip(position, -self.arena, self.arena)
        velocity = np.where(hit, 0.0, velocity)
        return np.concatenate([position, velocity]), reward, False
