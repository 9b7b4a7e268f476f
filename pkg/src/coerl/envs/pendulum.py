"""
Pendulum swing-up
Angle 0 is upright; the pendulum starts anywhere and must be swung up and balanced
"""

from typing import Tuple

import numpy as np

from .base import Environment, EnvSpec


def angle_normalize(angle: float) -> float:
    """Wrap an angle into [-pi, pi)"""
    return ((angle + np.pi) % (2.0 * np.pi)) - np.pi


class Pendulum(Environment):
    """theta'' = (g/l) sin(theta) + u / (m l^2), semi-implicit Euler"""

    name = 'pendulum'

    def __init__(
        self,
        horizon: int = 200,
        g: float = 10.0,
        mass: float = 1.0,
        length: float = 1.0,
        dt: float = 0.05,
        max_speed: float = 8.0,
        max_torque: float = 2.0,
    ):
        super().__init__(horizon)
        self.g = g
        self.mass = mass
        self.length = length
        self.dt = dt
        self.max_speed = max_speed
        self.max_torque = max_torque

    @property
    def spec(self) -> EnvSpec:
        return EnvSpec(self.name, 3, 1, (-self.max_torque,), (self.max_torque,), self.horizon)

    @property
    def reward_bound(self) -> float:
        return np.pi ** 2 + 0.1 * self.max_speed ** 2 + 0.001 * self.max_torque ** 2

    def _initial(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([rng.uniform(-np.pi, np.pi), rng.uniform(-1.0, 1.0)])

    def _observe(self, internal: np.ndarray) -> np.ndarray:
        theta, omega = internal
        return np.array([np.cos(theta), np.sin(theta), omega])

    def _dynamics(self, internal: np.ndarray, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        theta, omega = internal
        u = float(action[0])
        reward = -(angle_normalize(theta) ** 2 + 0.1 * omega ** 2 + 0.001 * u ** 2)

        accel = (self.g / self.length) * np.sin(theta) + u / (self.mass * self.length ** 2)
        omega = np.clip(omega + self.dt * accel, -self.max_speed, self.max_speed)
        theta = theta + self.dt * omega
        return np.array([theta, omega]), reward, False

    def energy(self, internal: np.ndarray) -> float:
        """Total mechanical energy; conserved by the u=0 dynamics"""
        theta, omega = internal
        return 0.5 * self.mass * self.length ** 2 * omega ** 2 + self.mass * self.g * self.length * np.cos(theta)
