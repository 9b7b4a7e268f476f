"""
Quadratic fitness task
f(psi) = -||psi - psi*||^2 exposed as a one-step environment
"""

from typing import Optional, Tuple

import numpy as np

from ..errors import ContractViolationError, RejectedInputError
from .base import Environment, EnvSpec


def quadratic_fitness_task(psi: np.ndarray, psi_star: np.ndarray) -> float:
    """-||psi - psi*||^2; maximum 0 at psi == psi*"""
    diff = np.asarray(psi, dtype=np.float64) - psi_star
    return -float(diff @ diff)


class QuadraticTask(Environment):
    """
    One-step episode whose reward scores the bound parameter vector

    The rollout path calls bind_parameters(psi) before reset, so the
    evolution loop runs unchanged on this task.
    """

    name = 'quadratic'

    def __init__(self, dim: int, seed: int = 0, scale: float = 1.0):
        super().__init__(horizon=1)
        if dim < 1:
            raise RejectedInputError("dim must be >= 1")
        self.dim = dim
        self.psi_star = scale * np.random.default_rng(seed).standard_normal(dim)
        self._psi: Optional[np.ndarray] = None

    @property
    def spec(self) -> EnvSpec:
        return EnvSpec(self.name, 1, 1, (-1.0,), (1.0,), 1)

    @property
    def reward_bound(self) -> float:
        return np.inf

    def fitness(self, psi: np.ndarray) -> float:
        return quadratic_fitness_task(psi, self.psi_star)

    def gradient(self, psi: np.ndarray) -> np.ndarray:
        """Analytic gradient 2 (psi* - psi)"""
        return 2.0 * (self.psi_star - np.asarray(psi, dtype=np.float64))

    def bind_parameters(self, psi: np.ndarray) -> None:
        psi = np.asarray(psi, dtype=np.float64)
        if psi.size != self.dim:
            raise RejectedInputError(f"Quadratic task has dim {self.dim}, got {psi.size} parameters")
        self._psi = psi.copy()

    def _initial(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(1)

    def _dynamics(self, internal: np.ndarray, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        if self._psi is None:
            raise ContractViolationError("QuadraticTask stepped before bind_parameters")
        return internal.copy(), self.fitness(self._psi), True
