"""
Environment base module
Shared reset/step contract for the bundled continuous-control tasks
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..errors import ContractViolationError, RejectedInputError


@dataclass(frozen=True)
class EnvSpec:
    """Static description of a task"""

    name: str
    state_dim: int
    action_dim: int
    action_low: Tuple[float, ...]
    action_high: Tuple[float, ...]
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise RejectedInputError("horizon must be >= 1")
        if len(self.action_low) != self.action_dim or len(self.action_high) != self.action_dim:
            raise RejectedInputError("Action bounds must have action_dim entries")
        if any(lo >= hi for lo, hi in zip(self.action_low, self.action_high)):
            raise RejectedInputError("action_low must be < action_high elementwise")


@dataclass
class EnvState:
    """
    Observation plus bookkeeping

    `done` covers both true termination and horizon truncation;
    `truncated` tells them apart. `internal` is the physical state.
    """

    observation: np.ndarray
    t: int
    done: bool
    internal: np.ndarray
    truncated: bool = field(default=False)


class Environment(ABC):
    """Deterministic dynamics over explicit EnvState values"""

    name = 'base'

    def __init__(self, horizon: int):
        self.horizon = int(horizon)

    @property
    @abstractmethod
    def spec(self) -> EnvSpec:
        """Task description"""

    @property
    @abstractmethod
    def reward_bound(self) -> float:
        """Bound on |reward| for any reachable state and admissible action"""

    @abstractmethod
    def _initial(self, rng: np.random.Generator) -> np.ndarray:
        """Draw the initial physical state"""

    @abstractmethod
    def _dynamics(self, internal: np.ndarray, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        """Return (next internal state, reward, terminal)"""

    def _observe(self, internal: np.ndarray) -> np.ndarray:
        return internal.copy()

    def state_from(self, internal: np.ndarray, t: int = 0) -> EnvState:
        """Wrap a physical state; used to start rollouts from chosen states"""
        internal = np.asarray(internal, dtype=np.float64).copy()
        return EnvState(self._observe(internal), t, False, internal)

    def reset(self, seed: Optional[int] = None) -> EnvState:
        """
        Start an episode

        Args:
            seed: Seed of the initial-state draw

        Returns:
            EnvState with t=0 and done=False
        """
        return self.state_from(self._initial(np.random.default_rng(seed)))

    def step(self, state: EnvState, action: np.ndarray) -> Tuple[EnvState, float, bool]:
        """
        Advance one step

        Args:
            state: Current state (must not be done)
            action: Environment-space action, clipped to the bounds

        Returns:
            (next state, reward, terminal) where terminal excludes truncation
        """
        if state.done:
            raise ContractViolationError(f"{self.name}: step called on a finished episode")

        spec = self.spec
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.size != spec.action_dim:
            raise RejectedInputError(f"{self.name}: expected {spec.action_dim} action values, got {action.size}")
        action = np.clip(action, spec.action_low, spec.action_high)

        internal, reward, terminal = self._dynamics(state.internal, action)
        reward = float(reward)
        if np.isfinite(reward) and abs(reward) > self.reward_bound:
            raise ContractViolationError(
                f"{self.name}: reward {reward} exceeds declared bound {self.reward_bound}"
            )

        t = state.t + 1
        truncated = (not terminal) and t >= self.horizon
        next_state = EnvState(self._observe(internal), t, bool(terminal or truncated), internal, truncated)
        return next_state, reward, bool(terminal)

    def rescale_action(self, action: np.ndarray) -> np.ndarray:
        """Map a policy action from (-1, 1) onto [action_low, action_high]"""
        low = np.asarray(self.spec.action_low)
        high = np.asarray(self.spec.action_high)
        return low + (np.asarray(action, dtype=np.float64) + 1.0) * 0.5 * (high - low)

    def bind_parameters(self, psi: np.ndarray) -> None:
        """Hook for tasks scored on the parameter vector itself; no-op by default"""
