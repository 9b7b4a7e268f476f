"""
Twin Q-critics
Each critic maps state||action to a scalar value estimate
"""

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from ..errors import RejectedInputError
from ..nn.mlp import MlpCache, MlpParams, MlpSpec, init_params, mlp_forward


@dataclass(eq=False)
class CriticPair:
    """Two critics sharing one MlpSpec; inputs are state then action"""

    q1: MlpParams
    q2: MlpParams
    state_dim: int

    def __post_init__(self):
        if self.q1.spec != self.q2.spec:
            raise RejectedInputError("Both critics must share one spec")
        if self.q1.spec.output_dim != 1:
            raise RejectedInputError("Critics must emit a single value")
        if not 0 < self.state_dim < self.q1.spec.input_dim:
            raise RejectedInputError("state_dim must leave room for the action inputs")

    @classmethod
    def create(
        cls,
        state_dim: int,
        action_dim: int,
        hidden_dims: Sequence[int],
        rng: np.random.Generator,
        activation: str = 'relu',
    ) -> 'CriticPair':
        spec = MlpSpec(state_dim + action_dim, tuple(hidden_dims), 1, activation)
        return cls(init_params(spec, rng), init_params(spec, rng), state_dim)

    @property
    def action_dim(self) -> int:
        return self.q1.spec.input_dim - self.state_dim

    def copy(self) -> 'CriticPair':
        return CriticPair(self.q1.copy(), self.q2.copy(), self.state_dim)

    def swapped(self) -> 'CriticPair':
        return CriticPair(self.q2, self.q1, self.state_dim)


def critic_input(critics: CriticPair, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Concatenate states and actions in the fixed state-then-action order"""
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    if states.shape[-1] != critics.state_dim or actions.shape[-1] != critics.action_dim:
        raise RejectedInputError(
            f"Expected state/action widths {critics.state_dim}/{critics.action_dim}, "
            f"got {states.shape}/{actions.shape}"
        )
    if states.ndim != actions.ndim:
        raise RejectedInputError("States and actions must share batching")
    return np.concatenate([states, actions], axis=-1)


def q_forward(params: MlpParams, inputs: np.ndarray) -> Tuple[np.ndarray, MlpCache]:
    """One critic over a (batch, state+action) matrix; returns (batch,) values"""
    out, cache = mlp_forward(params, inputs)
    return out[:, 0], cache


def q_value(
    critics: CriticPair,
    state: np.ndarray,
    action: np.ndarray,
) -> Tuple[Union[float, np.ndarray], Union[float, np.ndarray]]:
    """
    Evaluate both critics

    Args:
        critics: The critic pair
        state: State vector or (batch, state_dim)
        action: Action vector or (batch, action_dim)

    Returns:
        (q1, q2): floats for single inputs, arrays for batches
    """
    inputs = critic_input(critics, state, action)
    out1, _ = mlp_forward(critics.q1, inputs)
    out2, _ = mlp_forward(critics.q2, inputs)
    if inputs.ndim == 1:
        return float(out1[0]), float(out2[0])
    return out1[:, 0], out2[:, 0]
