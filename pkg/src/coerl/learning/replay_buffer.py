"""
Replay buffer module
Fixed-capacity ring storage of transitions with uniform sampling
"""

import threading
from dataclasses import dataclass
from typing import Iterable, List

import numpy as np

from ..errors import BufferNotReadyError, RejectedInputError


@dataclass
class Transition:
    """
    One (s, a, r, s', done) tuple

    `a` is the policy-space action in (-1, 1); `done` marks true
    termination only, never horizon truncation.
    """

    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool


@dataclass
class TransitionBatch:
    """Column-stacked minibatch"""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return self.rewards.shape[0]


class ReplayBuffer:
    """Ring buffer over preallocated arrays; the oldest item is overwritten when full"""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        """
        Initialize the ReplayBuffer

        Args:
            capacity: Maximum number of stored transitions
            state_dim: Observation width
            action_dim: Action width
        """
        if capacity < 1:
            raise RejectedInputError("capacity must be >= 1")
        self.capacity = capacity
        self.state_dim = state_dim
        self.action_dim = action_dim

        self.states = np.zeros((capacity, state_dim), dtype=np.float64)
        self.actions = np.zeros((capacity, action_dim), dtype=np.float64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.next_states = np.zeros((capacity, state_dim), dtype=np.float64)
        self.dones = np.zeros(capacity, dtype=bool)

        self.cursor = 0
        self.size = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self.size

    def _write(self, transition: Transition) -> None:
        s = np.asarray(transition.s, dtype=np.float64).reshape(-1)
        a = np.asarray(transition.a, dtype=np.float64).reshape(-1)
        s_next = np.asarray(transition.s_next, dtype=np.float64).reshape(-1)
        if s.size != self.state_dim or s_next.size != self.state_dim or a.size != self.action_dim:
            raise RejectedInputError(
                f"Transition dims {s.size}/{a.size} do not match buffer {self.state_dim}/{self.action_dim}"
            )
        if not np.isfinite(transition.r):
            raise RejectedInputError("Transition reward must be finite")

        idx = self.cursor
        self.states[idx] = s
        self.actions[idx] = a
        self.rewards[idx] = transition.r
        self.next_states[idx] = s_next
        self.dones[idx] = bool(transition.done)
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def push(self, transition: Transition) -> None:
        """Store one transition in O(1)"""
        with self._lock:
            self._write(transition)

    def extend(self, transitions: Iterable[Transition]) -> int:
        """
        Store a trajectory as one contiguous block

        Args:
            transitions: Transitions in episode order

        Returns:
            Number of transitions written
        """
        count = 0
        with self._lock:
            for transition in transitions:
                self._write(transition)
                count += 1
        return count

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """
        Uniform sample with replacement

        Raises:
            BufferNotReadyError: if fewer than batch_size items are stored
        """
        if self.size < batch_size or batch_size < 1:
            raise BufferNotReadyError(self.size, batch_size)
        idx = rng.integers(0, self.size, size=batch_size)
        return TransitionBatch(
            states=self.states[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            next_states=self.next_states[idx],
            dones=self.dones[idx],
        )

    def items(self) -> List[Transition]:
        """Stored transitions from oldest to newest"""
        start = self.cursor if self.size == self.capacity else 0
        order = [(start + k) % self.capacity for k in range(self.size)]
        return [
            Transition(self.states[i].copy(), self.actions[i].copy(), float(self.rewards[i]),
                       self.next_states[i].copy(), bool(self.dones[i]))
            for i in order
        ]
