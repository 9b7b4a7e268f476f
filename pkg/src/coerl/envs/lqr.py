"""
Linear-quadratic regulator task and its analytic oracles
x' = A x + B u, reward = -(x'Qx + u'Ru)
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ..errors import RejectedInputError
from .base import Environment, EnvSpec

DEFAULT_A = ((0.99, 0.1), (0.0, 0.95))
DEFAULT_B = ((0.0,), (0.1,))
DEFAULT_Q = ((1.0, 0.0), (0.0, 0.1))
DEFAULT_R = ((0.1,),)


class LQR(Environment):
    """Discrete-time linear system with quadratic cost; terminates if |x| leaves the box"""

    name = 'lqr'

    def __init__(
        self,
        horizon: int = 200,
        A: Sequence[Sequence[float]] = DEFAULT_A,
        B: Sequence[Sequence[float]] = DEFAULT_B,
        Q: Sequence[Sequence[float]] = DEFAULT_Q,
        R: Sequence[Sequence[float]] = DEFAULT_R,
        u_max: float = 5.0,
        x_limit: float = 10.0,
    ):
        super().__init__(horizon)
        self.A = np.asarray(A, dtype=np.float64)
        self.B = np.asarray(B, dtype=np.float64)
        self.Q = np.asarray(Q, dtype=np.float64)
        self.R = np.asarray(R, dtype=np.float64)
        self.u_max = u_max
        self.x_limit = x_limit

        n, m = self.B.shape
        if self.A.shape != (n, n) or self.Q.shape != (n, n) or self.R.shape != (m, m):
            raise RejectedInputError("Inconsistent LQR matrix shapes")

    @property
    def n_state(self) -> int:
        return self.A.shape[0]

    @property
    def n_action(self) -> int:
        return self.B.shape[1]

    @property
    def spec(self) -> EnvSpec:
        m = self.n_action
        return EnvSpec(self.name, self.n_state, m, (-self.u_max,) * m, (self.u_max,) * m, self.horizon)

    @property
    def reward_bound(self) -> float:
        q_max = float(np.max(np.linalg.eigvalsh(self.Q)))
        r_max = float(np.max(np.linalg.eigvalsh(self.R)))
        return q_max * self.n_state * self.x_limit ** 2 + r_max * self.n_action * self.u_max ** 2

    def _initial(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=self.n_state)

    def _dynamics(self, internal: np.ndarray, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        x = internal
        reward = -(float(x @ self.Q @ x) + float(action @ self.R @ action))
        x_next = self.A @ x + self.B @ action
        terminal = bool(np.max(np.abs(x_next)) > self.x_limit)
        return x_next, reward, terminal


def riccati_finite_horizon(
    A: np.ndarray,
    B: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    horizon: int,
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """
    Backward Riccati recursion with zero terminal cost

    Args:
        A, B, Q, R: System and cost matrices
        horizon: Number of decision steps H

    Returns:
        (gains K_0..K_{H-1}, cost-to-go P_0..P_H); the optimal control is u_t = -K_t x_t
        and the optimal cost from x is x' P_0 x
    """
    P = np.zeros_like(Q)
    gains = []
    costs = [P]
    for _ in range(horizon):
        K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        P = Q + A.T @ P @ (A - B @ K)
        P = 0.5 * (P + P.T)
        gains.append(K)
        costs.append(P)
    gains.reverse()
    costs.reverse()
    return gains, costs


def optimal_return(env: LQR, x0: Optional[np.ndarray] = None) -> float:
    """
    Best achievable return over the env horizon (unconstrained controls)

    Args:
        env: The LQR task
        x0: Initial state; None gives the expectation over the uniform reset box

    Returns:
        Optimal return (a non-positive number)
    """
    _, costs = riccati_finite_horizon(env.A, env.B, env.Q, env.R, env.horizon)
    P0 = costs[0]
    if x0 is None:
        # E[x x'] = I / 3 for x uniform on [-1, 1]^n
        return -float(np.trace(P0)) / 3.0
    x0 = np.asarray(x0, dtype=np.float64)
    return -float(x0 @ P0 @ x0)


def uncontrolled_return(env: LQR, x0: np.ndarray) -> float:
    """Return of the u = 0 rollout from x0, summed in closed form over the horizon"""
    x = np.asarray(x0, dtype=np.float64)
    total = 0.0
    for _ in range(env.horizon):
        total -= float(x @ env.Q @ x)
        x = env.A @ x
    return total


def lqr_stationary_gain(env: LQR) -> np.ndarray:
    """Infinite-horizon gain K from the discrete algebraic Riccati equation"""
    P = scipy.linalg.solve_discrete_are(env.A, env.B, env.Q, env.R)
    return np.linalg.solve(env.R + env.B.T @ P @ env.B, env.B.T @ P @ env.A)
