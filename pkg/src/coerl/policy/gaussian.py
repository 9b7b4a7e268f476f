"""
Tanh-squashed Gaussian policy
Reparameterized sampling, log-probabilities and their pathwise gradients
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..errors import RejectedInputError
from ..nn.mlp import MlpCache, MlpParams, MlpSpec, init_params, mlp_backward, mlp_forward, unflatten

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6
LOG_2PI = float(np.log(2.0 * np.pi))

ACTION_MODES = ('stochastic', 'deterministic')


@dataclass(eq=False)
class GaussianPolicy:
    """
    Policy pi_theta over actions in (-1, 1)^action_dim

    The trunk maps a state to 2 * action_dim outputs: the Gaussian mean,
    then the unclamped log standard deviation.
    """

    trunk: MlpParams
    action_dim: int

    def __post_init__(self):
        if self.trunk.spec.output_dim != 2 * self.action_dim:
            raise RejectedInputError(
                f"Trunk emits {self.trunk.spec.output_dim} values, "
                f"expected 2 x action_dim = {2 * self.action_dim}"
            )

    @classmethod
    def create(
        cls,
        state_dim: int,
        action_dim: int,
        hidden_dims: Sequence[int],
        rng: np.random.Generator,
        activation: str = 'relu',
    ) -> 'GaussianPolicy':
        """
        Build a randomly initialized policy

        Args:
            state_dim: Observation width
            action_dim: Action width
            hidden_dims: Hidden layer sizes of the trunk
            rng: Random stream for weight init
            activation: Hidden activation

        Returns:
            GaussianPolicy
        """
        spec = MlpSpec(state_dim, tuple(hidden_dims), 2 * action_dim, activation)
        return cls(init_params(spec, rng), action_dim)

    @property
    def spec(self) -> MlpSpec:
        return self.trunk.spec

    @property
    def state_dim(self) -> int:
        return self.trunk.spec.input_dim

    @property
    def theta(self) -> np.ndarray:
        return self.trunk.theta

    def with_theta(self, theta: np.ndarray) -> 'GaussianPolicy':
        """Same architecture bound to another flat vector"""
        return GaussianPolicy(unflatten(self.trunk.spec, theta), self.action_dim)

    def describe(self) -> Dict[str, Any]:
        return {'trunk': self.trunk.spec.to_dict(), 'action_dim': self.action_dim}

    @classmethod
    def from_description(cls, description: Dict[str, Any], theta: np.ndarray) -> 'GaussianPolicy':
        spec = MlpSpec.from_dict(description['trunk'])
        return cls(unflatten(spec, theta), int(description['action_dim']))


@dataclass
class SampleCache:
    """Everything sample_backward needs from a sampling call"""

    trunk_cache: MlpCache
    noise: np.ndarray
    std: np.ndarray
    actions: np.ndarray
    clamp_mask: np.ndarray
    batched: bool


def _head(policy: GaussianPolicy, states: np.ndarray):
    out, cache = mlp_forward(policy.trunk, states)
    out2 = out if out.ndim == 2 else out[None, :]
    mean = out2[:, :policy.action_dim]
    raw_log_std = out2[:, policy.action_dim:]
    log_std = np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX)
    clamp_mask = ((raw_log_std > LOG_STD_MIN) & (raw_log_std < LOG_STD_MAX)).astype(np.float64)
    return mean, log_std, clamp_mask, cache


def _squashed_log_prob(noise: np.ndarray, log_std: np.ndarray, actions: np.ndarray) -> np.ndarray:
    gaussian = -0.5 * noise * noise - log_std - 0.5 * LOG_2PI
    correction = np.log(1.0 - actions * actions + SQUASH_EPS)
    return np.sum(gaussian - correction, axis=1)


def _check_state(policy: GaussianPolicy, states: np.ndarray) -> np.ndarray:
    states = np.asarray(states, dtype=np.float64)
    if states.shape[-1] != policy.state_dim or states.ndim not in (1, 2):
        raise RejectedInputError(f"Expected state width {policy.state_dim}, got shape {states.shape}")
    return states


def sample_actions(
    policy: GaussianPolicy,
    states: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, SampleCache]:
    """
    Reparameterized sampling: u = mean + std * xi, action = tanh(u)

    Args:
        policy: The policy
        states: One state or a (batch, state_dim) matrix
        rng: Source of xi when `noise` is not given
        noise: Explicit xi (zeros give the deterministic mean action)

    Returns:
        (actions, log_probs, cache) with log_probs summed over action dims
    """
    states = _check_state(policy, states)
    batched = states.ndim == 2
    mean, log_std, clamp_mask, trunk_cache = _head(policy, states)
    std = np.exp(log_std)

    if noise is None:
        if rng is None:
            raise RejectedInputError("sample_actions needs either rng or noise")
        noise = rng.standard_normal(mean.shape)
    noise = np.asarray(noise, dtype=np.float64).reshape(mean.shape)

    actions = np.tanh(mean + std * noise)
    log_probs = _squashed_log_prob(noise, log_std, actions)

    cache = SampleCache(trunk_cache, noise, std, actions, clamp_mask, batched)
    if batched:
        return actions, log_probs, cache
    return actions[0], log_probs[0], cache


def sample_backward(
    policy: GaussianPolicy,
    cache: SampleCache,
    action_grad: np.ndarray,
    log_prob_grad: np.ndarray,
) -> np.ndarray:
    """
    Pathwise gradient of an objective J(action, log_prob) w.r.t. theta

    Args:
        policy: The policy used by the sampling call
        cache: SampleCache of that call
        action_grad: dJ/daction, same batching as the actions
        log_prob_grad: dJ/dlog_prob, one value per sample

    Returns:
        Gradient over the flat parameter vector
    """
    a = cache.actions
    g_a = np.asarray(action_grad, dtype=np.float64).reshape(a.shape)
    g_lp = np.asarray(log_prob_grad, dtype=np.float64).reshape(a.shape[0], 1)

    one_minus = 1.0 - a * a
    # d/du of -log(1 - tanh(u)^2 + eps)
    correction_grad = 2.0 * a * one_minus / (one_minus + SQUASH_EPS)
    g_u = g_a * one_minus + g_lp * correction_grad

    g_mean = g_u
    g_log_std = (g_u * cache.std * cache.noise - g_lp) * cache.clamp_mask
    out_grad = np.concatenate([g_mean, g_log_std], axis=1)
    if not cache.batched:
        out_grad = out_grad[0]

    param_grad, _ = mlp_backward(policy.trunk, cache.trunk_cache, out_grad)
    return param_grad


def act(
    policy: GaussianPolicy,
    state: np.ndarray,
    mode: str = 'stochastic',
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, float]:
    """
    Choose an action for one state

    Args:
        policy: The policy
        state: Observation vector
        mode: 'stochastic' draws xi ~ N(0, I); 'deterministic' returns tanh(mean)
        rng: Random stream (stochastic mode)

    Returns:
        (action in (-1, 1)^d, log_prob)
    """
    if mode not in ACTION_MODES:
        raise RejectedInputError(f"Unknown action mode {mode!r}")
    state = _check_state(policy, state)
    if state.ndim != 1:
        raise RejectedInputError("act expects a single state vector")

    if mode == 'deterministic':
        actions, log_probs, _ = sample_actions(policy, state, noise=np.zeros(policy.action_dim))
    else:
        actions, log_probs, _ = sample_actions(policy, state, rng=rng)
    return actions, float(log_probs)


def policy_entropy_term(
    policy: GaussianPolicy,
    state: np.ndarray,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, float]:
    """Stochastic sample shared by the soft target and the actor objective"""
    return act(policy, state, 'stochastic', rng)


def log_prob(policy: GaussianPolicy, state: np.ndarray, action: np.ndarray) -> float:
    """
    Log-density of a given squashed action

    Args:
        policy: The policy
        state: Observation vector
        action: Action strictly inside (-1, 1)^d

    Returns:
        log pi(action | state)
    """
    state = _check_state(policy, state)
    action = np.asarray(action, dtype=np.float64).reshape(1, policy.action_dim)
    if np.any(np.abs(action) >= 1.0):
        raise RejectedInputError("Squashed actions must lie strictly inside (-1, 1)")

    mean, log_std, _, _ = _head(policy, state)
    noise = (np.arctanh(action) - mean) / np.exp(log_std)
    return float(_squashed_log_prob(noise, log_std, action)[0])
