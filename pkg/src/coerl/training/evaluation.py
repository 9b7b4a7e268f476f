"""
Policy evaluation module
Deterministic evaluation episodes and state-visitation trace export from checkpoints
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..envs import Environment, make_env
from ..errors import RejectedInputError
from ..policy.gaussian import GaussianPolicy, act
from ..utils.logger import setup_logger
from ..utils.storage import Checkpoint, read_checkpoint

logger = setup_logger(__name__)

CheckpointLike = Union[Checkpoint, Path, str]


@dataclass
class EvalStats:
    """Summary of evaluation returns"""

    returns: List[float]
    env_steps: int = 0
    mean: float = field(init=False)
    std: float = field(init=False)
    min: float = field(init=False)
    max: float = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.returns, dtype=np.float64)
        self.mean = float(values.mean())
        self.std = float(values.std())
        self.min = float(values.min())
        self.max = float(values.max())

    def to_record(self) -> Dict[str, Any]:
        return {
            'episodes': len(self.returns),
            'mean': self.mean,
            'std': self.std,
            'min': self.min,
            'max': self.max,
            'env_steps': self.env_steps,
        }


@dataclass
class Episode:
    """Everything observed during one rollout"""

    reset_seed: int
    observations: List[List[float]]
    internal_states: List[List[float]]
    actions: List[List[float]]  # environment-space actions
    rewards: List[float]

    @property
    def total_return(self) -> float:
        return float(sum(self.rewards))

    @property
    def length(self) -> int:
        return len(self.actions)


def make_checkpoint(
    policy: GaussianPolicy,
    env_name: str,
    env_kwargs: Dict[str, Any],
    generation: int,
    stage: int = 0,
    config_hash: str = '',
) -> Checkpoint:
    """Package a policy snapshot with everything needed to rebuild it"""
    header = {
        'policy': policy.describe(),
        'env_name': env_name,
        'env_kwargs': env_kwargs,
        'generation': generation,
        'stage': stage,
        'config_hash': config_hash,
    }
    return Checkpoint(header=header, theta=policy.theta.copy())


def load_checkpoint(checkpoint: CheckpointLike) -> Checkpoint:
    if isinstance(checkpoint, Checkpoint):
        return checkpoint
    return read_checkpoint(Path(checkpoint))


def policy_from_checkpoint(checkpoint: CheckpointLike) -> GaussianPolicy:
    checkpoint = load_checkpoint(checkpoint)
    return GaussianPolicy.from_description(checkpoint.header['policy'], checkpoint.theta)


def env_from_checkpoint(checkpoint: CheckpointLike) -> Environment:
    checkpoint = load_checkpoint(checkpoint)
    return make_env(checkpoint.header['env_name'], **checkpoint.header.get('env_kwargs', {}))


def _check_compatible(policy: GaussianPolicy, env: Environment) -> None:
    spec = env.spec
    if policy.state_dim != spec.state_dim or policy.action_dim != spec.action_dim:
        raise RejectedInputError(
            f"Policy expects state/action dims {policy.state_dim}/{policy.action_dim}, "
            f"{spec.name} provides {spec.state_dim}/{spec.action_dim}"
        )


def run_episode(
    env: Environment,
    policy: GaussianPolicy,
    reset_seed: int,
    mode: str = 'deterministic',
    rng: Optional[np.random.Generator] = None,
) -> Episode:
    """
    Roll out one full episode and record it

    Args:
        env: Environment instance
        policy: Policy to run
        reset_seed: Seed of the initial state
        mode: Action mode
        rng: Action noise stream (stochastic mode)

    Returns:
        Episode record
    """
    env.bind_parameters(policy.theta)
    state = env.reset(seed=reset_seed)
    episode = Episode(reset_seed, [state.observation.tolist()], [state.internal.tolist()], [], [])
    while not state.done:
        action, _ = act(policy, state.observation, mode, rng)
        env_action = env.rescale_action(action)
        state, reward, _ = env.step(state, env_action)
        episode.actions.append(env_action.tolist())
        episode.rewards.append(reward)
        episode.observations.append(state.observation.tolist())
        episode.internal_states.append(state.internal.tolist())
    return episode


def evaluate_returns(
    policy: GaussianPolicy,
    env: Environment,
    episodes: int,
    rng: np.random.Generator,
) -> EvalStats:
    """Deterministic-action returns over `episodes` seeded resets"""
    _check_compatible(policy, env)
    returns = []
    steps = 0
    for _ in range(episodes):
        episode = run_episode(env, policy, int(rng.integers(0, 2 ** 31 - 1)))
        returns.append(episode.total_return)
        steps += episode.length
    return EvalStats(returns=returns, env_steps=steps)


def evaluate_policy(
    checkpoint: CheckpointLike,
    env: Environment,
    episodes: int = 5,
    seed: int = 0,
) -> EvalStats:
    """
    Evaluate a checkpoint with deterministic actions

    Args:
        checkpoint: Checkpoint object or file path
        env: Environment to evaluate on
        episodes: Number of episodes
        seed: Seed of the reset draws

    Returns:
        EvalStats with mean/std/min/max returns

    Raises:
        RejectedInputError: if the checkpoint's policy does not fit the env
    """
    if episodes < 1:
        raise RejectedInputError("episodes must be >= 1")
    policy = policy_from_checkpoint(checkpoint)
    stats = evaluate_returns(policy, env, episodes, np.random.default_rng(seed))
    logger.info(f"Evaluated {episodes} episodes on {env.name}: mean={stats.mean:.3f} std={stats.std:.3f}")
    return stats


def export_traces(
    checkpoints: Sequence[CheckpointLike],
    env: Environment,
    seed: int = 0,
) -> List[Dict[str, Any]]:
    """
    One deterministic episode per checkpoint, from the same initial state

    Traces carry generation and subproblem-stage tags so the behaviour of
    successive snapshots can be compared offline.

    Args:
        checkpoints: Snapshots sharing one policy architecture
        env: Environment to roll out on
        seed: Reset seed shared by all traces

    Returns:
        List of JSON-serializable trace records
    """
    loaded = [load_checkpoint(c) for c in checkpoints]
    if not loaded:
        return []
    reference = loaded[0].header['policy']
    if any(c.header['policy'] != reference for c in loaded):
        raise RejectedInputError("All checkpoints must share one policy spec")

    traces = []
    for checkpoint in loaded:
        policy = policy_from_checkpoint(checkpoint)
        _check_compatible(policy, env)
        episode = run_episode(env, policy, seed)
        traces.append({
            'env': env.name,
            'generation': checkpoint.generation,
            'stage': checkpoint.stage,
            'reset_seed': episode.reset_seed,
            'length': episode.length,
            'return': episode.total_return,
            'observations': episode.observations,
            'internal_states': episode.internal_states,
            'actions': episode.actions,
            'rewards': episode.rewards,
        })
    return traces
