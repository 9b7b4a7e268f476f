"""
Soft actor-critic learner
Soft targets, twin-critic regression and entropy-regularized actor ascent over the replay buffer
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Tuple

import numpy as np

from ..envs.base import Environment
from ..errors import BufferNotReadyError, ConfigurationError
from ..nn.mlp import MlpParams, mlp_backward
from ..nn.optim import make_optimizer
from ..policy.critics import CriticPair, critic_input, q_forward, q_value
from ..policy.gaussian import GaussianPolicy, act, sample_actions, sample_backward
from ..utils.logger import setup_logger
from .replay_buffer import ReplayBuffer, Transition, TransitionBatch

logger = setup_logger(__name__)


@dataclass(eq=False)
class LearnerState:
    """Actor, twin critics, their targets and optimizer state"""

    policy: GaussianPolicy
    critics: CriticPair
    target_critics: CriticPair
    alpha_s: float = 0.2
    gamma: float = 0.99
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    polyak_tau: float = 0.005
    use_target_critics: bool = True
    optimizer: str = 'adam'
    actor_opt: Any = field(init=False)
    q1_opt: Any = field(init=False)
    q2_opt: Any = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.alpha_s < 0:
            raise ConfigurationError(f"alpha_s must be >= 0, got {self.alpha_s}")
        if not 0.0 < self.polyak_tau <= 1.0:
            raise ConfigurationError(f"polyak_tau must lie in (0, 1], got {self.polyak_tau}")
        self.actor_opt = make_optimizer(self.optimizer, self.policy.theta.size, self.lr_actor)
        self.q1_opt = make_optimizer(self.optimizer, self.critics.q1.theta.size, self.lr_critic)
        self.q2_opt = make_optimizer(self.optimizer, self.critics.q2.theta.size, self.lr_critic)

    @classmethod
    def create(
        cls,
        policy: GaussianPolicy,
        hidden_dims: Sequence[int],
        rng: np.random.Generator,
        activation: str = 'relu',
        **hyperparameters: Any,
    ) -> 'LearnerState':
        """
        Build a learner around an existing policy with fresh critics

        Args:
            policy: The actor (shared with the evolution phase)
            hidden_dims: Critic hidden layer sizes
            rng: Random stream for critic init
            activation: Critic hidden activation
            **hyperparameters: Remaining LearnerState fields

        Returns:
            LearnerState whose target critics are copies of the critics
        """
        critics = CriticPair.create(policy.state_dim, policy.action_dim, hidden_dims, rng, activation)
        return cls(policy=policy, critics=critics, target_critics=critics.copy(), **hyperparameters)

    def set_policy_theta(self, theta: np.ndarray) -> None:
        self.policy = self.policy.with_theta(theta)


@dataclass
class RLPhaseStats:
    """Means over the RL steps of one phase; None when no step ran"""

    steps: int = 0
    skipped: int = 0
    critic_loss1: Optional[float] = None
    critic_loss2: Optional[float] = None
    actor_objective: Optional[float] = None
    entropy: Optional[float] = None
    buffer_size: int = 0


def soft_target(
    rewards: np.ndarray,
    dones: np.ndarray,
    q1_next: np.ndarray,
    q2_next: np.ndarray,
    next_log_probs: np.ndarray,
    gamma: float,
    alpha_s: float,
) -> np.ndarray:
    """
    y = r + gamma * (min(q1', q2') - alpha_s * log pi(a'|s')), and y = r where done

    Returns:
        Targets, one per item
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    soft_value = np.minimum(q1_next, q2_next) - alpha_s * np.asarray(next_log_probs, dtype=np.float64)
    return np.where(np.asarray(dones, dtype=bool), rewards, rewards + gamma * soft_value)


def compute_target(batch: TransitionBatch, learner: LearnerState, rng: np.random.Generator) -> np.ndarray:
    """
    Soft targets with a' freshly sampled from the current policy

    Uses the target critics, or the online critics when target critics are disabled.
    """
    next_actions, next_log_probs, _ = sample_actions(learner.policy, batch.next_states, rng=rng)
    critics = learner.target_critics if learner.use_target_critics else learner.critics
    q1_next, q2_next = q_value(critics, batch.next_states, next_actions)
    return soft_target(batch.rewards, batch.dones, q1_next, q2_next, next_log_probs,
                       learner.gamma, learner.alpha_s)


def critic_loss_and_grad(params: MlpParams, inputs: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Mean squared error (1/B) sum (Q(s,a) - y)^2 and its gradient; y is a constant

    Args:
        params: One critic
        inputs: (batch, state+action) matrix
        targets: (batch,) regression targets

    Returns:
        (loss, gradient over the critic's flat vector)
    """
    q, cache = q_forward(params, inputs)
    residual = q - targets
    loss = float(np.mean(residual * residual))
    grad, _ = mlp_backward(params, cache, (2.0 * residual / residual.size)[:, None])
    return loss, grad


def critic_step(learner: LearnerState, batch: TransitionBatch, targets: np.ndarray) -> Tuple[float, float]:
    """
    One descent step on each critic

    Returns:
        (loss1, loss2) measured before the step
    """
    inputs = critic_input(learner.critics, batch.states, batch.actions)
    targets = np.asarray(targets, dtype=np.float64)
    critics = learner.critics

    loss1, grad1 = critic_loss_and_grad(critics.q1, inputs, targets)
    loss2, grad2 = critic_loss_and_grad(critics.q2, inputs, targets)

    q1 = MlpParams(critics.q1.spec, learner.q1_opt.step(critics.q1.theta, grad1))
    q2 = MlpParams(critics.q2.spec, learner.q2_opt.step(critics.q2.theta, grad2))
    learner.critics = CriticPair(q1, q2, critics.state_dim)
    return loss1, loss2


def actor_objective_and_grad(
    policy: GaussianPolicy,
    critics: CriticPair,
    states: np.ndarray,
    noise: np.ndarray,
    alpha_s: float,
) -> Tuple[float, np.ndarray, float]:
    """
    J = (1/B) sum (min_j Q_j(s, a~) - alpha_s * log pi(a~|s)) with a~ reparameterized by `noise`

    Critic parameters are treated as constants.

    Returns:
        (J, dJ/dtheta, entropy estimate -mean log pi)
    """
    actions, log_probs, sample_cache = sample_actions(policy, states, noise=noise)
    inputs = critic_input(critics, states, actions)
    q1, cache1 = q_forward(critics.q1, inputs)
    q2, cache2 = q_forward(critics.q2, inputs)

    batch_size = q1.size
    objective = float(np.mean(np.minimum(q1, q2) - alpha_s * log_probs))

    pick_first = (q1 <= q2).astype(np.float64)
    _, input_grad1 = mlp_backward(critics.q1, cache1, (pick_first / batch_size)[:, None])
    _, input_grad2 = mlp_backward(critics.q2, cache2, ((1.0 - pick_first) / batch_size)[:, None])
    action_grad = (input_grad1 + input_grad2)[:, critics.state_dim:]
    log_prob_grad = np.full(batch_size, -alpha_s / batch_size)

    grad = sample_backward(policy, sample_cache, action_grad, log_prob_grad)
    return objective, grad, float(-np.mean(log_probs))


def actor_step(learner: LearnerState, batch: TransitionBatch, rng: np.random.Generator) -> Tuple[float, float]:
    """
    One ascent step on the entropy-regularized objective; critics stay fixed

    Returns:
        (objective before the step, entropy estimate)
    """
    noise = rng.standard_normal((len(batch), learner.policy.action_dim))
    objective, grad, entropy = actor_objective_and_grad(
        learner.policy, learner.critics, batch.states, noise, learner.alpha_s
    )
    learner.set_policy_theta(learner.actor_opt.step(learner.policy.theta, -grad))
    return objective, entropy


def polyak_update(target: CriticPair, online: CriticPair, tau: float) -> CriticPair:
    """
    target <- (1 - tau) * target + tau * online, elementwise

    Raises:
        ConfigurationError: unless 0 < tau <= 1
    """
    if not 0.0 < tau <= 1.0:
        raise ConfigurationError(f"polyak tau must lie in (0, 1], got {tau}")
    if tau == 1.0:
        return online.copy()
    q1 = MlpParams(target.q1.spec, (1.0 - tau) * target.q1.theta + tau * online.q1.theta)
    q2 = MlpParams(target.q2.spec, (1.0 - tau) * target.q2.theta + tau * online.q2.theta)
    return CriticPair(q1, q2, target.state_dim)


def rl_phase(
    learner: LearnerState,
    buffer: ReplayBuffer,
    steps: int,
    batch_size: int,
    rng: np.random.Generator,
) -> Tuple[LearnerState, RLPhaseStats]:
    """
    Run `steps` iterations of sample, target, critic step, actor step, polyak update

    Stops early without error when the buffer cannot fill a batch.

    Returns:
        (the updated learner, phase statistics)
    """
    losses1, losses2, objectives, entropies = [], [], [], []
    skipped = 0

    for i in range(steps):
        try:
            batch = buffer.sample(batch_size, rng)
        except BufferNotReadyError as e:
            skipped = steps - i
            logger.info(f"Skipping {skipped} RL steps: {e}")
            break

        targets = compute_target(batch, learner, rng)
        loss1, loss2 = critic_step(learner, batch, targets)
        objective, entropy = actor_step(learner, batch, rng)
        if learner.use_target_critics:
            learner.target_critics = polyak_update(learner.target_critics, learner.critics, learner.polyak_tau)

        losses1.append(loss1)
        losses2.append(loss2)
        objectives.append(objective)
        entropies.append(entropy)

    stats = RLPhaseStats(steps=len(losses1), skipped=skipped, buffer_size=len(buffer))
    if losses1:
        stats.critic_loss1 = float(np.mean(losses1))
        stats.critic_loss2 = float(np.mean(losses2))
        stats.actor_objective = float(np.mean(objectives))
        stats.entropy = float(np.mean(entropies))
    return learner, stats


def collect_episodes(
    env_factory: Callable[[], Environment],
    policy: GaussianPolicy,
    episodes: int,
    buffer: ReplayBuffer,
    rng: np.random.Generator,
    mode: str = 'stochastic',
) -> int:
    """
    Roll out the learner's own policy and push every transition

    Used when the evolution phase is switched off.

    Returns:
        Number of env steps collected
    """
    env = env_factory()
    env.bind_parameters(policy.theta)
    steps = 0
    for _ in range(episodes):
        state = env.reset(seed=int(rng.integers(0, 2 ** 31 - 1)))
        trajectory = []
        while not state.done:
            action, _ = act(policy, state.observation, mode, rng)
            next_state, reward, terminal = env.step(state, env.rescale_action(action))
            trajectory.append(Transition(state.observation, action, reward, next_state.observation, terminal))
            state = next_state
        steps += buffer.extend(trajectory)
    return steps
