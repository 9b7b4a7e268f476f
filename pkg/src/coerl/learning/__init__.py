"""Off-policy learning from the evolution-collected buffer"""

from .replay_buffer import ReplayBuffer, Transition, TransitionBatch
from .sac import (
    LearnerState,
    RLPhaseStats,
    soft_target,
    compute_target,
    critic_loss_and_grad,
    critic_step,
    actor_objective_and_grad,
    actor_step,
    polyak_update,
    rl_phase,
    collect_episodes,
)

__all__ = [
    'ReplayBuffer', 'Transition', 'TransitionBatch', 'LearnerState', 'RLPhaseStats',
    'soft_target', 'compute_target', 'critic_loss_and_grad', 'critic_step',
    'actor_objective_and_grad', 'actor_step', 'polyak_update', 'rl_phase', 'collect_episodes',
]
