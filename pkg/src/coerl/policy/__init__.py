"""Actor and critics"""

from .gaussian import (
    GaussianPolicy,
    SampleCache,
    act,
    policy_entropy_term,
    log_prob,
    sample_actions,
    sample_backward,
)
from .critics import CriticPair, critic_input, q_forward, q_value

__all__ = [
    'GaussianPolicy', 'SampleCache', 'act', 'policy_entropy_term', 'log_prob',
    'sample_actions', 'sample_backward', 'CriticPair', 'critic_input', 'q_forward', 'q_value',
]
