"""
Error types
Exception hierarchy shared by every CoERL module
"""

from typing import Optional


class CoERLError(Exception):
    """Base class for all CoERL errors"""


class RejectedInputError(CoERLError, ValueError):
    """Input with the wrong shape, length or range"""


class ConfigurationError(CoERLError, ValueError):
    """Invalid hyperparameter or configuration value"""


class ContractViolationError(CoERLError, RuntimeError):
    """A caller broke an operation's precondition (stale cache, done env, ...)"""


class BufferNotReadyError(CoERLError):
    """Replay buffer holds fewer items than the requested batch"""

    def __init__(self, size: int, batch_size: int):
        self.size = size
        self.batch_size = batch_size
        super().__init__(f"Replay buffer has {size} items, batch of {batch_size} requested")


class EvaluationError(CoERLError):
    """Rollout failure; carries the step index where the environment faulted"""

    def __init__(self, message: str, step_index: Optional[int] = None):
        self.step_index = step_index
        suffix = f" (step {step_index})" if step_index is not None else ""
        super().__init__(f"{message}{suffix}")
