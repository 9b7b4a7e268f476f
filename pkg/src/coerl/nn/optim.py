"""
Optimizers over flat parameter vectors
Both follow the descent convention: step(theta, grad) moves against grad
"""

import numpy as np

from ..errors import ConfigurationError


class Sgd:
    """Plain gradient descent"""

    def __init__(self, size: int, lr: float):
        self.size = size
        self.lr = lr

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return theta - self.lr * grad


class Adam:
    """Adam with bias correction; moment state lives on the instance"""

    def __init__(self, size: int, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.size = size
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size, dtype=np.float64)
        self.v = np.zeros(size, dtype=np.float64)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(name: str, size: int, lr: float):
    """
    Build an optimizer by name

    Args:
        name: 'adam' or 'sgd'
        size: Length of the parameter vector
        lr: Learning rate

    Returns:
        Optimizer instance
    """
    if name == 'adam':
        return Adam(size, lr)
    if name == 'sgd':
        return Sgd(size, lr)
    raise ConfigurationError(f"Unknown optimizer {name!r}")
