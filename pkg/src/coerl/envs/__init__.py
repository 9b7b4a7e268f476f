"""Bundled continuous-control environments"""

from typing import Any, Callable, Dict, Optional

from ..config import ENV_NAMES
from ..errors import ConfigurationError
from .base import Environment, EnvSpec, EnvState
from .lqr import LQR, lqr_stationary_gain, optimal_return, riccati_finite_horizon, uncontrolled_return
from .pendulum import Pendulum, angle_normalize
from .point_mass import PointMass
from .quadratic import QuadraticTask, quadratic_fitness_task

_REGISTRY: Dict[str, Callable[..., Environment]] = {
    'point_mass': PointMass,
    'pendulum': Pendulum,
    'lqr': LQR,
    'quadratic': QuadraticTask,
}


def make_env(name: str, horizon: Optional[int] = None, **kwargs: Any) -> Environment:
    """
    Build an environment by name

    Args:
        name: One of point_mass, pendulum, lqr, quadratic
        horizon: Episode length override (ignored by the one-step quadratic task)
        **kwargs: Task-specific options (quadratic needs dim)

    Returns:
        Environment instance
    """
    if name not in _REGISTRY:
        raise ConfigurationError(f"Unknown environment {name!r}; choose from {ENV_NAMES}")
    if name == 'quadratic' and 'dim' not in kwargs:
        raise ConfigurationError("The quadratic task needs dim")
    if horizon is not None and name != 'quadratic':
        kwargs['horizon'] = horizon
    return _REGISTRY[name](**kwargs)


__all__ = [
    'Environment', 'EnvSpec', 'EnvState', 'make_env', 'LQR', 'Pendulum', 'PointMass',
    'QuadraticTask', 'angle_normalize', 'riccati_finite_horizon', 'optimal_return',
    'uncontrolled_return', 'lqr_stationary_gain', 'quadratic_fitness_task',
]
