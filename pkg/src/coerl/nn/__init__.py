"""Dense-tensor and multilayer-perceptron substrate"""

from .mlp import (
    MlpSpec,
    MlpParams,
    MlpCache,
    init_params,
    zeros_params,
    flatten,
    unflatten,
    layer_slices,
    mlp_forward,
    mlp_backward,
)
from .optim import Adam, Sgd, make_optimizer

__all__ = [
    'MlpSpec', 'MlpParams', 'MlpCache', 'init_params', 'zeros_params', 'flatten',
    'unflatten', 'layer_slices', 'mlp_forward', 'mlp_backward', 'Adam', 'Sgd', 'make_optimizer',
]
