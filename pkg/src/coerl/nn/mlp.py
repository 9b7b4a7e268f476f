"""
Multilayer perceptron module
Dense layers over flat float64 parameter vectors with explicit forward and backward passes
"""

import hashlib
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from ..errors import ContractViolationError, RejectedInputError

ACTIVATIONS = ('relu', 'tanh')


@dataclass(frozen=True)
class MlpSpec:
    """
    Shape of a fully connected network

    Hidden layers use `activation`; the output layer is always linear.
    An empty `hidden_dims` gives a single affine map.
    """

    input_dim: int
    hidden_dims: Tuple[int, ...]
    output_dim: int
    activation: str = 'relu'

    def __post_init__(self):
        object.__setattr__(self, 'hidden_dims', tuple(int(h) for h in self.hidden_dims))
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(int(d) < 1 for d in dims):
            raise RejectedInputError(f"All layer sizes must be >= 1, got {dims}")
        if self.activation not in ACTIVATIONS:
            raise RejectedInputError(f"Unknown activation {self.activation!r}")

    @property
    def layer_shapes(self) -> List[Tuple[int, int]]:
        """(fan_in, fan_out) per layer, input to output"""
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        return list(zip(dims[:-1], dims[1:]))

    @property
    def param_count(self) -> int:
        return sum((fan_in + 1) * fan_out for fan_in, fan_out in self.layer_shapes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'input_dim': self.input_dim,
            'hidden_dims': list(self.hidden_dims),
            'output_dim': self.output_dim,
            'activation': self.activation,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MlpSpec':
        return cls(
            input_dim=int(data['input_dim']),
            hidden_dims=tuple(data['hidden_dims']),
            output_dim=int(data['output_dim']),
            activation=data.get('activation', 'relu'),
        )


def layer_slices(spec: MlpSpec) -> List[Tuple[slice, slice]]:
    """
    Index ranges of each layer inside the flat vector

    The vector is W1, b1, W2, b2, ... where W_k is stored row-major with
    shape (fan_in, fan_out) and b_k has length fan_out.

    Args:
        spec: Network shape

    Returns:
        List of (weight slice, bias slice)
    """
    slices = []
    offset = 0
    for fan_in, fan_out in spec.layer_shapes:
        w = slice(offset, offset + fan_in * fan_out)
        offset = w.stop
        b = slice(offset, offset + fan_out)
        offset = b.stop
        slices.append((w, b))
    return slices


@dataclass(eq=False)
class MlpParams:
    """A network shape bound to its flat parameter vector theta"""

    spec: MlpSpec
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.ndim != 1 or self.theta.size != self.spec.param_count:
            raise RejectedInputError(
                f"Parameter vector of length {self.theta.size} does not match "
                f"spec count {self.spec.param_count}"
            )

    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(W, b) views into theta, W shaped (fan_in, fan_out)"""
        views = []
        for (fan_in, fan_out), (w, b) in zip(self.spec.layer_shapes, layer_slices(self.spec)):
            views.append((self.theta[w].reshape(fan_in, fan_out), self.theta[b]))
        return views

    def copy(self) -> 'MlpParams':
        return MlpParams(self.spec, self.theta.copy())


@dataclass
class MlpCache:
    """Activation record of one forward call, consumed by mlp_backward"""

    spec: MlpSpec
    fingerprint: str
    activations: List[np.ndarray]  # input to each layer
    pre_activations: List[np.ndarray]  # hidden pre-activations
    batched: bool
    batch_size: int = field(default=1)


def _fingerprint(theta: np.ndarray) -> str:
    return hashlib.blake2b(theta.tobytes(), digest_size=8).hexdigest()


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == 'relu':
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activation_grad(name: str, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    if name == 'relu':
        return (z > 0.0).astype(np.float64)
    return 1.0 - h * h


def init_params(spec: MlpSpec, rng: np.random.Generator) -> MlpParams:
    """
    Draw initial parameters: weights uniform in +-1/sqrt(fan_in), biases zero

    Args:
        spec: Network shape
        rng: Random stream

    Returns:
        Fresh MlpParams
    """
    theta = np.zeros(spec.param_count, dtype=np.float64)
    for (fan_in, fan_out), (w, _) in zip(spec.layer_shapes, layer_slices(spec)):
        bound = 1.0 / np.sqrt(fan_in)
        theta[w] = rng.uniform(-bound, bound, size=fan_in * fan_out)
    return MlpParams(spec, theta)


def zeros_params(spec: MlpSpec) -> MlpParams:
    """All-zero parameters (zero network)"""
    return MlpParams(spec, np.zeros(spec.param_count, dtype=np.float64))


def flatten(params: MlpParams) -> np.ndarray:
    """Copy of the flat parameter vector"""
    return params.theta.copy()


def unflatten(spec: MlpSpec, vector: np.ndarray) -> MlpParams:
    """
    Bind a flat vector to a spec

    Raises:
        RejectedInputError: if the length does not match the MlpSpec parameter count
    """
    return MlpParams(spec, np.array(vector, dtype=np.float64, copy=True))


def mlp_forward(params: MlpParams, x: np.ndarray) -> Tuple[np.ndarray, MlpCache]:
    """
    Forward pass

    Args:
        params: Network parameters
        x: Input vector (input_dim,) or batch (batch, input_dim)

    Returns:
        Output with matching batching, and the cache for mlp_backward
    """
    spec = params.spec
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 2
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise RejectedInputError(f"Expected input of width {spec.input_dim}, got shape {np.shape(x)}")
    if not np.all(np.isfinite(x)):
        raise RejectedInputError("Input contains NaN or Inf")

    layers = params.layers()
    activations = [x]
    pre_activations = []
    h = x
    for k, (W, b) in enumerate(layers):
        z = h @ W + b
        if k < len(layers) - 1:
            pre_activations.append(z)
            h = _activate(spec.activation, z)
            activations.append(h)
        else:
            h = z

    if not np.all(np.isfinite(h)):
        raise ContractViolationError("Forward pass produced a non-finite output")

    cache = MlpCache(
        spec=spec,
        fingerprint=_fingerprint(params.theta),
        activations=activations,
        pre_activations=pre_activations,
        batched=batched,
        batch_size=x.shape[0],
    )
    return (h if batched else h[0]), cache


def mlp_backward(params: MlpParams, cache: MlpCache, output_grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Backward pass through the graph recorded in `cache`

    For a batch the parameter gradient is summed over rows.

    Args:
        params: The parameters used in the matching forward call
        cache: Activation record from mlp_forward
        output_grad: dLoss/dOutput, same batching as the forward output

    Returns:
        (param_grad over the flat vector, input_grad)
    """
    spec = params.spec
    if cache.spec != spec or cache.fingerprint != _fingerprint(params.theta):
        raise ContractViolationError("Cache does not belong to these parameters")

    g = np.asarray(output_grad, dtype=np.float64)
    if not cache.batched:
        g = g[None, :] if g.ndim == 1 else g
    if g.shape != (cache.batch_size, spec.output_dim):
        raise RejectedInputError(
            f"Expected output gradient of shape {(cache.batch_size, spec.output_dim)}, got {g.shape}"
        )

    param_grad = np.zeros(spec.param_count, dtype=np.float64)
    layers = params.layers()
    slices = layer_slices(spec)
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        w_slice, b_slice = slices[k]
        a_in = cache.activations[k]
        param_grad[w_slice] = (a_in.T @ g).ravel()
        param_grad[b_slice] = g.sum(axis=0)
        g = g @ W.T
        if k > 0:
            g = g * _activation_grad(spec.activation, cache.pre_activations[k - 1], cache.activations[k])

    return param_grad, (g if cache.batched else g[0])
