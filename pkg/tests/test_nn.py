"""Unit tests for the MLP substrate and optimizers"""

import numpy as np
import pytest

from coerl.errors import ContractViolationError, RejectedInputError
from coerl.nn import (
    Adam,
    MlpParams,
    MlpSpec,
    Sgd,
    flatten,
    init_params,
    layer_slices,
    mlp_backward,
    mlp_forward,
    unflatten,
    zeros_params,
)

from tests.helpers import central_difference, relative_error


def test_param_count_and_layout():
    """2 -> 3 -> 1 has (2+1)*3 + (3+1)*1 parameters laid out W1, b1, W2, b2"""
    spec = MlpSpec(2, (3,), 1)
    assert spec.param_count == 13

    (w1, b1), (w2, b2) = layer_slices(spec)
    assert (w1.start, w1.stop) == (0, 6)
    assert (b1.start, b1.stop) == (6, 9)
    assert (w2.start, w2.stop) == (9, 12)
    assert (b2.start, b2.stop) == (12, 13)


def test_zero_network_outputs_zero():
    params = zeros_params(MlpSpec(4, (5, 5), 3))
    out, _ = mlp_forward(params, np.array([1.0, -2.0, 3.0, 0.5]))
    assert np.all(out == 0.0)
    assert np.all(flatten(params) == 0.0)


def test_identity_layer():
    spec = MlpSpec(3, (), 3)
    theta = np.concatenate([np.eye(3).ravel(), np.zeros(3)])
    x = np.array([0.3, -1.2, 4.0])
    out, _ = mlp_forward(MlpParams(spec, theta), x)
    assert np.array_equal(out, x)


def test_forward_matches_straight_line_script(small_params):
    """Hand-written matrix multiply over the documented layout"""
    theta = small_params.theta
    x = np.array([1.0, -1.0])

    hidden = []
    for j in range(3):
        z = theta[6 + j]
        for i in range(2):
            z += x[i] * theta[i * 3 + j]
        hidden.append(np.tanh(z))
    expected = theta[12] + sum(hidden[j] * theta[9 + j] for j in range(3))

    out, _ = mlp_forward(small_params, x)
    assert out.shape == (1,)
    assert out[0] == pytest.approx(expected, abs=1e-12)


def test_backward_zero_cotangent(small_params):
    _, cache = mlp_forward(small_params, np.array([0.5, 0.2]))
    grad, input_grad = mlp_backward(small_params, cache, np.zeros(1))
    assert np.all(grad == 0.0)
    assert np.all(input_grad == 0.0)


def test_backward_single_linear_layer_by_hand(rng):
    """loss = out^2 gives dloss/dtheta = 2 * out * (x || 1)"""
    params = init_params(MlpSpec(2, (), 1), rng)
    x = np.array([0.7, -0.4])
    out, cache = mlp_forward(params, x)
    grad, _ = mlp_backward(params, cache, 2.0 * out)
    expected = 2.0 * out[0] * np.array([x[0], x[1], 1.0])
    np.testing.assert_allclose(grad, expected, rtol=1e-12)


@pytest.mark.parametrize('activation', ['tanh', 'relu'])
def test_backward_matches_finite_differences(activation):
    rng = np.random.default_rng(3)
    spec = MlpSpec(3, (4, 4), 2, activation)
    params = init_params(spec, rng)
    x = rng.standard_normal((5, 3))
    weights = rng.standard_normal((5, 2))

    def loss(theta):
        out, _ = mlp_forward(MlpParams(spec, theta), x)
        return float(np.sum(weights * out))

    _, cache = mlp_forward(params, x)
    grad, _ = mlp_backward(params, cache, weights)
    fd = central_difference(loss, params.theta.copy())
    assert relative_error(grad, fd) < 1e-4


def test_backward_over_random_architectures():
    """100 random (input, hidden, output) triples with every width at most 8"""
    rng = np.random.default_rng(21)
    for _ in range(100):
        depth = int(rng.integers(0, 3))
        spec = MlpSpec(
            int(rng.integers(1, 9)),
            tuple(int(w) for w in rng.integers(1, 9, size=depth)),
            int(rng.integers(1, 9)),
            'tanh',
        )
        params = init_params(spec, rng)
        x = rng.standard_normal((3, spec.input_dim))
        weights = rng.standard_normal((3, spec.output_dim))

        def loss(theta):
            out, _ = mlp_forward(MlpParams(spec, theta), x)
            return float(np.sum(weights * out))

        _, cache = mlp_forward(params, x)
        grad, _ = mlp_backward(params, cache, weights)
        fd = central_difference(loss, params.theta.copy())
        assert relative_error(grad, fd) < 1e-4, spec


def test_input_gradient_matches_finite_differences(small_params):
    x = np.array([0.3, -0.8])
    _, cache = mlp_forward(small_params, x)
    _, input_grad = mlp_backward(small_params, cache, np.ones(1))
    fd = central_difference(lambda v: float(mlp_forward(small_params, v)[0][0]), x)
    assert relative_error(input_grad, fd) < 1e-6


def test_batched_gradient_is_sum_of_rows(small_params):
    x = np.array([[0.1, 0.2], [-0.5, 0.9]])
    _, cache = mlp_forward(small_params, x)
    batch_grad, _ = mlp_backward(small_params, cache, np.ones((2, 1)))

    total = np.zeros_like(batch_grad)
    for row in x:
        _, row_cache = mlp_forward(small_params, row)
        total += mlp_backward(small_params, row_cache, np.ones(1))[0]
    np.testing.assert_allclose(batch_grad, total, rtol=1e-12)


def test_flatten_unflatten_round_trip(small_params):
    restored = unflatten(small_params.spec, flatten(small_params))
    assert np.array_equal(restored.theta, small_params.theta)
    assert restored.theta is not small_params.theta


def test_unflatten_rejects_wrong_length():
    with pytest.raises(RejectedInputError):
        unflatten(MlpSpec(2, (3,), 1), np.zeros(12))


def test_forward_rejects_bad_inputs(small_params):
    with pytest.raises(RejectedInputError):
        mlp_forward(small_params, np.zeros(3))
    with pytest.raises(RejectedInputError):
        mlp_forward(small_params, np.array([np.nan, 0.0]))


def test_backward_rejects_stale_cache(small_params):
    _, cache = mlp_forward(small_params, np.array([0.1, 0.1]))
    changed = MlpParams(small_params.spec, small_params.theta + 1.0)
    with pytest.raises(ContractViolationError):
        mlp_backward(changed, cache, np.ones(1))


def test_invalid_spec_rejected():
    with pytest.raises(RejectedInputError):
        MlpSpec(0, (3,), 1)
    with pytest.raises(RejectedInputError):
        MlpSpec(2, (3,), 1, 'sigmoid')


def test_optimizers_descend_on_a_quadratic():
    target = np.array([1.0, -2.0, 0.5])
    for optimizer in (Sgd(3, 0.1), Adam(3, 0.05)):
        theta = np.zeros(3)
        for _ in range(500):
            theta = optimizer.step(theta, 2.0 * (theta - target))
        np.testing.assert_allclose(theta, target, atol=5e-2)


if __name__ == '__main__':
    pytest.main([__file__])
