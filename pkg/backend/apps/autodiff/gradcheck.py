"""
Finite-difference checks of the backward rules.

gradient_check compares the analytic gradient of sum(f(inputs) * R), R a fixed
random array, with central differences. op_suite() runs the check over every
differentiable op on small random tensors; adjoint_error() checks that
conv_transpose2d is the adjoint of conv2d.
"""
import logging
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from . import ops
from .tensor import Tensor, add, concat, getitem, mul, reshape, sub, tsum

logger = logging.getLogger(__name__)

FD_EPSILON = 1e-5
GRAD_TOLERANCE = 1e-4
ADJOINT_TOLERANCE = 1e-10


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max|a - n| / max(max|a|, max|n|, 1e-12)."""
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def gradient_check(fn: Callable[..., Tensor], inputs: Sequence[Tensor], eps: float = FD_EPSILON,
                   seed: int = 0) -> float:
    """
    Worst relative gradient error of fn over its inputs.

    Args:
        fn: Function of the input tensors returning a tensor
        inputs: Tensors with requires_grad=True; their data is perturbed in place
            and restored
        eps: Central-difference step
        seed: Seed of the random projection R

    Returns:
        float: Max over inputs of relative_error(analytic, numeric)
    """
    out = fn(*inputs)
    projection = np.random.default_rng(seed).standard_normal(out.shape)

    def loss_value() -> float:
        return float(np.sum(fn(*inputs).data * projection))

    for t in inputs:
        t.grad = None
    loss = tsum(mul(fn(*inputs), Tensor(projection)))
    loss.backward()

    worst = 0.0
    for t in inputs:
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        numeric = np.zeros_like(t.data)
        t.data = np.ascontiguousarray(t.data)
        flat = t.data.reshape(-1)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + eps
            plus = loss_value()
            flat[k] = original - eps
            minus = loss_value()
            flat[k] = original
            numeric.reshape(-1)[k] = (plus - minus) / (2.0 * eps)
        worst = max(worst, relative_error(analytic, numeric))
    return worst


def _leaf(rng: np.random.Generator, *shape, away_from_zero: bool = False) -> Tensor:
    data = rng.standard_normal(shape)
    if away_from_zero:
        data += np.sign(data) * 0.1
    return Tensor(data, requires_grad=True)


def _cases(rng: np.random.Generator) -> List[Tuple[str, Callable[..., Tensor], List[Tensor]]]:
    running_mean, running_var = np.zeros(3), np.ones(3)

    def lstm_h(x, h, c, wx, wh, b):
        return ops.lstm_cell(x, h, c, wx, wh, b)[0]

    def lstm_c(x, h, c, wx, wh, b):
        return ops.lstm_cell(x, h, c, wx, wh, b)[1]

    lstm_inputs = [_leaf(rng, 2, 3), _leaf(rng, 2, 4), _leaf(rng, 2, 4),
                   _leaf(rng, 3, 16), _leaf(rng, 4, 16), _leaf(rng, 16)]
    return [
        ('add', add, [_leaf(rng, 3, 4), _leaf(rng, 4)]),
        ('sub', sub, [_leaf(rng, 3, 4), _leaf(rng, 3, 4)]),
        ('mul', mul, [_leaf(rng, 3, 4), _leaf(rng, 3, 1)]),
        ('sum', lambda x: tsum(x, axis=1), [_leaf(rng, 3, 4)]),
        ('mean', lambda x: x.mean(), [_leaf(rng, 3, 4)]),
        ('reshape', lambda x: reshape(x, (2, 6)), [_leaf(rng, 3, 4)]),
        ('getitem', lambda x: getitem(x, (slice(None), slice(1, 3))), [_leaf(rng, 3, 4)]),
        ('concat', lambda a, b: concat([a, b], axis=1), [_leaf(rng, 2, 3), _leaf(rng, 2, 5)]),
        ('dense', ops.dense, [_leaf(rng, 4, 5), _leaf(rng, 5, 3), _leaf(rng, 3)]),
        ('leaky_relu', lambda x: ops.leaky_relu(x, 0.2), [_leaf(rng, 3, 4, away_from_zero=True)]),
        ('tanh', ops.tanh, [_leaf(rng, 3, 4)]),
        ('sigmoid', ops.sigmoid, [_leaf(rng, 3, 4)]),
        ('softplus', ops.softplus, [_leaf(rng, 3, 4)]),
        ('mse_loss', ops.mse_loss, [_leaf(rng, 3, 4), _leaf(rng, 3, 4)]),
        ('bce_with_logits', lambda x: ops.bce_with_logits(x, 1.0), [_leaf(rng, 6)]),
        ('conv2d', lambda x, k, b: ops.conv2d(x, k, b, stride=2, pad=1),
         [_leaf(rng, 2, 2, 5, 5), _leaf(rng, 3, 2, 3, 3), _leaf(rng, 3)]),
        ('conv_transpose2d', lambda x, k, b: ops.conv_transpose2d(x, k, b, stride=2, pad=1),
         [_leaf(rng, 2, 3, 3, 3), _leaf(rng, 3, 2, 4, 4), _leaf(rng, 2)]),
        ('batchnorm2d_train', lambda x, g, b: ops.batchnorm2d(x, g, b, running_mean, running_var, True),
         [_leaf(rng, 4, 3, 2, 2), _leaf(rng, 3), _leaf(rng, 3)]),
        ('batchnorm2d_eval', lambda x, g, b: ops.batchnorm2d(x, g, b, np.full(3, 0.1), np.full(3, 2.0), False),
         [_leaf(rng, 4, 3, 2, 2), _leaf(rng, 3), _leaf(rng, 3)]),
        ('global_avg_pool', ops.global_avg_pool, [_leaf(rng, 2, 3, 4, 4)]),
        ('lstm_cell_h', lstm_h, lstm_inputs),
        ('lstm_cell_c', lstm_c, lstm_inputs),
    ]


def op_suite(seed: int = 0) -> Dict[str, float]:
    """Relative gradient error of every op, keyed by op name."""
    rng = np.random.default_rng(seed)
    errors = {}
    for name, fn, inputs in _cases(rng):
        errors[name] = gradient_check(fn, inputs, seed=seed)
        logger.debug(f"gradient check {name}: {errors[name]:.2e}")
    return errors


def chained_graph_error(seed: int = 0) -> float:
    """conv -> batchnorm -> leaky ReLU -> dense, checked end to end."""
    rng = np.random.default_rng(seed)
    running_mean, running_var = np.zeros(2), np.ones(2)

    def net(x, k, gamma, beta, w, b):
        h = ops.conv2d(x, k, stride=1, pad=1)
        h = ops.batchnorm2d(h, gamma, beta, running_mean, running_var, True)
        h = ops.leaky_relu(h, 0.2)
        return ops.dense(reshape(h, (h.shape[0], -1)), w, b)

    inputs = [_leaf(rng, 3, 1, 4, 4), _leaf(rng, 2, 1, 3, 3), _leaf(rng, 2), _leaf(rng, 2),
              _leaf(rng, 32, 5), _leaf(rng, 5)]
    return gradient_check(net, inputs, seed=seed)


def adjoint_error(seed: int = 0) -> float:
    """|<conv2d(x), y> - <x, conv_transpose2d(y)>| relative to the inner product size."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2, 3, 8, 8))
    K = rng.standard_normal((4, 3, 4, 4))
    y = rng.standard_normal((2, 4, 4, 4))
    forward = ops.conv2d(Tensor(x), Tensor(K), stride=2, pad=1).data
    adjoint = ops.conv_transpose2d(Tensor(y), Tensor(K), stride=2, pad=1).data
    lhs = float(np.sum(forward * y))
    rhs = float(np.sum(x * adjoint))
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)
