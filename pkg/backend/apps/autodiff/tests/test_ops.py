"""
Tests for the autodiff tensor, its ops and the gradient checker.
"""
import numpy as np
from django.test import SimpleTestCase

from apps.autodiff import ops
from apps.autodiff.gradcheck import (ADJOINT_TOLERANCE, GRAD_TOLERANCE, adjoint_error, chained_graph_error,
                                     gradient_check, op_suite)
from apps.autodiff.tensor import Tensor, make, tsum
from utils.error_handling import NotScalarError, ShapeMismatchError


class ForwardValueTests(SimpleTestCase):
    """Forward values of individual ops."""

    def test_identity_conv(self):
        x = Tensor(np.random.default_rng(0).standard_normal((2, 3, 5, 5)))
        kernel = np.zeros((3, 3, 1, 1))
        kernel[np.arange(3), np.arange(3), 0, 0] = 1.0
        out = ops.conv2d(x, Tensor(kernel), stride=1, pad=0)
        np.testing.assert_array_equal(out.data, x.data)

    def test_leaky_relu_identity_branch(self):
        x = Tensor(np.array([0.0, 0.5, 3.0]))
        np.testing.assert_array_equal(ops.leaky_relu(x, 0.2).data, x.data)
        self.assertAlmostEqual(float(ops.leaky_relu(Tensor(np.array([-1.0])), 0.2).data[0]), -0.2)

    def test_conv_output_shapes(self):
        x = Tensor(np.ones((1, 2, 16, 16)))
        self.assertEqual(ops.conv2d(x, Tensor(np.ones((4, 2, 3, 3))), stride=2, pad=1).shape, (1, 4, 8, 8))
        y = Tensor(np.ones((1, 4, 1, 1)))
        self.assertEqual(ops.conv_transpose2d(y, Tensor(np.ones((4, 2, 4, 4))), stride=2, pad=1).shape,
                         (1, 2, 2, 2))

    def test_mse_loss_value(self):
        a = Tensor(np.full((2, 32), 0.5))
        b = Tensor(np.ones((2, 32)))
        self.assertAlmostEqual(ops.mse_loss(a, b).item(), 0.25)

    def test_sigmoid_stays_finite(self):
        out = ops.sigmoid(Tensor(np.array([-1000.0, 0.0, 1000.0]))).data
        np.testing.assert_allclose(out, [0.0, 0.5, 1.0])

    def test_shape_mismatch_names_both_shapes(self):
        with self.assertRaises(ShapeMismatchError) as ctx:
            ops.mse_loss(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 2))))
        self.assertIn('(2, 3)', str(ctx.exception))
        self.assertIn('(3, 2)', str(ctx.exception))
        with self.assertRaises(ShapeMismatchError):
            ops.dense(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 5))))
        with self.assertRaises(ShapeMismatchError):
            ops.conv2d(Tensor(np.ones((1, 2, 4, 4))), Tensor(np.ones((3, 1, 3, 3))))

    def test_batchnorm_eval_is_pure(self):
        rng = np.random.default_rng(1)
        running_mean, running_var = rng.standard_normal(3), rng.uniform(0.5, 2.0, 3)
        before = running_mean.copy(), running_var.copy()
        x = Tensor(rng.standard_normal((4, 3, 2, 2)))
        gamma, beta = Tensor(np.ones(3)), Tensor(np.zeros(3))
        first = ops.batchnorm2d(x, gamma, beta, running_mean, running_var, False).data
        second = ops.batchnorm2d(x, gamma, beta, running_mean, running_var, False).data
        np.testing.assert_array_equal(first, second)
        np.testing.assert_array_equal(running_mean, before[0])
        np.testing.assert_array_equal(running_var, before[1])

    def test_batchnorm_train_updates_running_stats(self):
        x = Tensor(np.random.default_rng(2).standard_normal((8, 2, 3, 3)) * 3.0 + 1.0)
        running_mean, running_var = np.zeros(2), np.ones(2)
        out = ops.batchnorm2d(x, Tensor(np.ones(2)), Tensor(np.zeros(2)), running_mean, running_var, True)
        np.testing.assert_allclose(out.data.mean(axis=(0, 2, 3)), 0.0, atol=1e-12)
        np.testing.assert_allclose(running_mean, 0.1 * x.data.mean(axis=(0, 2, 3)))
        self.assertTrue(np.all(running_var > 1.0))


class BackwardTests(SimpleTestCase):
    """Tests for Tensor.backward()."""

    def test_sum_gives_ones(self):
        w = Tensor(np.random.default_rng(0).standard_normal((3, 4)), requires_grad=True)
        tsum(w).backward()
        np.testing.assert_array_equal(w.grad, np.ones((3, 4)))

    def test_independent_parameter_gets_zero(self):
        w = Tensor(np.ones(3), requires_grad=True)
        v = Tensor(np.ones(3), requires_grad=True)
        tsum(v * 2.0).backward()
        self.assertTrue(w.grad is None or not np.any(w.grad))

    def test_not_scalar(self):
        w = Tensor(np.ones(3), requires_grad=True)
        with self.assertRaises(NotScalarError):
            (w * 2.0).backward()

    def test_repeated_calls_reproduce_gradients(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.standard_normal((2, 4)))
        w = Tensor(rng.standard_normal((4, 3)), requires_grad=True)

        def loss():
            return ops.mse_loss(ops.tanh(ops.dense(x, w)), Tensor(np.zeros((2, 3))))

        loss().backward()
        first = w.grad.copy()
        w.zero_grad()
        loss().backward()
        np.testing.assert_array_equal(w.grad, first)

    def test_shared_subgraph_accumulates(self):
        w = Tensor(np.array([2.0]), requires_grad=True)
        y = w * w
        tsum(y + y).backward()
        np.testing.assert_allclose(w.grad, [8.0])


class GradientCheckTests(SimpleTestCase):
    """Finite-difference checks of every backward rule."""

    def test_every_op(self):
        errors = op_suite(seed=0)
        for name, error in errors.items():
            with self.subTest(op=name):
                self.assertLess(error, GRAD_TOLERANCE)

    def test_chained_graph(self):
        self.assertLess(chained_graph_error(seed=0), GRAD_TOLERANCE)

    def test_conv_transpose_is_adjoint(self):
        for seed in range(3):
            self.assertLess(adjoint_error(seed), ADJOINT_TOLERANCE)

    def test_wrong_rule_is_caught(self):
        def broken_square(x):
            def backward(g):
                x.grad = g * x.data if x.grad is None else x.grad + g * x.data
            return make(x.data ** 2, (x,), backward, 'broken_square')

        x = Tensor(np.random.default_rng(0).standard_normal(5) + 3.0, requires_grad=True)
        self.assertGreater(gradient_check(broken_square, [x]), 0.1)
