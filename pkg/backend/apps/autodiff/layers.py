"""
Layers built on the autodiff ops.

A layer registers its parameters in a ParamStore under a name prefix when it
is constructed and looks them up by name on every call, so a network works
unchanged after its store is restored from a snapshot or a checkpoint.
"""
import logging
from typing import Sequence

import numpy as np

from utils.error_handling import CorruptCheckpoint

from . import ops
from .params import ParamStore
from .tensor import Tensor, add

logger = logging.getLogger(__name__)


class Layer:
    """Base class: a named group of parameters inside a store."""

    def __init__(self, store: ParamStore, name: str):
        self.store = store
        self.name = name

    def param(self, key: str) -> Tensor:
        return self.store[f"{self.name}.{key}"]

    def buffer(self, key: str) -> np.ndarray:
        return self.store.buffers[f"{self.name}.{key}"]

    def __call__(self, *args, **kwargs) -> Tensor:
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs) -> Tensor:
        raise NotImplementedError


class Dense(Layer):
    def __init__(self, store: ParamStore, name: str, n_in: int, n_out: int, slope: float = 0.0):
        super().__init__(store, name)
        store.add(f"{name}.w", (n_in, n_out), fan_in=n_in, slope=slope)
        store.add(f"{name}.b", (n_out,), init='zeros')

    def forward(self, x: Tensor) -> Tensor:
        return ops.dense(x, self.param('w'), self.param('b'))


class Conv2d(Layer):
    """3x3 (or k x k) convolution without bias; a batchnorm follows it."""

    def __init__(self, store: ParamStore, name: str, c_in: int, c_out: int, kernel: int = 3, stride: int = 1,
                 pad: int = 1, slope: float = 0.0, bias: bool = False):
        super().__init__(store, name)
        self.stride = stride
        self.pad = pad
        self.bias = bias
        store.add(f"{name}.k", (c_out, c_in, kernel, kernel), fan_in=c_in * kernel * kernel, slope=slope)
        if bias:
            store.add(f"{name}.b", (c_out,), init='zeros')

    def forward(self, x: Tensor) -> Tensor:
        b = self.param('b') if self.bias else None
        return ops.conv2d(x, self.param('k'), b, stride=self.stride, pad=self.pad)


class ConvTranspose2d(Layer):
    def __init__(self, store: ParamStore, name: str, c_in: int, c_out: int, kernel: int = 4, stride: int = 2,
                 pad: int = 1, slope: float = 0.0, bias: bool = False):
        super().__init__(store, name)
        self.stride = stride
        self.pad = pad
        self.bias = bias
        store.add(f"{name}.k", (c_in, c_out, kernel, kernel), fan_in=c_in * kernel * kernel, slope=slope)
        if bias:
            store.add(f"{name}.b", (c_out,), init='zeros')

    def forward(self, x: Tensor) -> Tensor:
        b = self.param('b') if self.bias else None
        return ops.conv_transpose2d(x, self.param('k'), b, stride=self.stride, pad=self.pad)


class BatchNorm2d(Layer):
    def __init__(self, store: ParamStore, name: str, channels: int, momentum: float = 0.1,
                 gamma_init: str = 'ones'):
        super().__init__(store, name)
        self.momentum = momentum
        store.add(f"{name}.gamma", (channels,), init=gamma_init)
        store.add(f"{name}.beta", (channels,), init='zeros')
        store.add_buffer(f"{name}.running_mean", np.zeros(channels))
        store.add_buffer(f"{name}.running_var", np.ones(channels))

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return ops.batchnorm2d(
            x, self.param('gamma'), self.param('beta'),
            self.buffer('running_mean'), self.buffer('running_var'),
            training, momentum=self.momentum,
        )


class ConvBlock(Layer):
    """conv -> batchnorm -> leaky ReLU."""

    def __init__(self, store: ParamStore, name: str, c_in: int, c_out: int, stride: int = 1,
                 slope: float = 0.2, kernel: int = 3, pad: int = 1):
        super().__init__(store, name)
        self.slope = slope
        self.conv = Conv2d(store, f"{name}.conv", c_in, c_out, kernel=kernel, stride=stride, pad=pad, slope=slope)
        self.bn = BatchNorm2d(store, f"{name}.bn", c_out)

    def forward(self, x: Tensor, training: bool) -> Tensor:
        return ops.leaky_relu(self.bn(self.conv(x), training), self.slope)


class ResidualBlock(Layer):
    """
    Two 3x3 conv/batchnorm pairs with an identity or 1x1 projection shortcut.

    The projection is used whenever the block changes resolution or width.
    The second batchnorm starts with zero gamma so a fresh block passes its
    shortcut through unchanged.
    """

    def __init__(self, store: ParamStore, name: str, c_in: int, c_out: int, stride: int = 1, slope: float = 0.2):
        super().__init__(store, name)
        self.slope = slope
        self.conv1 = Conv2d(store, f"{name}.conv1", c_in, c_out, stride=stride, slope=slope)
        self.bn1 = BatchNorm2d(store, f"{name}.bn1", c_out)
        self.conv2 = Conv2d(store, f"{name}.conv2", c_out, c_out, slope=slope)
        self.bn2 = BatchNorm2d(store, f"{name}.bn2", c_out, gamma_init='zeros')
        self.projection = None
        if stride != 1 or c_in != c_out:
            self.projection = Conv2d(store, f"{name}.proj", c_in, c_out, kernel=1, stride=stride, pad=0)
            self.projection_bn = BatchNorm2d(store, f"{name}.proj_bn", c_out)

    def forward(self, x: Tensor, training: bool) -> Tensor:
        h = ops.leaky_relu(self.bn1(self.conv1(x), training), self.slope)
        h = self.bn2(self.conv2(h), training)
        shortcut = x if self.projection is None else self.projection_bn(self.projection(x), training)
        return ops.leaky_relu(add(h, shortcut), self.slope)


class LSTM(Layer):
    """Single-layer LSTM returning the last hidden state."""

    def __init__(self, store: ParamStore, name: str, n_in: int, hidden: int):
        super().__init__(store, name)
        self.hidden = hidden
        store.add(f"{name}.w_x", (n_in, 4 * hidden), fan_in=n_in)
        store.add(f"{name}.w_h", (hidden, 4 * hidden), init='orthogonal')
        store.add(f"{name}.b", (4 * hidden,), init='zeros')

    def forward(self, steps: Sequence[Tensor]) -> Tensor:
        n = steps[0].shape[0]
        h = Tensor(np.zeros((n, self.hidden)))
        c = Tensor(np.zeros((n, self.hidden)))
        for x in steps:
            h, c = ops.lstm_cell(x, h, c, self.param('w_x'), self.param('w_h'), self.param('b'))
        return h


class LoadedParams:
    """
    Store stand-in for rebuilding layers over a loaded checkpoint.

    add() and add_buffer() return the existing arrays after checking their
    names and shapes instead of creating new ones.
    """

    def __init__(self, store: ParamStore):
        self.store = store

    def add(self, name: str, shape, **kwargs) -> Tensor:
        if name not in self.store.params:
            raise CorruptCheckpoint(f"checkpoint lacks parameter {name!r}")
        tensor = self.store.params[name]
        if tensor.shape != tuple(shape):
            raise CorruptCheckpoint(f"parameter {name!r} has shape {tensor.shape}, expected {tuple(shape)}")
        return tensor

    def add_buffer(self, name: str, value) -> np.ndarray:
        if name not in self.store.buffers:
            raise CorruptCheckpoint(f"checkpoint lacks buffer {name!r}")
        return self.store.buffers[name]

    def __getitem__(self, name: str) -> Tensor:
        return self.store[name]

    @property
    def buffers(self):
        return self.store.buffers
