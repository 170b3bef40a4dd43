"""
Parameter stores, initialization, checkpoints and the Adam optimizer.

A checkpoint is a directory holding manifest.json (format version, seed,
step, hyperparameters and the name, kind, shape and offset of every array)
and weights.bin (all arrays as little-endian float64, in manifest order).
"""
import hashlib
import json
import logging
import math
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Tuple, Union

import numpy as np

from utils.error_handling import CorruptCheckpoint, InvalidConfigError, MissingGradError

from .tensor import Tensor

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'msck'
CHECKPOINT_VERSION = 1
MANIFEST_NAME = 'manifest.json'
WEIGHTS_NAME = 'weights.bin'


def kaiming_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, slope: float = 0.0) -> np.ndarray:
    bound = math.sqrt(6.0 / ((1.0 + slope * slope) * fan_in))
    return rng.uniform(-bound, bound, size=shape)


def orthogonal(rng: np.random.Generator, shape: Tuple[int, int]) -> np.ndarray:
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    return q if rows >= cols else q.T


class ParamStore:
    """
    Named parameters of one network plus its buffers and optimizer state.

    Parameters are created in a fixed order from a generator seeded with
    `seed`, so the same construction sequence gives identical values.

    Attributes:
        params: Trainable tensors by name, in creation order
        buffers: Non-trainable arrays (batchnorm running statistics)
        seed: Initialization seed
        step: Number of optimizer steps taken
        m, v: Adam first and second moments per parameter
        hyper: JSON-safe metadata saved with the checkpoint
    """

    def __init__(self, seed: int = 0, hyper: Optional[Dict[str, Any]] = None):
        self.params: Dict[str, Tensor] = {}
        self.buffers: Dict[str, np.ndarray] = {}
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.step = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.hyper: Dict[str, Any] = dict(hyper or {})

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self.params.items())

    def add(self, name: str, shape: Tuple[int, ...], init: str = 'kaiming', fan_in: Optional[int] = None,
            slope: float = 0.0) -> Tensor:
        """
        Create a parameter.

        Args:
            name: Unique parameter name
            shape: Array shape
            init: 'kaiming', 'orthogonal', 'zeros' or 'ones'
            fan_in: Fan-in for Kaiming init (default: first dim of 2-D weights,
                product of the trailing dims otherwise)
            slope: Negative slope of the following leaky ReLU

        Returns:
            Tensor: The new parameter
        """
        if name in self.params:
            raise InvalidConfigError(f"duplicate parameter name {name!r}")
        shape = tuple(int(s) for s in shape)
        if init == 'kaiming':
            if fan_in is None:
                fan_in = shape[0] if len(shape) == 2 else int(np.prod(shape[1:]))
            data = kaiming_uniform(self.rng, shape, fan_in, slope)
        elif init == 'orthogonal':
            data = orthogonal(self.rng, shape)
        elif init == 'zeros':
            data = np.zeros(shape)
        elif init == 'ones':
            data = np.ones(shape)
        else:
            raise InvalidConfigError(f"unknown initializer {init!r}")
        tensor = Tensor(data, requires_grad=True)
        self.params[name] = tensor
        self.m[name] = np.zeros(shape)
        self.v[name] = np.zeros(shape)
        return tensor

    def add_buffer(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self.buffers:
            raise InvalidConfigError(f"duplicate buffer name {name!r}")
        self.buffers[name] = np.array(value, dtype=np.float64)
        return self.buffers[name]

    def zero_grad(self):
        for tensor in self.params.values():
            tensor.grad = None

    def freeze(self):
        """Stop gradients from flowing into the parameters."""
        for tensor in self.params.values():
            tensor.requires_grad = False
            tensor.grad = None

    @contextmanager
    def frozen(self):
        """Freeze the parameters for the duration of a block, then restore their flags."""
        flags = {name: tensor.requires_grad for name, tensor in self.params.items()}
        self.freeze()
        try:
            yield self
        finally:
            for name, flag in flags.items():
                self.params[name].requires_grad = flag

    def param_count(self) -> int:
        return int(sum(t.size for t in self.params.values()))

    def digest(self) -> str:
        """sha256 over names, shapes and values of parameters and buffers."""
        h = hashlib.sha256()
        for kind, arrays in (('param', {k: t.data for k, t in self.params.items()}), ('buffer', self.buffers)):
            for name, data in arrays.items():
                h.update(f"{kind}:{name}:{data.shape};".encode('utf-8'))
                h.update(np.ascontiguousarray(data, dtype='<f8').tobytes())
        return h.hexdigest()

    def copy_from(self, other: 'ParamStore'):
        """Overwrite values (not optimizer state) from a store with the same layout."""
        for name, tensor in self.params.items():
            tensor.data = other.params[name].data.copy()
        for name in self.buffers:
            self.buffers[name][...] = other.buffers[name]

    def snapshot(self) -> Dict[str, np.ndarray]:
        state = {f"param:{k}": t.data.copy() for k, t in self.params.items()}
        state.update({f"buffer:{k}": v.copy() for k, v in self.buffers.items()})
        return state

    def restore(self, state: Dict[str, np.ndarray]):
        for name, tensor in self.params.items():
            tensor.data = state[f"param:{name}"].copy()
        for name in self.buffers:
            self.buffers[name][...] = state[f"buffer:{name}"]

    # checkpoints

    def _arrays(self) -> Iterator[Tuple[str, str, np.ndarray]]:
        for name, tensor in self.params.items():
            yield 'param', name, tensor.data
        for name, data in self.buffers.items():
            yield 'buffer', name, data
        for name in self.params:
            yield 'adam_m', name, self.m[name]
            yield 'adam_v', name, self.v[name]

    def save(self, directory: Union[str, Path]) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        entries = []
        offset = 0
        with open(directory / WEIGHTS_NAME, 'wb') as handle:
            for kind, name, data in self._arrays():
                raw = np.ascontiguousarray(data, dtype='<f8').tobytes()
                handle.write(raw)
                entries.append({'kind': kind, 'name': name, 'shape': list(data.shape), 'offset': offset})
                offset += len(raw)
        manifest = {
            'format': CHECKPOINT_FORMAT,
            'version': CHECKPOINT_VERSION,
            'seed': self.seed,
            'step': self.step,
            'hyper': self.hyper,
            'arrays': entries,
        }
        with open(directory / MANIFEST_NAME, 'w') as handle:
            json.dump(manifest, handle, indent=2, sort_keys=True)
        logger.info(f"Saved checkpoint with {self.param_count()} parameters to {directory}")
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> 'ParamStore':
        """
        Read a checkpoint directory.

        Raises:
            InvalidConfigError: If the directory or its files are missing
            CorruptCheckpoint: If the manifest is unreadable, has another version or
                does not match the weights
        """
        directory = Path(directory)
        try:
            with open(directory / MANIFEST_NAME) as handle:
                manifest = json.load(handle)
            with open(directory / WEIGHTS_NAME, 'rb') as handle:
                blob = handle.read()
        except FileNotFoundError as e:
            raise InvalidConfigError(f"checkpoint not found: {e.filename}") from e
        except json.JSONDecodeError as e:
            raise CorruptCheckpoint(f"checkpoint manifest is not valid JSON: {e}") from e

        if manifest.get('format') != CHECKPOINT_FORMAT:
            raise CorruptCheckpoint(f"not a checkpoint manifest: format {manifest.get('format')!r}")
        if manifest.get('version') != CHECKPOINT_VERSION:
            raise CorruptCheckpoint(f"checkpoint version {manifest.get('version')}, expected {CHECKPOINT_VERSION}")

        store = cls(seed=manifest['seed'], hyper=manifest.get('hyper'))
        store.step = int(manifest['step'])
        for entry in manifest['arrays']:
            shape = tuple(entry['shape'])
            count = int(np.prod(shape)) if shape else 1
            end = entry['offset'] + 8 * count
            if end > len(blob):
                raise CorruptCheckpoint(f"weights file too short for {entry['kind']} {entry['name']}")
            data = np.frombuffer(blob, dtype='<f8', count=count, offset=entry['offset']).reshape(shape).copy()
            kind, name = entry['kind'], entry['name']
            if kind == 'param':
                store.params[name] = Tensor(data, requires_grad=True)
            elif kind == 'buffer':
                store.buffers[name] = data
            elif kind == 'adam_m':
                store.m[name] = data
            elif kind == 'adam_v':
                store.v[name] = data
            else:
                raise CorruptCheckpoint(f"unknown array kind {kind!r}")
        return store


def adam_step(store: ParamStore, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """
    One Adam update with bias correction on every parameter of the store.

    Raises:
        MissingGradError: If a trainable parameter has no gradient
    """
    trainable = [(name, t) for name, t in store.params.items() if t.requires_grad]
    for name, tensor in trainable:
        if tensor.grad is None:
            raise MissingGradError(f"parameter {name!r} has no gradient")

    store.step += 1
    correction1 = 1.0 - beta1 ** store.step
    correction2 = 1.0 - beta2 ** store.step
    for name, tensor in trainable:
        g = tensor.grad
        m = store.m[name]
        v = store.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        tensor.data = tensor.data - lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
