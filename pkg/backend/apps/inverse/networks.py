"""
Generation and judge branches.

The generator reads a noise vector concatenated with a target spectrum as a
1x1 map and expands it with four stride-2 transposed-conv blocks
(1 -> 2 -> 4 -> 8 -> 16) and a fifth stride-1 transposed conv to one 16x16
channel squashed by tanh. The judge is four conv blocks and a dense layer
producing one realness logit.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from apps.autodiff import ops
from apps.autodiff.layers import BatchNorm2d, ConvBlock, ConvTranspose2d, Dense, LoadedParams
from apps.autodiff.params import ParamStore
from apps.autodiff.tensor import Tensor, reshape
from apps.patterns.pattern import GRID_SIZE, Pattern, PatternClass
from apps.solver.config import SolverConfig
from utils.error_handling import CorruptCheckpoint, InvalidConfigError, InvalidModelSpec, ShapeMismatchError

logger = logging.getLogger(__name__)

GENERATOR_SPEC_NAME = 'generator.json'
N_TRANSPOSED_BLOCKS = 5
GENERATE_CHUNK = 256


@dataclass
class GeneratorSpec:
    """
    Attributes:
        noise_dim: Length of the uniform [-1, 1] noise vector
        n_bins: Length of the conditioning spectrum
        widths: Output channels of the four upsampling blocks
        leaky_slope: Negative slope of the block activations
    """
    noise_dim: int = 32
    n_bins: int = 32
    widths: List[int] = field(default_factory=lambda: [128, 64, 32, 16])
    leaky_slope: float = 0.2

    def validate(self):
        if len(self.widths) != N_TRANSPOSED_BLOCKS - 1:
            raise InvalidModelSpec(f"the generator takes {N_TRANSPOSED_BLOCKS - 1} upsampling widths")
        if self.noise_dim < 1 or self.n_bins < 1 or any(w < 1 for w in self.widths):
            raise InvalidModelSpec("generator sizes must be positive")

    @property
    def n_inputs(self) -> int:
        return self.noise_dim + self.n_bins


@dataclass
class JudgeSpec:
    widths: List[int] = field(default_factory=lambda: [16, 32, 64, 64])
    leaky_slope: float = 0.2

    def validate(self):
        if len(self.widths) < 1 or any(w < 1 for w in self.widths):
            raise InvalidModelSpec("the judge needs at least one conv block of positive width")


def judge_strides(n_blocks: int) -> List[int]:
    # halve until 2x2, then keep the resolution
    strides, size = [], GRID_SIZE
    for _ in range(n_blocks):
        stride = 2 if size > 2 else 1
        strides.append(stride)
        size //= stride
    return strides


class Generator:
    """
    Conditional generator.

    Attributes:
        spec: Architecture
        store: Parameters and batchnorm statistics
        freqs: Frequency grid of the conditioning spectra
        solver_fingerprint: Solver configuration of the training data
    """

    def __init__(self, spec: GeneratorSpec, store: ParamStore, freqs: Optional[np.ndarray] = None,
                 solver_fingerprint: str = '', build_params: bool = True):
        spec.validate()
        self.spec = spec
        self.store = store
        self.freqs = SolverConfig().freqs() if freqs is None else np.asarray(freqs, dtype=np.float64)
        self.solver_fingerprint = solver_fingerprint
        target = store if build_params else LoadedParams(store)

        channels = [spec.n_inputs] + spec.widths
        self.upsample = []
        for i in range(N_TRANSPOSED_BLOCKS - 1):
            conv = ConvTranspose2d(target, f"up{i}.conv", channels[i], channels[i + 1], kernel=4, stride=2, pad=1,
                                   slope=spec.leaky_slope)
            self.upsample.append((conv, BatchNorm2d(target, f"up{i}.bn", channels[i + 1])))
        self.output = ConvTranspose2d(target, 'out.conv', spec.widths[-1], 1, kernel=3, stride=1, pad=1, bias=True)

    def forward(self, z: np.ndarray, conditions: np.ndarray, training: bool = False) -> Tensor:
        """(N, noise_dim) noise and (N, n_bins) spectra -> (N, 1, 16, 16) values in [-1, 1]."""
        z = np.asarray(z, dtype=np.float64)
        conditions = np.asarray(conditions, dtype=np.float64)
        if z.shape[1:] != (self.spec.noise_dim,) or conditions.shape != (len(z), self.spec.n_bins):
            raise ShapeMismatchError(
                f"generator expects (N, {self.spec.noise_dim}) noise and (N, {self.spec.n_bins}) spectra, "
                f"got {z.shape} and {conditions.shape}"
            )
        h = Tensor(np.concatenate([z, conditions], axis=1).reshape(len(z), -1, 1, 1))
        for conv, bn in self.upsample:
            h = ops.leaky_relu(bn(conv(h), training), self.spec.leaky_slope)
        return ops.tanh(self.output(h))

    def generate(self, z: np.ndarray, conditions: np.ndarray) -> np.ndarray:
        """Eval-mode continuous patterns, (N, 16, 16)."""
        out = [self.forward(z[i:i + GENERATE_CHUNK], conditions[i:i + GENERATE_CHUNK]).data[:, 0]
               for i in range(0, len(z), GENERATE_CHUNK)]
        return np.concatenate(out, axis=0) if out else np.zeros((0, GRID_SIZE, GRID_SIZE))

    def sample_noise(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=(n, self.spec.noise_dim))

    def save(self, directory: Union[str, Path]) -> Path:
        directory = self.store.save(directory)
        with open(directory / GENERATOR_SPEC_NAME, 'w') as handle:
            json.dump({
                'spec': asdict(self.spec),
                'freqs': self.freqs.tolist(),
                'solver_fingerprint': self.solver_fingerprint,
            }, handle, indent=2, sort_keys=True)
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> 'Generator':
        """
        Raises:
            InvalidConfigError: If the checkpoint is missing
            CorruptCheckpoint: If the spec file or the parameters do not fit
        """
        directory = Path(directory)
        try:
            with open(directory / GENERATOR_SPEC_NAME) as handle:
                meta = json.load(handle)
            spec = GeneratorSpec(**meta['spec'])
        except FileNotFoundError as e:
            raise InvalidConfigError(f"generator checkpoint not found: {directory}") from e
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise CorruptCheckpoint(f"generator spec is unreadable: {e}") from e
        store = ParamStore.load(directory)
        return cls(spec, store, freqs=meta['freqs'], solver_fingerprint=meta.get('solver_fingerprint', ''),
                   build_params=False)


class Judge:
    """Realness logit of (N, 1, 16, 16) patterns encoded in [-1, 1]."""

    def __init__(self, spec: JudgeSpec, store: ParamStore):
        spec.validate()
        self.spec = spec
        self.store = store
        channels = [1] + spec.widths
        strides = judge_strides(len(spec.widths))
        self.blocks = [
            ConvBlock(store, f"judge{i}", channels[i], channels[i + 1], stride=strides[i], slope=spec.leaky_slope)
            for i in range(len(spec.widths))
        ]
        side = GRID_SIZE
        for stride in strides:
            side //= stride
        self.n_features = spec.widths[-1] * side * side
        self.head = Dense(store, 'judge_head', self.n_features, 1)

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        h = x
        for block in self.blocks:
            h = block(h, training)
        return self.head(reshape(h, (h.shape[0], self.n_features)))


def build_generator(spec: GeneratorSpec, seed: int) -> Generator:
    store = ParamStore(seed=seed, hyper={'generator': asdict(spec)})
    generator = Generator(spec, store)
    logger.info(f"Built generator with {store.param_count()} parameters")
    return generator


def build_judge(spec: JudgeSpec, seed: int) -> Judge:
    return Judge(spec, ParamStore(seed=seed, hyper={'judge': asdict(spec)}))


def binarize(g: np.ndarray, seed: int = 0) -> Pattern:
    """Threshold a continuous 16x16 pattern at 0 (> 0 -> copper)."""
    g = np.asarray(g)
    if g.shape != (GRID_SIZE, GRID_SIZE):
        raise ShapeMismatchError(f"expected a {GRID_SIZE}x{GRID_SIZE} pattern, got {g.shape}")
    return Pattern((g > 0).astype(np.uint8), PatternClass.OTHER, seed)
