"""
Evaluation networks: 16x16 pattern in, 32-bin coPR spectrum out.
"""
import json
import logging
from pathlib import Path
from typing import List, Optional, Protocol, Union

import numpy as np

from apps.autodiff import ops
from apps.autodiff.layers import LSTM, ConvBlock, Dense, LoadedParams, ResidualBlock
from apps.autodiff.params import ParamStore
from apps.autodiff.tensor import Tensor, getitem, reshape, transpose
from apps.patterns.pattern import GRID_SIZE, Pattern
from apps.solver.config import SolverConfig
from apps.solver.spectrum import Spectrum
from utils.error_handling import CorruptCheckpoint, InvalidConfigError, ShapeMismatchError

from .specs import Arch, ForwardModelSpec

logger = logging.getLogger(__name__)

SPEC_NAME = 'model.json'
OUTPUT_EPS = 1e-6


class SpectrumPredictor(Protocol):
    """Anything that maps a batch of patterns to spectra."""

    def predict_batch(self, patterns: np.ndarray) -> np.ndarray:
        """(N, 16, 16) {0,1} patterns -> (N, n_bins) float64 spectra."""
        ...


def encode(patterns: np.ndarray) -> np.ndarray:
    """{0,1} cells -> (N, 1, 16, 16) float64 in {-1, +1}."""
    patterns = np.asarray(patterns)
    if patterns.ndim == 2:
        patterns = patterns[None]
    if patterns.shape[1:] != (GRID_SIZE, GRID_SIZE):
        raise ShapeMismatchError(f"expected (N, {GRID_SIZE}, {GRID_SIZE}) patterns, got {patterns.shape}")
    return 2.0 * patterns[:, None].astype(np.float64) - 1.0


class ForwardModel:
    """
    A built evaluation network.

    Attributes:
        spec: Architecture
        store: Parameters and batchnorm statistics
        freqs: Frequency grid of the spectra the network was trained on
        solver_fingerprint: Fingerprint of the solver configuration of the
            training data ('' before training)
    """

    def __init__(self, spec: ForwardModelSpec, store: ParamStore, freqs: Optional[np.ndarray] = None,
                 solver_fingerprint: str = '', build_params: bool = True):
        self.spec = spec
        self.store = store
        self.freqs = SolverConfig().freqs() if freqs is None else np.asarray(freqs, dtype=np.float64)
        self.solver_fingerprint = solver_fingerprint
        slope = spec.leaky_slope

        # layer construction registers parameters; on load they already exist
        target = store if build_params else LoadedParams(store)
        if spec.arch == Arch.RESNA:
            strides = [2, 2, 1]
            channels = [1] + spec.widths
            self.features: List = [
                ConvBlock(target, f"conv{i}", channels[i], channels[i + 1], stride=strides[i], slope=slope)
                for i in range(3)
            ]
            self.lstm = LSTM(target, 'lstm', spec.widths[-1], spec.lstm_hidden)
            self.head = Dense(target, 'head', spec.lstm_hidden, spec.n_outputs)
        else:
            self.stem = ConvBlock(target, 'stem', 1, spec.widths[0], slope=slope)
            self.features = []
            c_in = spec.widths[0]
            for stage, (width, count) in enumerate(zip(spec.widths, spec.blocks)):
                for block in range(count):
                    stride = 2 if stage > 0 and block == 0 else 1
                    self.features.append(
                        ResidualBlock(target, f"stage{stage}.block{block}", c_in, width, stride=stride, slope=slope)
                    )
                    c_in = width
            self.head = Dense(target, 'head', spec.widths[-1], spec.n_outputs)

    @property
    def n_residual_blocks(self) -> int:
        return sum(isinstance(layer, ResidualBlock) for layer in self.features)

    def param_count(self) -> int:
        return self.store.param_count()

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        """(N, 1, 16, 16) encoded patterns -> (N, n_outputs) values in (0, 1)."""
        if self.spec.arch == Arch.RESNA:
            h = x
            for block in self.features:
                h = block(h, training)
            n, c, height, width = h.shape
            sequence = transpose(reshape(h, (n, c, height * width)), (0, 2, 1))
            steps = [getitem(sequence, (slice(None), t)) for t in range(height * width)]
            h = self.lstm(steps)
        else:
            h = self.stem(x, training)
            for block in self.features:
                h = block(h, training)
            h = ops.global_avg_pool(h)
        return ops.sigmoid(self.head(h))

    def predict_batch(self, patterns: np.ndarray) -> np.ndarray:
        """
        Eval-mode predictions, clamped to [OUTPUT_EPS, 1 - OUTPUT_EPS].

        Each distinct pattern is evaluated once and on its own, so a pattern
        maps to the same bits wherever it sits in a batch.
        """
        x = encode(patterns)
        if not len(x):
            return np.zeros((0, self.spec.n_outputs))
        unique, inverse = np.unique(x.reshape(len(x), -1), axis=0, return_inverse=True)
        unique = unique.reshape((-1,) + x.shape[1:])
        out = np.concatenate([self.forward(Tensor(unique[i:i + 1]), training=False).data
                              for i in range(len(unique))], axis=0)
        return np.clip(out, OUTPUT_EPS, 1.0 - OUTPUT_EPS)[inverse.reshape(-1)]

    def predict(self, p: Pattern) -> Spectrum:
        return Spectrum(self.freqs, self.predict_batch(p.cells[None])[0])

    # checkpoints

    def save(self, directory: Union[str, Path]) -> Path:
        directory = self.store.save(directory)
        with open(directory / SPEC_NAME, 'w') as handle:
            json.dump({
                'spec': self.spec.to_dict(),
                'freqs': self.freqs.tolist(),
                'solver_fingerprint': self.solver_fingerprint,
            }, handle, indent=2, sort_keys=True)
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> 'ForwardModel':
        """
        Raises:
            InvalidConfigError: If the checkpoint is missing
            CorruptCheckpoint: If the spec file or the parameters do not fit
        """
        directory = Path(directory)
        try:
            with open(directory / SPEC_NAME) as handle:
                meta = json.load(handle)
        except FileNotFoundError as e:
            raise InvalidConfigError(f"model checkpoint not found: {directory}") from e
        except json.JSONDecodeError as e:
            raise CorruptCheckpoint(f"model spec is not valid JSON: {e}") from e
        store = ParamStore.load(directory)
        spec = ForwardModelSpec.from_dict(meta['spec'])
        model = cls(spec, store, freqs=meta['freqs'], solver_fingerprint=meta.get('solver_fingerprint', ''),
                    build_params=False)
        logger.info(f"Loaded {spec.arch.value} with {model.param_count()} parameters from {directory}")
        return model


def build_model(spec: ForwardModelSpec, seed: int) -> ForwardModel:
    """
    Initialize a network.

    Args:
        spec: Architecture
        seed: Initialization seed

    Returns:
        ForwardModel: Deterministic per (spec, seed)
    """
    spec.validate()
    store = ParamStore(seed=seed, hyper={'spec': spec.to_dict()})
    model = ForwardModel(spec, store)
    logger.info(f"Built {spec.arch.value}: {model.n_residual_blocks} residual blocks, "
                f"{model.param_count()} parameters")
    return model
