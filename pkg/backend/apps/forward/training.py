"""
Training and evaluation of the evaluation networks.
"""
import csv
import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from apps.autodiff import ops
from apps.autodiff.params import adam_step
from apps.autodiff.tensor import Tensor
from apps.datasets.files import DatasetFile, check_compatible
from apps.datasets.splits import split
from utils.error_handling import EmptyInputError, GridMismatch, TrainingDivergence

from .networks import ForwardModel, SpectrumPredictor, build_model
from .specs import ForwardModelSpec

logger = logging.getLogger(__name__)


@dataclass
class TrainHyper:
    """Optimizer and early-stopping settings; mirrors the train config section."""
    lr: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 20
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def from_section(cls, section) -> 'TrainHyper':
        return cls(**{f.name: getattr(section, f.name) for f in dataclasses.fields(cls)})


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float


@dataclass
class TrainReport:
    """
    Trajectory of one training run.

    wall_time is the only field that differs between identical runs.
    """
    arch: str
    seed: int
    param_count: int
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_mse: float = float('inf')
    wall_time: float = 0.0
    test_mse: Optional[float] = None
    fingerprints: Dict[str, str] = field(default_factory=dict)

    @property
    def final_train_mse(self) -> float:
        return self.epochs[-1].train_mse if self.epochs else float('nan')

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_csv(self, path: Union[str, Path]):
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['epoch', 'train_mse', 'val_mse'])
            for record in self.epochs:
                writer.writerow([record.epoch, repr(record.train_mse), repr(record.val_mse)])


@dataclass
class EvaluationResult:
    """Per-sample mean over bins of (predicted - truth)^2 and its aggregates."""
    errors: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def median(self) -> float:
        return float(np.median(self.errors))

    @property
    def max(self) -> float:
        return float(np.max(self.errors))

    def to_dict(self) -> dict:
        return {'count': int(len(self.errors)), 'mean': self.mean, 'median': self.median, 'max': self.max}


class MeanSpectrumPredictor:
    """Predicts the per-bin training mean for every pattern."""

    def __init__(self, mean: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)

    @classmethod
    def fit(cls, train: DatasetFile) -> 'MeanSpectrumPredictor':
        return cls(train.spectra().mean(axis=0))

    def predict_batch(self, patterns: np.ndarray) -> np.ndarray:
        n = 1 if np.ndim(patterns) == 2 else len(patterns)
        return np.tile(self.mean, (n, 1))


def sample_errors(predicted: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Mean-square deviation per row."""
    return np.mean((np.asarray(predicted) - np.asarray(truth)) ** 2, axis=1)


def evaluate(model: SpectrumPredictor, test: DatasetFile) -> EvaluationResult:
    """
    Score a predictor on a dataset.

    A solver fingerprint that differs from the model's training data only
    logs a warning (cross-domain evaluation); a different frequency grid is
    fatal.

    Raises:
        EmptyInputError: If the dataset is empty
        GridMismatch: If the model was trained on another frequency grid
    """
    if len(test) == 0:
        raise EmptyInputError("cannot evaluate on an empty dataset")
    freqs = getattr(model, 'freqs', None)
    if freqs is not None and (len(freqs) != len(test.freqs) or not np.allclose(freqs, test.freqs, rtol=1e-9)):
        raise GridMismatch("model and test set use different frequency grids")
    fingerprint = getattr(model, 'solver_fingerprint', '')
    if fingerprint and fingerprint != test.solver_fingerprint:
        logger.warning("Evaluating on data from a different solver configuration")
    return EvaluationResult(sample_errors(model.predict_batch(test.patterns()), test.spectra()))


def _batches(order: np.ndarray, size: int) -> List[np.ndarray]:
    """Consecutive slices of order; a trailing single sample joins the previous batch."""
    batches = [order[i:i + size] for i in range(0, len(order), size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        last = batches.pop()
        batches[-1] = np.concatenate([batches[-1], last])
    return batches


def train_forward(spec: ForwardModelSpec, train: DatasetFile, val: DatasetFile, hyper: TrainHyper,
                  seed: int) -> Tuple[ForwardModel, TrainReport]:
    """
    Train a network with Adam on the mean-square spectrum error.

    Args:
        spec: Architecture
        train: Training set
        val: Validation set used for early stopping
        hyper: Optimizer settings
        seed: Seeds initialization and batch order

    Returns:
        (model, report): The model restored to its best-validation epoch

    Raises:
        InvalidConfigError: If the datasets use different solver configurations
        TrainingDivergence: If a loss becomes NaN or infinite
    """
    check_compatible([train, val])
    model = build_model(spec, seed)
    model.freqs = train.freqs
    model.solver_fingerprint = train.solver_fingerprint
    report = TrainReport(
        arch=spec.arch.value,
        seed=seed,
        param_count=model.param_count(),
        fingerprints={'train': train.fingerprint(), 'val': val.fingerprint()},
    )

    x_train = train.inputs()
    y_train = train.spectra()
    rng = np.random.default_rng([seed, 1])
    best_state = model.store.snapshot()
    stale = 0
    started = time.monotonic()

    for epoch in range(1, hyper.max_epochs + 1):
        total = 0.0
        for batch in _batches(rng.permutation(len(train)), hyper.batch_size):
            model.store.zero_grad()
            predicted = model.forward(Tensor(x_train[batch]), training=True)
            loss = ops.mse_loss(predicted, Tensor(y_train[batch]))
            loss.backward()
            adam_step(model.store, hyper.lr, hyper.beta1, hyper.beta2, hyper.eps)
            total += loss.item() * len(batch)
        train_mse = total / len(train)
        if not np.isfinite(train_mse):
            raise TrainingDivergence(epoch, 'training MSE')

        val_mse = evaluate(model, val).mean
        if not np.isfinite(val_mse):
            raise TrainingDivergence(epoch)
        report.epochs.append(EpochRecord(epoch, train_mse, val_mse))
        logger.debug(f"epoch {epoch}: train {train_mse:.3e}, val {val_mse:.3e}")

        if val_mse < report.best_val_mse:
            report.best_val_mse = val_mse
            report.best_epoch = epoch
            best_state = model.store.snapshot()
            stale = 0
        else:
            stale += 1
            if stale >= hyper.patience:
                logger.info(f"Early stop at epoch {epoch}; best epoch {report.best_epoch}")
                break

    model.store.restore(best_state)
    report.wall_time = time.monotonic() - started
    logger.info(f"Trained {spec.arch.value} for {len(report.epochs)} epochs, "
                f"best val MSE {report.best_val_mse:.3e} at epoch {report.best_epoch}")
    return model, report


def train_with_holdout(spec: ForwardModelSpec, train: DatasetFile, hyper: TrainHyper, seed: int,
                       val_fraction: float, val: Optional[DatasetFile] = None) -> Tuple[ForwardModel, TrainReport]:
    """train_forward with a validation set carved out of train when none is given."""
    if val is None:
        train, val = split(train, val_fraction, seed)
        logger.info(f"Holding out {len(val)} of {len(train) + len(val)} training samples for validation")
    return train_forward(spec, train, val, hyper, seed)
