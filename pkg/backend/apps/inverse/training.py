"""
Adversarial training of the generator against the judge, closed through the
frozen evaluation network.

Stage one (pretrain_epochs) optimizes only the adversarial objective. Stage
two (epochs) adds lambda_d times the mean-square deviation between the
target spectrum and the evaluator's prediction on the continuous generator
output. The evaluator runs in eval mode with frozen parameters throughout.
"""
import csv
import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from apps.autodiff import ops
from apps.autodiff.params import adam_step
from apps.autodiff.tensor import Tensor, add, mul
from apps.datasets.files import DatasetFile
from apps.forward.networks import ForwardModel
from utils.error_handling import EmptyInputError, FrozenEvaluatorModified, GridMismatch, TrainingDivergence

from .networks import Generator, GeneratorSpec, Judge, JudgeSpec, build_generator, build_judge

logger = logging.getLogger(__name__)

PRETRAIN = 'pretrain'
CLOSED_LOOP = 'closed_loop'


@dataclass
class InverseHyper:
    noise_dim: int = 32
    lambda_d: float = 10.0
    pretrain_epochs: int = 10
    epochs: int = 40
    batch_size: int = 64
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    val_targets: int = 20

    @classmethod
    def from_section(cls, section) -> 'InverseHyper':
        return cls(**{f.name: getattr(section, f.name) for f in dataclasses.fields(cls)})


@dataclass
class InverseEpoch:
    epoch: int
    stage: str
    judge_loss: float
    adversarial_loss: float
    d_loss: float
    judge_accuracy: float
    d_median: float


@dataclass
class InverseHistory:
    """
    Per-epoch losses and the median d over a fixed set of validation targets.

    best_epoch is the closed-loop epoch with the lowest d_median (the last
    epoch when no closed-loop stage ran); the returned generator holds its
    parameters.
    """
    seed: int
    lambda_d: float
    epochs: List[InverseEpoch] = field(default_factory=list)
    best_epoch: int = 0
    best_d_median: float = float('inf')
    evaluator_digest: str = ''
    wall_time: float = 0.0
    fingerprints: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_csv(self, path: Union[str, Path]):
        names = [f.name for f in dataclasses.fields(InverseEpoch)]
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(names)
            for record in self.epochs:
                writer.writerow([getattr(record, name) for name in names])


def _finite(epoch: int, **losses: float):
    for name, value in losses.items():
        if not np.isfinite(value):
            raise TrainingDivergence(epoch, name.replace('_', ' '))


def median_d(generator: Generator, evaluator: ForwardModel, z: np.ndarray, targets: np.ndarray) -> float:
    """Median over targets of the mean-square deviation between prediction and target, on continuous patterns."""
    continuous = generator.generate(z, targets)
    predicted = evaluator.forward(Tensor(continuous[:, None]), training=False).data
    return float(np.median(np.mean((predicted - targets) ** 2, axis=1)))


def train_inverse(gen_spec: GeneratorSpec, judge_spec: JudgeSpec, evaluator: ForwardModel, train: DatasetFile,
                  hyper: InverseHyper, seed: int) -> Tuple[Generator, InverseHistory]:
    """
    Train a conditional generator and its judge.

    Args:
        gen_spec: Generator architecture
        judge_spec: Judge architecture
        evaluator: Trained forward model; left untouched
        train: Real patterns and the spectra used as conditions
        hyper: Stage lengths, loss weight and optimizer settings
        seed: Seeds initialization, batch order and noise

    Returns:
        (generator, history)

    Raises:
        EmptyInputError: If the training set is empty
        GridMismatch: If the evaluator was trained on another frequency grid
        TrainingDivergence: If a loss becomes NaN or infinite
        FrozenEvaluatorModified: If the evaluator's parameters changed
    """
    if len(train) == 0:
        raise EmptyInputError("cannot train the generator on an empty dataset")
    if len(evaluator.freqs) != len(train.freqs) or not np.allclose(evaluator.freqs, train.freqs, rtol=1e-9):
        raise GridMismatch("evaluator and training set use different frequency grids")
    if evaluator.solver_fingerprint and evaluator.solver_fingerprint != train.solver_fingerprint:
        logger.warning("Evaluator was trained on data from a different solver configuration")

    gen_spec = dataclasses.replace(gen_spec, noise_dim=hyper.noise_dim, n_bins=len(train.freqs))
    generator = build_generator(gen_spec, seed)
    generator.freqs = train.freqs
    generator.solver_fingerprint = train.solver_fingerprint
    judge = build_judge(judge_spec, seed + 1)

    with evaluator.store.frozen():
        frozen_digest = evaluator.store.digest()
        history = InverseHistory(seed=seed, lambda_d=hyper.lambda_d, evaluator_digest=frozen_digest,
                                 fingerprints={'train': train.fingerprint()})

        real = train.inputs()
        conditions = train.spectra()
        rng = np.random.default_rng([seed, 2])
        val_rng = np.random.default_rng([seed, 3])
        val_index = np.sort(val_rng.choice(len(train), size=min(hyper.val_targets, len(train)), replace=False))
        val_targets = conditions[val_index]
        val_noise = generator.sample_noise(val_rng, len(val_index))

        best_state = generator.store.snapshot()
        started = time.monotonic()
        total_epochs = hyper.pretrain_epochs + hyper.epochs

        for epoch in range(1, total_epochs + 1):
            stage = PRETRAIN if epoch <= hyper.pretrain_epochs else CLOSED_LOOP
            weight = hyper.lambda_d if stage == CLOSED_LOOP else 0.0
            sums = {'judge_loss': 0.0, 'adversarial_loss': 0.0, 'd_loss': 0.0, 'correct': 0.0}
            order = rng.permutation(len(train))
            for start in range(0, len(order), hyper.batch_size):
                batch = order[start:start + hyper.batch_size]
                n = len(batch)
                z = generator.sample_noise(rng, n)

                # one generator pass per batch; the judge step sees it detached
                fake = generator.forward(z, conditions[batch], training=True)
                judge.store.zero_grad()
                real_logits = judge.forward(Tensor(real[batch]), training=True)
                fake_logits = judge.forward(Tensor(fake.data), training=True)
                judge_loss = add(ops.bce_with_logits(real_logits, 1.0), ops.bce_with_logits(fake_logits, 0.0))
                judge_loss.backward()
                adam_step(judge.store, hyper.lr, hyper.beta1, hyper.beta2)
                sums['correct'] += float(np.sum(real_logits.data > 0) + np.sum(fake_logits.data < 0))

                # generator step: non-saturating adversarial term plus weighted d
                generator.store.zero_grad()
                adversarial = ops.bce_with_logits(judge.forward(fake, training=True), 1.0)
                predicted = evaluator.forward(fake, training=False)
                d = ops.mse_loss(predicted, Tensor(conditions[batch]))
                loss = add(adversarial, mul(d, weight)) if weight > 0 else adversarial
                loss.backward()
                adam_step(generator.store, hyper.lr, hyper.beta1, hyper.beta2)

                sums['judge_loss'] += judge_loss.item() * n
                sums['adversarial_loss'] += adversarial.item() * n
                sums['d_loss'] += d.item() * n

            record = InverseEpoch(
                epoch=epoch,
                stage=stage,
                judge_loss=sums['judge_loss'] / len(train),
                adversarial_loss=sums['adversarial_loss'] / len(train),
                d_loss=sums['d_loss'] / len(train),
                judge_accuracy=sums['correct'] / (2 * len(train)),
                d_median=median_d(generator, evaluator, val_noise, val_targets),
            )
            _finite(epoch, judge_loss=record.judge_loss, generator_loss=record.adversarial_loss,
                    d=record.d_loss, validation_d=record.d_median)
            history.epochs.append(record)
            logger.debug(f"epoch {epoch} ({stage}): judge {record.judge_loss:.3f}, adversarial "
                         f"{record.adversarial_loss:.3f}, d {record.d_loss:.3e}, median d {record.d_median:.3e}")

            if stage == CLOSED_LOOP and record.d_median < history.best_d_median:
                history.best_d_median = record.d_median
                history.best_epoch = epoch
                best_state = generator.store.snapshot()

        if history.best_epoch:
            generator.store.restore(best_state)
        elif history.epochs:
            history.best_epoch = history.epochs[-1].epoch
            history.best_d_median = history.epochs[-1].d_median

        if evaluator.store.digest() != frozen_digest:
            raise FrozenEvaluatorModified("evaluator parameters changed during inverse training")
        history.wall_time = time.monotonic() - started
        logger.info(f"Trained generator for {len(history.epochs)} epochs; best median d "
                    f"{history.best_d_median:.3e} at epoch {history.best_epoch}")
        return generator, history


def history_series(history: InverseHistory) -> Tuple[List[int], Dict[str, List[float]]]:
    epochs = [r.epoch for r in history.epochs]
    return epochs, {
        'judge loss': [r.judge_loss for r in history.epochs],
        'adversarial loss': [r.adversarial_loss for r in history.epochs],
        'median d': [r.d_median for r in history.epochs],
    }
