"""
Run configuration documents.

A RunConfig is a JSON object with the sections solver, dataset, model, train,
inverse and analytics plus a global seed. Every field is optional; missing
fields take the defaults declared below. Unknown keys anywhere are rejected so
that a typo never silently falls back to a default.
"""
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Type, TypeVar

from apps.patterns.generators import PatternParams
from apps.patterns.pattern import PatternClass
from apps.solver.config import SolverConfig
from utils.error_handling import InvalidConfigError

logger = logging.getLogger(__name__)

S = TypeVar('S')


def _check_positive(section: str, **values):
    for name, value in values.items():
        if value is None or value <= 0:
            raise InvalidConfigError(f"{section}.{name} must be positive, got {value!r}")


@dataclass
class DatasetSection:
    """Dataset generation parameters (build_dataset, split)."""
    class_tag: str = PatternClass.PLG.value
    n: int = 2000
    test_fraction: float = 0.1
    fill_prob: float = 0.5
    target_fill: float = 0.4
    max_vertices: int = 8
    min_shapes: int = 2
    max_shapes: int = 6

    def validate(self):
        if self.class_tag not in (PatternClass.PLG, PatternClass.PTN, PatternClass.RDN):
            raise InvalidConfigError(f"dataset.class_tag must be PLG, PTN or RDN, got {self.class_tag!r}")
        _check_positive('dataset', n=self.n)
        if not 0.0 < self.test_fraction < 1.0:
            raise InvalidConfigError(f"dataset.test_fraction must be in (0, 1), got {self.test_fraction}")

    def pattern_params(self) -> PatternParams:
        return PatternParams(
            fill_prob=self.fill_prob,
            target_fill=self.target_fill,
            max_vertices=self.max_vertices,
            min_shapes=self.min_shapes,
            max_shapes=self.max_shapes,
        )


@dataclass
class ModelSection:
    """
    Forward-model architecture and forest baseline hyperparameters.

    widths and blocks default to the architecture's own realization when
    left out.
    """
    arch: str = 'Resnet18S'
    widths: Optional[List[int]] = None
    blocks: Optional[List[int]] = None
    leaky_slope: float = 0.2
    lstm_hidden: int = 64
    forest_trees: int = 100
    forest_max_depth: int = 16
    forest_min_samples_leaf: int = 2
    forest_max_features: int = 16

    def validate(self):
        _check_positive(
            'model',
            lstm_hidden=self.lstm_hidden,
            forest_trees=self.forest_trees,
            forest_min_samples_leaf=self.forest_min_samples_leaf,
            forest_max_features=self.forest_max_features,
        )
        if self.forest_max_depth < 0:
            raise InvalidConfigError("model.forest_max_depth must be >= 0")
        if not 0.0 <= self.leaky_slope < 1.0:
            raise InvalidConfigError(f"model.leaky_slope must be in [0, 1), got {self.leaky_slope}")


@dataclass
class TrainSection:
    """Optimizer and early-stopping settings of forward training."""
    lr: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 20
    val_fraction: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self):
        _check_positive('train', lr=self.lr, batch_size=self.batch_size,
                        max_epochs=self.max_epochs, patience=self.patience, eps=self.eps)
        if not 0.0 < self.val_fraction < 1.0:
            raise InvalidConfigError(f"train.val_fraction must be in (0, 1), got {self.val_fraction}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise InvalidConfigError("train.beta1 and train.beta2 must be in [0, 1)")


@dataclass
class InverseSection:
    """Generator/judge training and candidate search settings."""
    noise_dim: int = 32
    lambda_d: float = 10.0
    pretrain_epochs: int = 10
    epochs: int = 40
    batch_size: int = 64
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    leaky_slope: float = 0.2
    generator_widths: List[int] = field(default_factory=lambda: [128, 64, 32, 16])
    judge_widths: List[int] = field(default_factory=lambda: [16, 32, 64, 64])
    val_targets: int = 20
    n_candidates: int = 64

    def validate(self):
        _check_positive('inverse', noise_dim=self.noise_dim, batch_size=self.batch_size,
                        lr=self.lr, val_targets=self.val_targets, n_candidates=self.n_candidates)
        if self.lambda_d < 0:
            raise InvalidConfigError("inverse.lambda_d must be >= 0")
        if self.pretrain_epochs < 0 or self.epochs < 0:
            raise InvalidConfigError("inverse epoch counts must be >= 0")
        if len(self.generator_widths) != 4 or len(self.judge_widths) != 4:
            raise InvalidConfigError("inverse.generator_widths and inverse.judge_widths take 4 entries each")


@dataclass
class AnalyticsSection:
    """
    Statistics, cross-benchmark and scaling-study settings.

    datasets maps a dataset key (PLG, PTN, RDN, RDN_LARGE, ...) to
    {"train": path, "test": path}. rows lists cross-benchmark models as
    {"name", "arch", "train"} where train is a datasets key and arch is a
    forward architecture or "RFR"; an optional "checkpoint" skips training.
    """
    hist_bins: int = 30
    datasets: Dict[str, Dict[str, str]] = field(default_factory=dict)
    rows: Optional[List[Dict[str, str]]] = None
    scaling_sizes: List[int] = field(default_factory=lambda: [500, 1000, 2000])
    overlay_samples: int = 6
    plots: bool = True

    def validate(self):
        _check_positive('analytics', hist_bins=self.hist_bins)
        for key, paths in self.datasets.items():
            if not isinstance(paths, dict) or set(paths) - {'train', 'test'}:
                raise InvalidConfigError(f"analytics.datasets.{key} takes only 'train' and 'test' paths")
        for row in self.rows or []:
            unknown = set(row) - {'name', 'arch', 'train', 'checkpoint'}
            if unknown or not {'name', 'arch', 'train'} <= set(row):
                raise InvalidConfigError(f"analytics.rows entry {row!r} needs name, arch and train")
        if not self.scaling_sizes or any(b <= a for a, b in zip(self.scaling_sizes, self.scaling_sizes[1:])):
            raise InvalidConfigError("analytics.scaling_sizes must be non-empty and increasing")


def _load_section(cls: Type[S], data: Any, name: str) -> S:
    if data is None:
        section = cls()
    else:
        if not isinstance(data, dict):
            raise InvalidConfigError(f"section '{name}' must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidConfigError(f"unknown keys in section '{name}': {', '.join(unknown)}")
        try:
            section = cls(**data)
        except TypeError as e:
            raise InvalidConfigError(f"invalid section '{name}': {e}") from e
    section.validate()
    return section


@dataclass
class RunConfig:
    """
    Effective configuration of one command run.

    The solver section holds overrides of SolverConfig fields only; the full
    configuration is built per class by solver_config().
    """
    seed: Optional[int] = None
    solver: Dict[str, Any] = field(default_factory=dict)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    inverse: InverseSection = field(default_factory=InverseSection)
    analytics: AnalyticsSection = field(default_factory=AnalyticsSection)

    SECTIONS = {
        'dataset': DatasetSection,
        'model': ModelSection,
        'train': TrainSection,
        'inverse': InverseSection,
        'analytics': AnalyticsSection,
    }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        if not isinstance(data, dict):
            raise InvalidConfigError("run configuration must be a JSON object")
        unknown = sorted(set(data) - set(cls.SECTIONS) - {'seed', 'solver'})
        if unknown:
            raise InvalidConfigError(f"unknown configuration keys: {', '.join(unknown)}")

        seed = data.get('seed')
        if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64):
            raise InvalidConfigError(f"seed must be an integer in [0, 2^64), got {seed!r}")
        solver = data.get('solver') or {}
        if not isinstance(solver, dict):
            raise InvalidConfigError("section 'solver' must be a JSON object")

        config = cls(seed=seed, solver=dict(solver), **{
            name: _load_section(section_cls, data.get(name), name)
            for name, section_cls in cls.SECTIONS.items()
        })
        # fail early on bad solver overrides
        config.solver_config().validate()
        return config

    @classmethod
    def load(cls, path: Optional[Path]) -> 'RunConfig':
        """Read a config file; None gives the all-defaults configuration."""
        if path is None:
            return cls()
        try:
            with open(path) as handle:
                data = json.load(handle)
        except FileNotFoundError as e:
            raise InvalidConfigError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise InvalidConfigError(f"config file {path} is not valid JSON: {e}") from e
        logger.info(f"Loaded run configuration from {path}")
        return cls.from_dict(data)

    def solver_config(self, class_tag: Optional[str] = None) -> SolverConfig:
        """SolverConfig for a pattern class with this run's overrides applied."""
        base = SolverConfig.for_class(class_tag) if class_tag else SolverConfig()
        return SolverConfig.from_dict({**base.to_dict(), **self.solver})

    def to_dict(self) -> Dict[str, Any]:
        data = {'seed': self.seed, 'solver': self.solver_config(self.dataset.class_tag).to_dict()}
        for name in self.SECTIONS:
            data[name] = dataclasses.asdict(getattr(self, name))
        return data
