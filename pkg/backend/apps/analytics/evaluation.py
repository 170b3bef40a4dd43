"""
Fitting and loading of predictors and the artifacts of a scoring run.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Union

from apps.baselines.forest import FOREST_FORMAT, ForestHyper, ForestModel, fit_rfr
from apps.datasets.files import DatasetFile
from apps.forward.networks import SPEC_NAME, ForwardModel, SpectrumPredictor
from apps.forward.specs import ForwardModelSpec
from apps.forward.training import EvaluationResult, TrainHyper, train_with_holdout
from utils.error_handling import InvalidConfigError

from .benchmark import RFR
from .plots import plot_histogram
from .statistics import error_histogram

logger = logging.getLogger(__name__)


def load_predictor(path: Union[str, Path]) -> SpectrumPredictor:
    """
    Load a network checkpoint directory or a forest JSON file.

    Raises:
        InvalidConfigError: If path is neither
        CorruptCheckpoint: If the artifact is damaged
    """
    path = Path(path)
    if path.is_dir() and (path / SPEC_NAME).exists():
        return ForwardModel.load(path)
    if path.is_file():
        try:
            with open(path) as handle:
                head = json.load(handle)
        except (json.JSONDecodeError, UnicodeDecodeError):
            head = None
        if isinstance(head, dict) and head.get('format') == FOREST_FORMAT:
            return ForestModel.from_dict(head)
    raise InvalidConfigError(f"{path} is neither a network checkpoint nor a forest file")


def write_errors_csv(errors, path: Union[str, Path]):
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['index', 'mse'])
        for i, error in enumerate(errors):
            writer.writerow([i, repr(float(error))])


def write_evaluation(ctx, result: EvaluationResult, title: str = ''):
    """errors.csv, histogram.json and (with plots enabled) histogram.svg."""
    write_errors_csv(result.errors, ctx.path('errors.csv'))
    histogram = error_histogram(result.errors, ctx.config.analytics.hist_bins)
    ctx.write_json('histogram.json', histogram.to_dict())
    if ctx.config.analytics.plots:
        plot_histogram(histogram.edges, histogram.heights, ctx.path('histogram.svg'), title=title or None)
    logger.info(f"Scored {len(result.errors)} samples: mean {result.mean:.3e}, median {result.median:.3e}")


def fit_predictor(arch: str, train: DatasetFile, config, seed: int, workers: int = 1) -> SpectrumPredictor:
    """Fit the forest (arch RFR) or train a network of the given architecture with the run's settings."""
    if arch == RFR:
        return fit_rfr(train, ForestHyper.from_section(config.model), seed, workers=workers)
    spec = ForwardModelSpec.from_section(config.model, arch=arch)
    model, _ = train_with_holdout(spec, train, TrainHyper.from_section(config.train), seed, config.train.val_fraction)
    return model
