"""
Deterministic train/test splits of dataset files.
"""
import logging
import math
from typing import Tuple

import numpy as np

from utils.error_handling import EmptySplit, InvalidConfigError

from .files import DatasetFile

logger = logging.getLogger(__name__)


def split(ds: DatasetFile, test_fraction: float, seed: int) -> Tuple[DatasetFile, DatasetFile]:
    """
    Shuffle with the seed and cut off round(n * test_fraction) test samples.

    Both sides keep the original sample order.

    Raises:
        InvalidConfigError: If test_fraction is outside (0, 1)
        EmptySplit: If either side would be empty
    """
    if not 0.0 < test_fraction < 1.0:
        raise InvalidConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(ds)
    n_test = int(math.floor(n * test_fraction + 0.5))
    if n_test == 0 or n_test == n:
        raise EmptySplit(f"{n} samples with test_fraction {test_fraction} leave an empty side")

    order = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(order[:n_test])
    train_idx = np.sort(order[n_test:])
    logger.info(f"Split {n} samples into {n - n_test} train / {n_test} test (seed {seed})")
    return ds.subset(train_idx), ds.subset(test_idx)
