"""
Dataset generation.

Sample i of a dataset uses the seed derived from (master_seed, i), so a
sample's bytes never depend on the other samples, and results are assembled
in index order so the file is identical for any worker count.
"""
import logging
import time
from typing import Callable, Optional, Tuple

import numpy as np

from apps.patterns.generators import PatternParams, generate_pattern
from apps.patterns.pattern import Pattern, PatternClass
from apps.solver.config import SolverConfig
from apps.solver.fdtd import simulate_coPR
from apps.solver.spectrum import Spectrum
from utils.concurrency import ordered_map
from utils.error_handling import (
    DatasetBuildError,
    GenerationRetryExhausted,
    InvalidConfigError,
    InvalidParameter,
    PlacementExhausted,
    SolverNonConvergence,
)

from .files import N_BINS, DatasetFile, empty_records, pack_pattern

logger = logging.getLogger(__name__)

Simulator = Callable[[Pattern, SolverConfig], Spectrum]

RETRYABLE = (SolverNonConvergence, GenerationRetryExhausted, PlacementExhausted)


def derive_seed(master_seed: int, index: int, attempt: int = 0) -> int:
    """
    Per-sample seed: 64 bits of SeedSequence(master_seed) spawned at (index,)
    for the first attempt and (index, attempt) for retries.

    Raises:
        InvalidParameter: If a seed, index or attempt is negative or does not
            fit in 64 bits
    """
    for label, value in (('master seed', master_seed), ('index', index), ('attempt', attempt)):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or not 0 <= value < 2 ** 64:
            raise InvalidParameter(f"{label} must be an integer in [0, 2**64), got {value!r}")
    spawn_key = (index,) if attempt == 0 else (index, attempt)
    state = np.random.SeedSequence(master_seed, spawn_key=spawn_key).generate_state(1, np.uint64)
    return int(state[0])


def _build_sample(job) -> Tuple[int, np.ndarray, np.ndarray]:
    class_tag, index, master_seed, cfg, params, simulator = job
    last_error = None
    for attempt in range(2):
        seed = derive_seed(master_seed, index, attempt)
        try:
            pattern = generate_pattern(class_tag, seed, params)
            spectrum = simulator(pattern, cfg)
            spectrum.validate()
        except RETRYABLE as e:
            logger.warning(f"sample {index} (seed {seed}) failed on attempt {attempt + 1}: {e}")
            last_error = e
            continue
        return seed, pack_pattern(pattern), spectrum.values.astype('<f4')
    raise DatasetBuildError(index, last_error)


def build_dataset(
    class_tag: str,
    n: int,
    master_seed: int,
    cfg: SolverConfig,
    workers: int = 1,
    params: Optional[PatternParams] = None,
    simulator: Simulator = simulate_coPR,
) -> DatasetFile:
    """
    Generate n patterns of a class and their solver spectra.

    Args:
        class_tag: PLG, PTN or RDN
        n: Number of samples, >= 1
        master_seed: Seed all per-sample seeds derive from
        cfg: Solver configuration, embedded in the file header
        workers: Worker processes; never changes the output
        params: Pattern generator parameters
        simulator: Spectrum function, simulate_coPR unless testing

    Returns:
        DatasetFile: Samples in index order

    Raises:
        InvalidConfigError: On bad arguments (InvalidParameter for the seed)
        InvalidSpectrumError: If the simulator returns an invalid spectrum
        DatasetBuildError: If a sample fails on both attempts
    """
    if class_tag not in (PatternClass.PLG, PatternClass.PTN, PatternClass.RDN):
        raise InvalidConfigError(f"cannot build a dataset of class {class_tag!r}")
    if n < 1:
        raise InvalidConfigError(f"dataset size must be >= 1, got {n}")
    if workers < 1:
        raise InvalidConfigError(f"workers must be >= 1, got {workers}")
    derive_seed(master_seed, 0)
    cfg.validate()
    if cfg.n_freq != N_BINS:
        raise InvalidConfigError(f"datasets store {N_BINS}-bin spectra, solver has n_freq={cfg.n_freq}")
    params = params or PatternParams()

    logger.info(f"Building {n} {class_tag} samples with {workers} worker(s), master seed {master_seed}")
    started = time.perf_counter()
    jobs = [(class_tag, i, master_seed, cfg, params, simulator) for i in range(n)]
    results = ordered_map(_build_sample, jobs, workers)

    records = empty_records(n)
    for i, (seed, packed, values) in enumerate(results):
        records['pattern'][i] = packed
        records['seed'][i] = seed
        records['spectrum'][i] = values
    logger.info(f"Built {n} samples in {time.perf_counter() - started:.1f} s")
    return DatasetFile(class_tag, cfg, records)
