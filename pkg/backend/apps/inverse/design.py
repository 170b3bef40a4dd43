"""
Candidate search for a target spectrum.
"""
import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from apps.datasets.builder import Simulator
from apps.forward.networks import ForwardModel
from apps.patterns.pattern import Pattern
from apps.solver.config import SolverConfig
from apps.solver.fdtd import simulate_coPR
from apps.solver.spectrum import Spectrum
from utils.concurrency import ordered_map
from utils.error_handling import GridMismatch, InvalidConfigError

from .networks import Generator, binarize

logger = logging.getLogger(__name__)


def msd(a: np.ndarray, b: np.ndarray) -> float:
    """Mean-square deviation over bins."""
    return float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))


@dataclass
class Candidate:
    index: int
    d: float
    e: Optional[float] = None
    b: Optional[float] = None


@dataclass
class InverseResult:
    """
    Best generated pattern for a target.

    Attributes:
        target: Desired spectrum
        pattern: Binarized generated pattern
        predicted: Evaluator prediction on the pattern
        verified: Solver spectrum of the pattern, when verification ran
        d: Mean-square deviation of predicted from target
        e: Mean-square deviation of verified from target
        b: Mean-square deviation of predicted from verified
        n_candidates: Noise draws searched
        distinct_candidates: Distinct binarized patterns among them
        ranking: Verified or top-ranked candidates in order of d
    """
    target: Spectrum
    pattern: Pattern
    predicted: Spectrum
    d: float
    verified: Optional[Spectrum] = None
    e: Optional[float] = None
    b: Optional[float] = None
    n_candidates: int = 1
    distinct_candidates: int = 1
    ranking: List[Candidate] = field(default_factory=list)

    @property
    def collapsed(self) -> bool:
        return self.n_candidates > 1 and self.distinct_candidates == 1

    def metrics(self) -> Dict[str, Any]:
        return {
            'd': self.d,
            'e': self.e,
            'b': self.b,
            'n_candidates': self.n_candidates,
            'distinct_candidates': self.distinct_candidates,
            'fill_fraction': self.pattern.fill_fraction,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            **self.metrics(),
            'freq_hz': self.target.freqs.tolist(),
            'target': self.target.values.tolist(),
            'predicted': self.predicted.values.tolist(),
            'verified': None if self.verified is None else self.verified.values.tolist(),
            'pattern': self.pattern.to_text().splitlines(),
            'ranking': [vars(c) for c in self.ranking],
        }

    def export(self, directory: Union[str, Path]) -> Path:
        """result.json, pattern.txt and spectra.csv (freq_hz, target, predicted[, verified])."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / 'result.json', 'w') as handle:
            json.dump(self.to_dict(), handle, indent=2)
        (directory / 'pattern.txt').write_text(self.pattern.to_text())
        columns = [self.target.freqs, self.target.values, self.predicted.values]
        header = ['freq_hz', 'target', 'predicted']
        if self.verified is not None:
            columns.append(self.verified.values)
            header.append('verified')
        with open(directory / 'spectra.csv', 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for row in zip(*columns):
                writer.writerow([repr(float(v)) for v in row])
        return directory


def _verify(job) -> Spectrum:
    pattern, cfg, simulator = job
    return simulator(pattern, cfg)


def inverse_design(target: Spectrum, generator: Generator, evaluator: ForwardModel, n_candidates: int,
                   verify: bool = False, cfg: Optional[SolverConfig] = None, seed: int = 0, verify_top: int = 1,
                   workers: int = 1, simulator: Simulator = simulate_coPR) -> InverseResult:
    """
    Generate candidates for a target spectrum and keep the one the evaluator
    scores closest.

    Args:
        target: Desired spectrum
        generator: Trained generator
        evaluator: Frozen forward model scoring candidates
        n_candidates: Number of noise draws
        verify: Run the solver on the best verify_top candidates
        cfg: Solver configuration for verification
        seed: Seeds the noise draws
        verify_top: Candidates verified when verify is set
        workers: Processes for solver verification
        simulator: Spectrum function used for verification

    Returns:
        InverseResult: Lowest d, ties broken by draw order

    Raises:
        InvalidConfigError: If n_candidates or verify_top is below 1
        GridMismatch: If target and generator use different frequency grids
        SolverNonConvergence: Propagated from verification
    """
    if n_candidates < 1 or verify_top < 1:
        raise InvalidConfigError("n_candidates and verify_top must be >= 1")
    if len(target.freqs) != len(generator.freqs) or not np.allclose(target.freqs, generator.freqs, rtol=1e-9):
        raise GridMismatch("target spectrum and generator use different frequency grids")

    rng = np.random.default_rng(seed)
    z = generator.sample_noise(rng, n_candidates)
    continuous = generator.generate(z, np.tile(target.values, (n_candidates, 1)))
    patterns = [binarize(g) for g in continuous]
    binary = np.stack([p.cells for p in patterns])
    predicted = evaluator.predict_batch(binary)
    ds = np.mean((predicted - target.values) ** 2, axis=1)
    order = np.argsort(ds, kind='stable')
    distinct = len({p.cells.tobytes() for p in patterns})
    if n_candidates > 1 and distinct == 1:
        logger.warning(f"All {n_candidates} candidates binarize to the same pattern (mode collapse)")

    best = int(order[0])
    ranking = [Candidate(int(i), float(ds[i])) for i in order[:verify_top]]
    result = InverseResult(
        target=target,
        pattern=patterns[best],
        predicted=Spectrum(target.freqs, predicted[best]),
        d=float(ds[best]),
        n_candidates=n_candidates,
        distinct_candidates=distinct,
        ranking=ranking,
    )
    if verify:
        cfg = cfg or SolverConfig()
        spectra = ordered_map(_verify, [(patterns[c.index], cfg, simulator) for c in ranking], workers=workers)
        for candidate, spectrum in zip(ranking, spectra):
            candidate.e = msd(spectrum.values, target.values)
            candidate.b = msd(predicted[candidate.index], spectrum.values)
        result.verified = spectra[0]
        result.e = ranking[0].e
        result.b = ranking[0].b
    logger.info(f"Best of {n_candidates} candidates: d {result.d:.3e}"
                + (f", e {result.e:.3e}, b {result.b:.3e}" if verify else ''))
    return result
