"""
Solver self-checks.

convergence_report reruns a pattern on several grids; verify_solver runs the
physics oracles (grounded-slab formula, all-ones sheet, lossless energy
conservation, mirror/rotation symmetry) and reports pass/fail per check.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from apps.patterns.generators import generate_pattern
from apps.patterns.pattern import Pattern, PatternClass
from apps.patterns.transforms import mirror_x, mirror_y, rot180
from utils.concurrency import ordered_map

from .analytic import analytic_slab_coPR
from .config import SolverConfig
from .fdtd import simulate_coPR
from .spectrum import Spectrum

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 0.02
FULL_SHEET_MIN = 0.99
LOSSLESS_TOLERANCE = 0.02
SYMMETRY_TOLERANCE = 1e-3


@dataclass
class ConvergenceReport:
    """
    Spectra of one pattern on several grids.

    Attributes:
        steps: Grid step of each row, in metres
        spectra: Spectrum of each row
        deviation: Per-frequency max pairwise deviation across rows
        oracle_error: Per-row max deviation from the grounded-slab formula,
            only for the empty pattern
    """
    steps: List[float]
    spectra: List[Spectrum]
    deviation: np.ndarray
    oracle_error: Optional[List[float]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'steps': self.steps,
            'freqs_hz': self.spectra[0].freqs.tolist(),
            'spectra': [s.values.tolist() for s in self.spectra],
            'deviation': self.deviation.tolist(),
            'max_deviation': float(self.deviation.max()),
            'oracle_error': self.oracle_error,
        }


def convergence_report(p: Pattern, cfg: SolverConfig, refinements: Sequence[float]) -> ConvergenceReport:
    """
    Rerun simulate_coPR for each grid step.

    Args:
        p: Pattern to simulate
        cfg: Base configuration; its lateral and vertical steps are replaced
        refinements: Grid steps in metres

    Returns:
        ConvergenceReport: One row per step
    """
    if not refinements:
        raise ValueError("at least one refinement is needed")
    configs = [cfg.with_steps(step).validate() for step in refinements]
    spectra = [simulate_coPR(p, c) for c in configs]

    deviation = np.zeros(len(spectra[0]))
    for a, b in combinations(spectra, 2):
        deviation = np.maximum(deviation, np.abs(a.values - b.values))

    oracle_error = None
    if p.ones == 0:
        oracle = analytic_slab_coPR(spectra[0].freqs, cfg)
        oracle_error = [float(np.max(np.abs(s.values - oracle))) for s in spectra]

    return ConvergenceReport(list(refinements), spectra, deviation, oracle_error)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'passed': self.passed,
            'value': self.value,
            'tolerance': self.tolerance,
            'detail': self.detail,
        }


def _simulate(args):
    pattern, cfg = args
    return simulate_coPR(pattern, cfg).values


def check_analytic_slab(cfg: SolverConfig) -> CheckResult:
    spectrum = simulate_coPR(Pattern.zeros(), cfg)
    oracle = analytic_slab_coPR(spectrum.freqs, cfg)
    error = float(np.max(np.abs(spectrum.values - oracle)))
    return CheckResult('analytic_slab', error <= ORACLE_TOLERANCE, error, ORACLE_TOLERANCE,
                       {'coPR': spectrum.values.tolist(), 'oracle': oracle.tolist()})


def check_full_sheet(cfg: SolverConfig) -> CheckResult:
    spectrum = simulate_coPR(Pattern.full(), cfg)
    minimum = float(spectrum.values.min())
    return CheckResult('all_ones', minimum >= FULL_SHEET_MIN, minimum, FULL_SHEET_MIN,
                       {'coPR': spectrum.values.tolist()})


def check_lossless(cfg: SolverConfig, seed: int, samples: int, workers: int = 1) -> CheckResult:
    lossless = cfg.lossless()
    patterns = [generate_pattern(PatternClass.RDN, seed + i) for i in range(samples)]
    results = ordered_map(_simulate, [(p, lossless) for p in patterns], workers)
    errors = [float(np.max(np.abs(values - 1.0))) for values in results]
    worst = max(errors) if errors else 0.0
    return CheckResult('lossless', worst <= LOSSLESS_TOLERANCE, worst, LOSSLESS_TOLERANCE,
                       {'per_pattern': errors, 'seeds': [p.seed for p in patterns]})


def check_symmetry(cfg: SolverConfig, seed: int, samples: int, workers: int = 1) -> CheckResult:
    jobs = []
    for class_tag in (PatternClass.PLG, PatternClass.PTN, PatternClass.RDN):
        for i in range(samples):
            p = generate_pattern(class_tag, seed + i)
            jobs.extend((q, cfg) for q in (p, mirror_x(p), mirror_y(p), rot180(p)))
    results = ordered_map(_simulate, jobs, workers)

    worst = 0.0
    per_op = {'mirror_x': 0.0, 'mirror_y': 0.0, 'rot180': 0.0}
    for start in range(0, len(results), 4):
        base = results[start]
        for offset, name in enumerate(('mirror_x', 'mirror_y', 'rot180'), start=1):
            deviation = float(np.max(np.abs(results[start + offset] - base)))
            per_op[name] = max(per_op[name], deviation)
            worst = max(worst, deviation)
    return CheckResult('symmetry', worst <= SYMMETRY_TOLERANCE, worst, SYMMETRY_TOLERANCE, per_op)


def verify_solver(cfg: SolverConfig, seed: int = 0, lossless_samples: int = 20,
                  symmetry_samples: int = 10, workers: int = 1) -> List[CheckResult]:
    """
    Run all solver checks.

    Args:
        cfg: Solver configuration under test
        seed: First seed of the random patterns
        lossless_samples: Number of RDN patterns for the lossless check
        symmetry_samples: Number of patterns per class for the symmetry check
        workers: Process count for the pattern-level checks

    Returns:
        list of CheckResult in a fixed order
    """
    cfg.validate()
    checks = [
        check_analytic_slab(cfg),
        check_full_sheet(cfg),
        check_lossless(cfg, seed, lossless_samples, workers),
        check_symmetry(cfg, seed, symmetry_samples, workers),
    ]
    for check in checks:
        status = 'passed' if check.passed else 'FAILED'
        logger.info(f"solver check {check.name} {status}: {check.value:.3g} (tolerance {check.tolerance})")
    return checks
