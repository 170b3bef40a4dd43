"""
Static SVG figures.

Every figure is written with the Agg backend and a fixed SVG hash salt and no
date metadata, so identical data gives identical files.
"""
import logging
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams['svg.hashsalt'] = 'metasurface'
SVG_METADATA = {'Date': None}
GHZ = 1e9


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format='svg', metadata=SVG_METADATA)
    plt.close(fig)
    logger.debug(f"Wrote figure {path}")
    return path


def plot_spectrum_overlay(freqs: np.ndarray, curves: Dict[str, np.ndarray], path: Union[str, Path],
                          title: str = '') -> Path:
    """
    One panel per case with one line per labelled curve.

    Args:
        freqs: Frequency grid in Hz
        curves: Label -> (n_cases, n_bins) array; every entry has the same n_cases
        path: Output SVG path
        title: Figure title
    """
    n_cases = len(next(iter(curves.values())))
    cols = min(3, n_cases)
    rows = int(np.ceil(n_cases / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3 * rows), squeeze=False)
    for case in range(rows * cols):
        ax = axes[case // cols][case % cols]
        if case >= n_cases:
            ax.axis('off')
            continue
        for label, values in curves.items():
            ax.plot(freqs / GHZ, values[case], label=label, linestyle='--' if label != 'target' else '-')
        ax.set_ylim(0.0, 1.05)
        ax.set_xlabel('Frequency (GHz)')
        ax.set_ylabel('coPR')
        if case == 0:
            ax.legend(fontsize='small')
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_training_history(epochs: Sequence[int], series: Dict[str, Sequence[float]], path: Union[str, Path],
                          ylabel: str = 'MSE', log: bool = True, xlabel: str = 'Epoch') -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in series.items():
        ax.plot(epochs, values, label=label)
    if log:
        ax.set_yscale('log')
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_mean_variance(freqs: np.ndarray, stats: Dict[str, Dict[str, np.ndarray]], path: Union[str, Path]) -> Path:
    """Mean of 1 - coPR with a one-standard-deviation band, per labelled set."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in stats.items():
        mean, std = values['mean'], np.sqrt(values['variance'])
        ax.plot(freqs / GHZ, mean, label=label)
        ax.fill_between(freqs / GHZ, mean - std, mean + std, alpha=0.2)
    ax.set_xlabel('Frequency (GHz)')
    ax.set_ylabel('1 - coPR')
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_kurtosis(freqs: np.ndarray, kurtosis: Dict[str, np.ndarray], path: Union[str, Path]) -> Path:
    """Grouped bars of Pearson kurtosis per bin; absent values are left blank."""
    fig, ax = plt.subplots(figsize=(8, 4))
    width = 0.8 / max(len(kurtosis), 1)
    positions = np.arange(len(freqs))
    for i, (label, values) in enumerate(kurtosis.items()):
        ax.bar(positions + i * width, np.nan_to_num(values, nan=0.0), width=width, label=label)
    ticks = positions[::4]
    ax.set_xticks(ticks + 0.4 - width / 2)
    ax.set_xticklabels([f"{f / GHZ:.1f}" for f in freqs[::4]])
    ax.axhline(3.0, color='grey', linewidth=0.8, linestyle=':')
    ax.set_xlabel('Frequency (GHz)')
    ax.set_ylabel('Kurtosis (Pearson)')
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_histogram(edges: np.ndarray, heights: np.ndarray, path: Union[str, Path], xlabel: str = 'MSE',
                   title: Optional[str] = None) -> Path:
    """Bars over log-spaced bins, heights already normalized."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(edges[:-1], heights, width=np.diff(edges), align='edge', edgecolor='black', linewidth=0.5)
    ax.set_xscale('log')
    ax.set_xlabel(xlabel)
    ax.set_ylabel('Normalized count')
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_pattern(cells: np.ndarray, path: Union[str, Path], title: str = '') -> Path:
    fig, ax = plt.subplots(figsize=(3, 3))
    ax.imshow(cells, cmap='Greys', vmin=0, vmax=1, interpolation='nearest')
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)
