"""
Random-forest regressor baseline: flattened 256-bit pattern in, 32-bin
spectrum out.

Trees are fitted with scikit-learn on bootstrap sample weights and exported
into plain arrays, so a fitted forest is a self-contained versioned JSON
document whose predictions do not depend on the scikit-learn version.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from apps.datasets.files import DatasetFile
from apps.patterns.pattern import N_CELLS, Pattern
from apps.solver.spectrum import Spectrum
from utils.concurrency import ordered_map
from utils.error_handling import CorruptCheckpoint, EmptyInputError, InvalidConfigError

logger = logging.getLogger(__name__)

FOREST_FORMAT = 'msrf'
FOREST_VERSION = 1
LEAF = -1


@dataclass
class ForestHyper:
    """
    Attributes:
        n_trees: Number of trees
        max_depth: Depth limit; 0 gives single-leaf trees
        min_samples_leaf: Minimum training samples per leaf
        max_features: Features considered per split
        bootstrap: Fit each tree on a bootstrap resample
    """
    n_trees: int = 100
    max_depth: int = 16
    min_samples_leaf: int = 2
    max_features: int = 16
    bootstrap: bool = True

    def validate(self):
        if self.n_trees < 1 or self.min_samples_leaf < 1 or self.max_depth < 0:
            raise InvalidConfigError("n_trees and min_samples_leaf must be >= 1, max_depth >= 0")
        if not 1 <= self.max_features <= N_CELLS:
            raise InvalidConfigError(f"max_features must be in [1, {N_CELLS}], got {self.max_features}")

    @classmethod
    def from_section(cls, section) -> 'ForestHyper':
        return cls(
            n_trees=section.forest_trees,
            max_depth=section.forest_max_depth,
            min_samples_leaf=section.forest_min_samples_leaf,
            max_features=section.forest_max_features,
        )


@dataclass
class Tree:
    """
    One regression tree as parallel node arrays.

    feature is LEAF for leaves; left/right index the children of internal
    nodes; value holds the leaf mean vector of every node.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index of every row of X."""
        nodes = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[nodes] != LEAF
        while active.any():
            current = nodes[active]
            go_left = X[rows[active], self.feature[current]] <= self.threshold[current]
            nodes[active] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[nodes] != LEAF
        return nodes

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_nested(self, node: int = 0) -> Dict[str, Any]:
        if self.feature[node] == LEAF:
            return {'value': self.value[node].tolist()}
        return {
            'feature': int(self.feature[node]),
            'threshold': float(self.threshold[node]),
            'left': self.to_nested(int(self.left[node])),
            'right': self.to_nested(int(self.right[node])),
        }

    @classmethod
    def from_nested(cls, root: Dict[str, Any]) -> 'Tree':
        feature, threshold, left, right, value = [], [], [], [], []
        n_out = None
        stack: List[Tuple[Dict[str, Any], Optional[int], bool]] = [(root, None, False)]
        while stack:
            node, parent, is_right = stack.pop()
            index = len(feature)
            if parent is not None:
                (right if is_right else left)[parent] = index
            if 'value' in node:
                vector = np.asarray(node['value'], dtype=np.float64)
                n_out = len(vector) if n_out is None else n_out
                if len(vector) != n_out:
                    raise CorruptCheckpoint("leaf vectors of one tree differ in length")
                feature.append(LEAF)
                threshold.append(0.0)
                value.append(vector)
            else:
                feature.append(int(node['feature']))
                threshold.append(float(node['threshold']))
                value.append(None)
                stack.append((node['right'], index, True))
                stack.append((node['left'], index, False))
            left.append(LEAF)
            right.append(LEAF)
        if n_out is None:
            raise CorruptCheckpoint("tree without leaves")
        values = np.array([v if v is not None else np.zeros(n_out) for v in value])
        return cls(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                   np.array(right, dtype=np.int64), values)

    @classmethod
    def from_sklearn(cls, estimator: DecisionTreeRegressor) -> 'Tree':
        t = estimator.tree_
        is_leaf = t.children_left == -1
        feature = np.where(is_leaf, LEAF, t.feature).astype(np.int64)
        return cls(feature, t.threshold.astype(np.float64), t.children_left.astype(np.int64),
                   t.children_right.astype(np.int64), t.value[:, :, 0].astype(np.float64))

    @classmethod
    def leaf(cls, vector: np.ndarray) -> 'Tree':
        return cls(np.array([LEAF]), np.zeros(1), np.array([LEAF]), np.array([LEAF]),
                   np.asarray(vector, dtype=np.float64)[None])


@dataclass
class ForestModel:
    """
    Fitted forest.

    Attributes:
        hyper: Fitting hyperparameters
        seed: Seed of the bootstrap and feature sampling
        trees: Fitted trees
        freqs: Frequency grid of the training spectra
        solver_fingerprint: Solver configuration of the training data
    """
    hyper: ForestHyper
    seed: int
    trees: List[Tree]
    freqs: np.ndarray
    solver_fingerprint: str = ''
    fingerprints: Dict[str, str] = field(default_factory=dict)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def tree_predictions(self, X: np.ndarray) -> np.ndarray:
        """(n_trees, N, n_bins)."""
        return np.stack([tree.predict(X) for tree in self.trees])

    def predict_batch(self, patterns: np.ndarray) -> np.ndarray:
        patterns = np.asarray(patterns)
        X = patterns.reshape(len(patterns) if patterns.ndim == 3 else 1, -1).astype(np.float64)
        return self.tree_predictions(X).mean(axis=0)

    def predict(self, p: Pattern) -> Spectrum:
        """Mean of the per-tree leaf vectors for one pattern."""
        return Spectrum(self.freqs, self.predict_batch(p.cells[None])[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'format': FOREST_FORMAT,
            'version': FOREST_VERSION,
            'hyper': asdict(self.hyper),
            'seed': str(self.seed),
            'freqs': self.freqs.tolist(),
            'solver_fingerprint': self.solver_fingerprint,
            'fingerprints': self.fingerprints,
            'trees': [tree.to_nested() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ForestModel':
        if data.get('format') != FOREST_FORMAT:
            raise CorruptCheckpoint(f"not a forest document: format {data.get('format')!r}")
        if data.get('version') != FOREST_VERSION:
            raise CorruptCheckpoint(f"forest version {data.get('version')}, expected {FOREST_VERSION}")
        try:
            return cls(
                hyper=ForestHyper(**data['hyper']),
                seed=int(data['seed']),
                trees=[Tree.from_nested(t) for t in data['trees']],
                freqs=np.asarray(data['freqs'], dtype=np.float64),
                solver_fingerprint=data.get('solver_fingerprint', ''),
                fingerprints=data.get('fingerprints', {}),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CorruptCheckpoint(f"malformed forest document: {e}") from e

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w') as handle:
            json.dump(self.to_dict(), handle)
        logger.info(f"Saved {self.n_trees}-tree forest to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'ForestModel':
        try:
            with open(path) as handle:
                data = json.load(handle)
        except FileNotFoundError as e:
            raise InvalidConfigError(f"forest file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise CorruptCheckpoint(f"forest file is not valid JSON: {e}") from e
        return cls.from_dict(data)


def tree_seeds(seed: int, n_trees: int) -> List[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n_trees)]


def _fit_tree(job) -> Tree:
    X, y, hyper, tree_seed = job
    rng = np.random.default_rng(tree_seed)
    if hyper.bootstrap:
        weights = np.bincount(rng.integers(0, len(X), len(X)), minlength=len(X)).astype(np.float64)
    else:
        weights = np.ones(len(X))
    if hyper.max_depth == 0:
        return Tree.leaf(np.average(y, axis=0, weights=weights))
    estimator = DecisionTreeRegressor(
        max_depth=hyper.max_depth,
        min_samples_leaf=hyper.min_samples_leaf,
        max_features=hyper.max_features,
        random_state=tree_seed,
    )
    estimator.fit(X, y, sample_weight=weights)
    return Tree.from_sklearn(estimator)


def fit_rfr(train: DatasetFile, hyper: ForestHyper, seed: int, workers: int = 1) -> ForestModel:
    """
    Fit a random forest on flattened patterns.

    Args:
        train: Training set
        hyper: Forest hyperparameters
        seed: Seeds the bootstrap resamples and split feature sampling
        workers: Processes fitting trees; the result does not depend on it

    Returns:
        ForestModel: Deterministic per (train, hyper, seed)

    Raises:
        EmptyInputError: If the training set is empty
    """
    hyper.validate()
    if len(train) == 0:
        raise EmptyInputError("cannot fit a forest on an empty dataset")
    X = train.flat_patterns()
    y = train.spectra()
    jobs = [(X, y, hyper, s) for s in tree_seeds(seed, hyper.n_trees)]
    trees = ordered_map(_fit_tree, jobs, workers=workers)
    logger.info(f"Fitted {len(trees)} trees on {len(train)} samples, "
                f"max depth {max(t.depth for t in trees)}")
    return ForestModel(hyper=hyper, seed=seed, trees=trees, freqs=train.freqs,
                       solver_fingerprint=train.solver_fingerprint, fingerprints={'train': train.fingerprint()})
