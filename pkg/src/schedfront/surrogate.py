"""Gradient-boosted regression-tree surrogates and bootstrap ensembles.

Two boosted models approximate a partition's time and dynamic energy as a
function of the schedule configuration; disagreement across an ensemble of
bootstrap-resampled models serves as the exploration signal. The boosting
loop (squared error, shrinkage, mean base prediction, min-max target
normalization) is implemented here; individual trees are exact-greedy
`sklearn` regression trees, which keeps refits fast and deterministic. The
feature space is three-dimensional: normalized frequency, normalized SM
allocation, and an ordinal launch-timing code that axis-aligned splits can
isolate with at most two thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from .domain import FrequencyGrid, LaunchTiming, ScheduleConfig, SmGrid


@dataclass(frozen=True)
class FeatureContext:
    """Deterministic encoding of ScheduleConfigs into feature vectors."""

    freq_min: float
    freq_max: float
    sm_min: int
    sm_max: int
    span_max: int

    @classmethod
    def from_space(cls, freq_grid: FrequencyGrid, sm_grid: SmGrid, span_max: int) -> "FeatureContext":
        return cls(freq_grid.min, freq_grid.max, sm_grid.min, sm_grid.max, max(1, span_max))

    def timing_index(self, timing: LaunchTiming) -> int:
        if timing.is_sequential:
            return 0
        return 1 + timing.start * self.span_max + (timing.span - 1)

    def encode(self, config: ScheduleConfig) -> np.ndarray:
        f_span = self.freq_max - self.freq_min
        s_span = self.sm_max - self.sm_min
        return np.array(
            [
                (config.frequency_mhz - self.freq_min) / f_span if f_span else 0.0,
                (config.sm_alloc - self.sm_min) / s_span if s_span else 0.0,
                float(self.timing_index(config.timing)),
            ]
        )

    def encode_many(self, configs) -> np.ndarray:
        if not len(configs):
            return np.empty((0, 3))
        return np.array([self.encode(c) for c in configs])


@dataclass(frozen=True)
class GbtHyper:
    max_depth: int = 6
    learning_rate: float = 0.3
    rounds: int = 100


@dataclass
class TreeEnsembleModel:
    """Boosted squared-error regressor over min-max normalized targets."""

    trees: list[DecisionTreeRegressor]
    learning_rate: float
    base_prediction: float
    y_min: float
    y_max: float

    def predict_normalized(self, X: np.ndarray) -> np.ndarray:
        pred = np.full(len(X), self.base_prediction)
        for tree in self.trees:
            pred += self.learning_rate * tree.predict(X)
        return pred

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.denormalize(self.predict_normalized(X))

    def denormalize(self, y_norm: np.ndarray) -> np.ndarray:
        span = self.y_max - self.y_min
        return y_norm * span + self.y_min if span > 0 else np.full_like(y_norm, self.y_min)

    def normalize(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        span = self.y_max - self.y_min
        return (y - self.y_min) / span if span > 0 else np.zeros_like(y)


def _fit_on_normalized(X: np.ndarray, y_norm: np.ndarray, y_min: float, y_max: float,
                       hyper: GbtHyper) -> TreeEnsembleModel:
    base = float(y_norm.mean())
    residual = y_norm - base
    trees: list[DecisionTreeRegressor] = []
    for _ in range(hyper.rounds):
        if np.max(np.abs(residual)) < 1e-12:
            break  # residuals vanished; further rounds fit exact zeros
        tree = DecisionTreeRegressor(max_depth=hyper.max_depth, random_state=0)
        tree.fit(X, residual)
        residual = residual - hyper.learning_rate * tree.predict(X)
        trees.append(tree)
    return TreeEnsembleModel(trees, hyper.learning_rate, base, y_min, y_max)


def fit(X: np.ndarray, y, hyper: GbtHyper = GbtHyper()) -> TreeEnsembleModel:
    """Fit one boosted model. Targets are min-max normalized to [0, 1]
    internally; predictions come back in original units."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if len(y) < 2:
        raise ValueError("need at least two rows to fit a surrogate")
    y_min, y_max = float(y.min()), float(y.max())
    span = y_max - y_min
    y_norm = (y - y_min) / span if span > 0 else np.zeros_like(y)
    return _fit_on_normalized(X, y_norm, y_min, y_max, hyper)


@dataclass
class BootstrapEnsemble:
    """M boosted models on bootstrap resamples, sharing one normalization so
    member predictions are comparable in normalized space."""

    members: list[TreeEnsembleModel]

    def member_predictions_normalized(self, X: np.ndarray) -> np.ndarray:
        return np.stack([m.predict_normalized(X) for m in self.members])

    def std_normalized(self, X: np.ndarray) -> np.ndarray:
        # Population standard deviation: the ensemble size is fixed, only the
        # ranking matters.
        return self.member_predictions_normalized(X).std(axis=0)


def fit_ensemble(
    X: np.ndarray,
    y,
    m: int = 5,
    fraction: float = 0.8,
    seed: int = 0,
    hyper: GbtHyper = GbtHyper(),
) -> BootstrapEnsemble:
    """Fit ``m`` members, member ``i`` on ceil(fraction*n) rows drawn with
    replacement under seed+i."""
    if m < 2:
        raise ValueError("ensemble needs at least two members")
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    n = len(y)
    if n < 5:
        raise ValueError("need at least five rows for a bootstrap ensemble")
    y_min, y_max = float(y.min()), float(y.max())
    span = y_max - y_min
    y_norm = (y - y_min) / span if span > 0 else np.zeros_like(y)
    sample_size = int(np.ceil(fraction * n))
    members = []
    for i in range(m):
        rng = np.random.default_rng(seed + i)
        rows = rng.integers(0, n, size=sample_size)
        members.append(_fit_on_normalized(X[rows], y_norm[rows], y_min, y_max, hyper))
    return BootstrapEnsemble(members)


def uncertainty(ens_time: BootstrapEnsemble, ens_energy: BootstrapEnsemble, X: np.ndarray) -> np.ndarray:
    """Exploration score: sum of the normalized-space prediction standard
    deviations of the two ensembles (standard deviations, not variances, so
    neither objective's scale dominates)."""
    return ens_time.std_normalized(X) + ens_energy.std_normalized(X)
