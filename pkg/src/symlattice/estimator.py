"""scikit-learn style estimators wrapping the sample/fit/reinforce loop.

These are conveniences for array-based workflows: X/y in, fitted model out,
with the interactive machinery (lattice, pool, reinforcement rounds) run
internally at fixed settings.  The interactive API in lattice/pool remains
the primary surface; nothing here adds modeling behavior.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import Dataset
from .expression import graph_equation
from .fitting import FitConfig, predict as graph_predict
from .graph import CLASSIFIER, NUMERICAL, REGRESSOR
from .lattice import GraphSpec, Lattice, LatticeConfig

__all__ = ["SymbolicClassifier", "SymbolicRegressor"]


def _feature_names(X) -> list[str] | None:
    cols = getattr(X, "columns", None)
    if cols is None:
        return None
    return [str(c) for c in cols]


class _SymbolicModel(BaseEstimator):
    """Shared fit loop; subclasses pin the task."""

    _task = ""

    def __init__(
        self,
        n_rounds=10,
        capacity=50,
        max_depth=2,
        epochs=30,
        learning_rate=0.01,
        lattice_width=8,
        lattice_depth=4,
        islands=2,
        alpha=1.0,
        criterion=None,
        workers=1,
        random_state=0,
    ):
        self.n_rounds = n_rounds
        self.capacity = capacity
        self.max_depth = max_depth
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.lattice_width = lattice_width
        self.lattice_depth = lattice_depth
        self.islands = islands
        self.alpha = alpha
        self.criterion = criterion
        self.workers = workers
        self.random_state = random_state

    # -- shared plumbing ----------------------------------------------------

    def _dataset(self, X, names: list[str], y01: np.ndarray | None = None) -> Dataset:
        columns = [(n, NUMERICAL) for n in names]
        data = {n: np.asarray(X[:, i], dtype=float) for i, n in enumerate(names)}
        if y01 is not None:
            columns.append((self._target_name_, NUMERICAL))
            data[self._target_name_] = np.asarray(y01, dtype=float)
        return Dataset(tuple(columns), data)

    def _fit(self, X, y):
        names = _feature_names(X)
        X = check_array(X, dtype=float)
        if names is None:
            names = [f"x{i}" for i in range(X.shape[1])]
        if len(names) != X.shape[1]:
            raise ValueError("feature name count does not match column count")
        self.n_features_in_ = X.shape[1]
        self.feature_names_in_ = np.asarray(names, dtype=object)

        y = np.asarray(y)
        if y.ndim != 1 or len(y) != X.shape[0]:
            raise ValueError("y must be one value per row of X")
        y01 = self._encode_target(y)

        target = "target"
        while target in names:
            target = "_" + target
        self._target_name_ = target

        seed = 0 if self.random_state is None else int(self.random_state)
        train = self._dataset(X, names, y01)
        self.lattice_ = Lattice(
            LatticeConfig(
                width=self.lattice_width,
                depth=self.lattice_depth,
                islands=self.islands,
                alpha=self.alpha,
                seed=seed,
            )
        )
        spec = GraphSpec(
            inputs=tuple(names), output=target, task=self._task, max_depth=self.max_depth
        )
        self.pool_ = self.lattice_.ask(
            spec,
            capacity=self.capacity,
            sort_criterion=self.criterion,
            fit_config=FitConfig(learning_rate=self.learning_rate, epochs=self.epochs),
        )
        for _ in range(int(self.n_rounds)):
            self.pool_.fit(train, workers=self.workers)
            self.lattice_.update(self.pool_.best())
        self.best_graph_ = self.pool_[0]
        self.train_loss_ = self.best_graph_.train_loss
        return self

    def _scores(self, X) -> np.ndarray:
        check_is_fitted(self, "best_graph_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features; the model was fitted with "
                f"{self.n_features_in_}"
            )
        names = [str(n) for n in self.feature_names_in_]
        return graph_predict(self.best_graph_, self._dataset(X, names))

    def equation(self, signif: int = 6, format: str = "text") -> str:
        """Render the best graph as a closed-form equation."""
        check_is_fitted(self, "best_graph_")
        return graph_equation(self.best_graph_, signif=signif, format=format)


class SymbolicClassifier(ClassifierMixin, _SymbolicModel):
    """Binary classifier built from sampled interaction graphs."""

    _task = CLASSIFIER

    def _encode_target(self, y) -> np.ndarray:
        self.classes_ = np.unique(y)
        if len(self.classes_) != 2:
            raise ValueError(
                f"binary classification needs exactly 2 classes, got {len(self.classes_)}"
            )
        return (y == self.classes_[1]).astype(float)

    def fit(self, X, y):
        return self._fit(X, y)

    def predict_proba(self, X) -> np.ndarray:
        p = self._scores(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        p = self._scores(X)
        return self.classes_[(p >= 0.5).astype(int)]


class SymbolicRegressor(RegressorMixin, _SymbolicModel):
    """Regressor built from sampled interaction graphs."""

    _task = REGRESSOR

    def _encode_target(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float)

    def fit(self, X, y):
        return self._fit(X, y)

    def predict(self, X) -> np.ndarray:
        return self._scores(X)
