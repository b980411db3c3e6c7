"""Prediction algorithms and leave-fold-out residual machinery.

Built-in algorithm kinds
------------------------
ridge            x'beta_hat with beta_hat = (X'X + lambda*n*I)^{-1} X'Y
knn_mean         mean response of the `neighbors` nearest rows (ties by
                 lowest canonical index)
max_response     max_i y_i, ignoring x
neg_max_response -max_i y_i
dirac_threshold  level * 1{x1 < m} with m the training-set size
constant         a fixed value

All built-ins are symmetric.  To make that exact in floating point, fitting
canonicalizes the row order (lexicographic in (y, x)), so any permutation of
the training rows yields bit-identical predictions.

Predictor arguments throughout the library accept either a
:class:`PredictorSpec` or a plain callable ``(xnew, train) -> float`` for
ad-hoc algorithms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import TrainingSet
from .errors import (
    DegenerateFit,
    DimensionMismatch,
    EmptyFold,
    FoldLeavesNothing,
    MalformedInput,
)

PREDICTOR_KINDS = ("ridge", "knn_mean", "max_response", "neg_max_response", "dirac_threshold", "constant")

# Relative pivot threshold below which a Gram factorization counts as singular.
PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class PredictorSpec:
    """Algorithm kind plus its hyperparameters.

    hyperparams by kind: ridge ``lambda >= 0``; knn_mean ``neighbors >= 1``;
    constant ``value``; dirac_threshold ``level`` (and optionally
    ``threshold_uses_train_size=False`` with a fixed ``threshold``).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PREDICTOR_KINDS:
            raise MalformedInput(f"unknown predictor kind {self.kind!r}")
        if self.kind == "ridge" and not self.params.get("lambda", 0.0) >= 0:
            raise MalformedInput("ridge lambda must be nonnegative")
        if self.kind == "knn_mean" and int(self.params.get("neighbors", 0)) < 1:
            raise MalformedInput("knn_mean needs neighbors >= 1")
        if self.kind == "dirac_threshold" and "level" not in self.params:
            raise MalformedInput("dirac_threshold needs a level")
        if self.kind == "constant" and "value" not in self.params:
            raise MalformedInput("constant needs a value")

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, **self.params})

    @classmethod
    def from_json(cls, text: str) -> "PredictorSpec":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"bad predictor JSON: {exc}") from exc
        if not isinstance(obj, dict) or "kind" not in obj:
            raise MalformedInput("predictor JSON must be an object with a kind")
        obj = dict(obj)
        return cls(obj.pop("kind"), obj)


def ridge(lam: float) -> PredictorSpec:
    return PredictorSpec("ridge", {"lambda": float(lam)})


def knn_mean(neighbors: int) -> PredictorSpec:
    return PredictorSpec("knn_mean", {"neighbors": int(neighbors)})


def max_response() -> PredictorSpec:
    return PredictorSpec("max_response")


def neg_max_response() -> PredictorSpec:
    return PredictorSpec("neg_max_response")


def dirac_threshold(level: float) -> PredictorSpec:
    return PredictorSpec("dirac_threshold", {"level": float(level)})


def constant(value: float) -> PredictorSpec:
    return PredictorSpec("constant", {"value": float(value)})


def _canonical_order(train: TrainingSet) -> np.ndarray:
    keys = tuple(train.x[:, j] for j in range(train.p - 1, -1, -1)) + (train.y,)
    return np.lexsort(keys)


def _check_pivots(L: np.ndarray, A: np.ndarray) -> None:
    if L.shape[0] == 0:
        return
    pivots = np.diag(L) ** 2
    if pivots.min() < PIVOT_RTOL * max(np.diag(A).max(), 1e-300):
        raise DegenerateFit("Gram matrix pivot below relative threshold")


def _solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise DegenerateFit("Gram matrix is not positive definite") from exc
    _check_pivots(L, A)
    z = np.linalg.solve(L, b)
    return np.linalg.solve(L.T, z)


def ridge_coefficients(train: TrainingSet, lam: float) -> np.ndarray:
    """Solve (X'X + lambda*n*I) beta = X'Y on canonically ordered rows."""
    if lam < 0:
        raise MalformedInput("lambda must be nonnegative")
    order = _canonical_order(train)
    X = train.x[order]
    Y = train.y[order]
    A = X.T @ X + lam * train.n * np.eye(train.p)
    return _solve_spd(A, X.T @ Y)


class _Fitted:
    def predict_one(self, x: np.ndarray) -> float:
        return float(self.predict(np.asarray(x, dtype=float).reshape(1, -1))[0])


class FittedRidge(_Fitted):
    def __init__(self, beta: np.ndarray):
        self.beta = beta

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.beta


class FittedConstant(_Fitted):
    def __init__(self, value: float):
        self.value = float(value)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.value)


class FittedDirac(_Fitted):
    def __init__(self, level: float, threshold: float):
        self.level = float(level)
        self.threshold = float(threshold)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.level * (X[:, 0] < self.threshold)


class FittedKnn(_Fitted):
    def __init__(self, x: np.ndarray, y: np.ndarray, neighbors: int):
        self.x = x  # canonical order
        self.y = y
        # fold refits shrink the sample; clamp to the available rows
        self.neighbors = min(int(neighbors), y.size)

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            d = np.einsum("ij,ij->i", self.x - row, self.x - row)
            sel = np.argsort(d, kind="stable")[: self.neighbors]
            out[i] = self.y[np.sort(sel)].sum() / self.neighbors
        return out


class FittedCallable(_Fitted):
    def __init__(self, fn, train: TrainingSet):
        self.fn = fn
        self.train = train

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.fn(row, self.train) for row in X], dtype=float)


def fit(spec, train: TrainingSet):
    """Fit ``spec`` on ``train`` and return a model with ``predict``/``predict_one``."""
    if callable(spec) and not isinstance(spec, PredictorSpec):
        return FittedCallable(spec, train)
    kind, params = spec.kind, spec.params
    if kind == "ridge":
        return FittedRidge(ridge_coefficients(train, float(params.get("lambda", 0.0))))
    if kind == "knn_mean":
        order = _canonical_order(train)
        return FittedKnn(train.x[order], train.y[order], params["neighbors"])
    if kind == "max_response":
        return FittedConstant(np.max(train.y))
    if kind == "neg_max_response":
        return FittedConstant(-np.max(train.y))
    if kind == "dirac_threshold":
        if params.get("threshold_uses_train_size", True):
            threshold = float(train.n)
        else:
            threshold = float(params.get("threshold", 0.0))
        return FittedDirac(params["level"], threshold)
    return FittedConstant(params["value"])


def fit_predict(spec, train: TrainingSet, xnew) -> float:
    """One-shot prediction at a single feature vector."""
    xnew = np.asarray(xnew, dtype=float)
    if xnew.shape != (train.p,):
        raise DimensionMismatch(f"xnew has shape {xnew.shape}, expected ({train.p},)")
    return fit(spec, train).predict_one(xnew)


@dataclass(frozen=True)
class FoldPartition:
    """Partition of row indices 0..n-1 into k >= 2 nonempty folds."""

    folds: tuple
    n: int

    def __post_init__(self):
        folds = tuple(np.asarray(f, dtype=int) for f in self.folds)
        if len(folds) == 1:
            raise FoldLeavesNothing("a single fold would leave nothing to train on")
        if len(folds) < 2:
            raise EmptyFold("need at least two folds")
        if any(f.size == 0 for f in folds):
            raise EmptyFold("every fold must be nonempty")
        seen = np.concatenate(folds)
        if not np.array_equal(np.sort(seen), np.arange(self.n)):
            raise EmptyFold("folds must partition exactly 0..n-1")
        object.__setattr__(self, "folds", folds)

    @property
    def k(self) -> int:
        return len(self.folds)

    @property
    def fold_of(self) -> np.ndarray:
        out = np.empty(self.n, dtype=int)
        for j, f in enumerate(self.folds):
            out[f] = j
        return out

    @classmethod
    def singletons(cls, n: int) -> "FoldPartition":
        return cls(tuple(np.array([i]) for i in range(n)), n)

    @classmethod
    def contiguous(cls, n: int, k: int) -> "FoldPartition":
        if k == 1:
            raise FoldLeavesNothing("a single fold would leave nothing to train on")
        if not 2 <= k <= n:
            raise EmptyFold(f"cannot split {n} rows into {k} nonempty folds")
        return cls(tuple(np.array_split(np.arange(n), k)), n)


@dataclass(frozen=True)
class ResidualBundle:
    """Everything the interval constructions consume for one test point.

    ``loo_residuals[i]`` is y_i minus the prediction of the model fitted
    without observation i's fold, evaluated at x_i.  ``y`` carries the
    training responses so fitted-value atoms can be formed.
    """

    partition: FoldPartition
    y: np.ndarray
    loo_residuals: np.ndarray
    fold_predictions_at_xnew: np.ndarray
    full_prediction: float
    fitted_values: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.loo_residuals.shape[0]


class FoldFits:
    """Cached full-data and leave-fold-out models for one training set.

    The fold models and the leave-fold-out residuals depend only on the
    training data, so they are computed once and reused across test points.
    For ridge the fold models come from a downdate of the full Gram system
    (subtract the fold's rank-|K_j| contribution and the matching share of
    the lambda*n ridge term); set ``fast_ridge=False`` to refit naively.
    """

    def __init__(self, spec, train: TrainingSet, partition: FoldPartition, fast_ridge: bool = True):
        if partition.n != train.n:
            raise DimensionMismatch("partition size differs from training size")
        self.spec = spec
        self.train = train
        self.partition = partition
        self.full_model = fit(spec, train)
        is_ridge = isinstance(spec, PredictorSpec) and spec.kind == "ridge"
        if is_ridge and fast_ridge:
            self.fold_models = self._ridge_downdate_models()
        else:
            keep_all = np.arange(train.n)
            self.fold_models = [
                fit(spec, train.subset(np.delete(keep_all, f))) for f in partition.folds
            ]
        resid = np.empty(train.n)
        for j, f in enumerate(partition.folds):
            resid[f] = train.y[f] - self.fold_models[j].predict(train.x[f])
        self.loo_residuals = resid

    def _ridge_downdate_models(self):
        lam = float(self.spec.params.get("lambda", 0.0))
        train = self.train
        order = _canonical_order(train)
        X = train.x[order]
        Y = train.y[order]
        S = X.T @ X
        b = X.T @ Y
        eye = np.eye(train.p)
        models = []
        for f in self.partition.folds:
            Xf = train.x[f]
            yf = train.y[f]
            A = S - Xf.T @ Xf + lam * (train.n - f.size) * eye
            models.append(FittedRidge(_solve_spd(A, b - Xf.T @ yf)))
        return models

    def fold_predictions(self, X: np.ndarray) -> np.ndarray:
        """(m, k) matrix of per-fold predictions at the rows of X."""
        if all(isinstance(m, FittedRidge) for m in self.fold_models):
            # one matmul instead of k matvecs
            return X @ np.column_stack([m.beta for m in self.fold_models])
        return np.column_stack([m.predict(X) for m in self.fold_models])

    def fitted_values(self) -> np.ndarray:
        return self.full_model.predict(self.train.x)

    def bundle_at(self, xnew, want_fitted: bool = False) -> ResidualBundle:
        xnew = np.asarray(xnew, dtype=float)
        if xnew.shape != (self.train.p,):
            raise DimensionMismatch(f"xnew has shape {xnew.shape}, expected ({self.train.p},)")
        row = xnew.reshape(1, -1)
        return ResidualBundle(
            partition=self.partition,
            y=self.train.y,
            loo_residuals=self.loo_residuals,
            fold_predictions_at_xnew=self.fold_predictions(row)[0],
            full_prediction=float(self.full_model.predict(row)[0]),
            fitted_values=self.fitted_values() if want_fitted else None,
        )


def leave_fold_out_residuals(
    spec,
    train: TrainingSet,
    partition: FoldPartition,
    xnew,
    want_fitted: bool = False,
    fast_ridge: bool = True,
) -> ResidualBundle:
    """Refit once per fold, evaluate at the held-out rows and at ``xnew``."""
    return FoldFits(spec, train, partition, fast_ridge=fast_ridge).bundle_at(xnew, want_fitted)
