"""Leave-one-out risk estimation: loss plug-in bounds, conditional MSE, and
misclassification rate.

Loss descriptors form a small closed set so the nondecreasing precondition
stays checkable: ``squared_hinge`` (max(0, x)^2), ``indicator(c)``
(1{x >= c}), ``absolute`` (max(0, x)), plus user tables evaluated by linear
interpolation.  Losses apply to the magnitude |u| of residuals, optionally
shifted by the plug-in slack eps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidTolerance, NonIntegerResiduals, NonMonotoneLoss

# Grid on which a loss descriptor's monotonicity is probed.
_PROBE_GRID = np.linspace(-50.0, 50.0, 2001)

INTEGER_TOL = 1e-9


@dataclass(frozen=True)
class LossFn:
    """Nondecreasing loss descriptor."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        values = np.asarray(self.fn(_PROBE_GRID), dtype=float)
        if np.any(np.diff(values) < -1e-12):
            raise NonMonotoneLoss(f"loss {self.name!r} decreases on the probe grid")

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)


def squared_hinge() -> LossFn:
    return LossFn("squared_hinge", lambda x: np.maximum(x, 0.0) ** 2)


def indicator(c: float) -> LossFn:
    return LossFn(f"indicator_{c}", lambda x: (x >= c).astype(float))


def absolute() -> LossFn:
    return LossFn("absolute", lambda x: np.maximum(x, 0.0))


def table_loss(xs, ys, name: str = "table") -> LossFn:
    """Piecewise-linear loss from a table; the table must be nondecreasing."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise NonMonotoneLoss("table needs matching 1-d arrays of length >= 2")
    if np.any(np.diff(xs) <= 0):
        raise NonMonotoneLoss("table x values must be strictly increasing")
    if np.any(np.diff(ys) < 0):
        raise NonMonotoneLoss("table y values must be nondecreasing")
    return LossFn(name, lambda x: np.interp(x, xs, ys))


def loss_plugin_bounds(residuals, loss: LossFn, eps: float) -> tuple[float, float]:
    """eps-shifted plug-in bracket for the conditional risk E loss(|error|):

        lo = mean loss(|u| - eps) - eps,   hi = mean loss(|u| + eps) + eps.
    """
    if not eps > 0:
        raise InvalidTolerance("eps must be positive")
    u = np.abs(np.asarray(residuals, dtype=float))
    lo = float(np.mean(loss(u - eps))) - eps
    hi = float(np.mean(loss(u + eps))) + eps
    return lo, hi


def mse_estimate(residuals) -> float:
    """Mean squared leave-one-out residual."""
    u = np.asarray(residuals, dtype=float)
    if u.size == 0:
        raise InvalidTolerance("residuals must be nonempty")
    return float(np.mean(u**2))


def misclassification_estimate(residuals) -> float:
    """Fraction of nonzero residuals; requires an integer class encoding."""
    u = np.asarray(residuals, dtype=float)
    if u.size == 0:
        raise InvalidTolerance("residuals must be nonempty")
    rounded = np.round(u)
    if np.max(np.abs(u - rounded)) > INTEGER_TOL:
        raise NonIntegerResiduals("residuals are not integer-valued")
    return float(np.mean(rounded != 0))
