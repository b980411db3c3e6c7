"""Weighted step distribution functions and extended quantiles.

A :class:`StepCdf` stores the jump locations and cumulative weights of a
right-continuous step function: ``F(t) = cum[j]`` for ``jumps[j] <= t <
jumps[j+1]``, ``0`` before the first jump and ``1`` from the last jump on.
Quantiles follow the extended definition ``Q_a(F) = inf{x: F(x) >= a}`` with
``-inf`` for ``a <= 0`` and ``+inf`` for ``a > 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyFold, MalformedInput, WeightSumError

# Cumulative weights are accumulated in floating point, so level comparisons
# tolerate this much slack (also used when rounding a*n to an integer count).
LEVEL_GUARD = 1e-12


@dataclass(frozen=True)
class StepCdf:
    """Sorted jump locations with strictly increasing cumulative weights."""

    jumps: np.ndarray
    cum: np.ndarray

    def __post_init__(self):
        jumps = np.asarray(self.jumps, dtype=float)
        cum = np.asarray(self.cum, dtype=float)
        if jumps.ndim != 1 or cum.shape != jumps.shape or jumps.size == 0:
            raise WeightSumError("jumps and cum must be matching nonempty 1-d arrays")
        if not np.all(np.isfinite(jumps)):
            raise WeightSumError("jump locations must be finite")
        if np.any(np.diff(jumps) <= 0):
            raise WeightSumError("jump locations must be strictly increasing")
        weights = np.diff(cum, prepend=0.0)
        if np.any(weights <= 0):
            raise WeightSumError("every atom must carry positive weight")
        if abs(cum[-1] - 1.0) > LEVEL_GUARD:
            raise WeightSumError(f"cumulative weights end at {cum[-1]!r}, expected 1")
        cum = cum.copy()
        cum[-1] = 1.0
        jumps = jumps.copy()
        jumps.setflags(write=False)
        cum.setflags(write=False)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "cum", cum)

    @property
    def weights(self) -> np.ndarray:
        return np.diff(self.cum, prepend=0.0)

    def to_json(self) -> str:
        return json.dumps({"jumps": self.jumps.tolist(), "cum": self.cum.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "StepCdf":
        try:
            obj = json.loads(text)
            jumps = np.asarray(obj["jumps"], dtype=float)
            cum = np.asarray(obj["cum"], dtype=float)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad step-cdf JSON: {exc}") from exc
        return cls(jumps, cum)


def weighted_ecdf(values, weights) -> StepCdf:
    """Weighted empirical cdf; atoms at duplicate values merge their weights."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.ndim != 1 or values.shape != weights.shape or values.size == 0:
        raise WeightSumError("values and weights must be matching nonempty 1-d arrays")
    if not np.all(np.isfinite(values)):
        raise WeightSumError("atom values must be finite")
    if np.any(weights <= 0):
        raise WeightSumError("weights must be positive")
    total = float(np.sum(weights))
    if abs(total - 1.0) > LEVEL_GUARD:
        raise WeightSumError(f"weights sum to {total!r}, expected 1 within {LEVEL_GUARD}")
    jumps, inverse = np.unique(values, return_inverse=True)
    merged = np.bincount(inverse, weights=weights, minlength=jumps.size)
    cum = np.cumsum(merged)
    cum[-1] = 1.0
    return StepCdf(jumps, cum)


def uniform_ecdf(values) -> StepCdf:
    """Plain empirical cdf with weight 1/n per observation."""
    values = np.asarray(values, dtype=float)
    return weighted_ecdf(values, np.full(values.size, 1.0 / values.size))


def fold_ecdf(per_fold_values) -> StepCdf:
    """Fold-weighted ecdf: an atom in fold j carries weight 1/(k*|K_j|).

    With equal fold sizes this reduces to the uniform ecdf, and with
    singleton folds to the plain leave-one-out ecdf.
    """
    groups = [np.asarray(g, dtype=float) for g in per_fold_values]
    if len(groups) < 2:
        raise EmptyFold("need at least two folds")
    if any(g.size == 0 for g in groups):
        raise EmptyFold("every fold must be nonempty")
    k = len(groups)
    values = np.concatenate(groups)
    weights = np.concatenate([np.full(g.size, 1.0 / (k * g.size)) for g in groups])
    return weighted_ecdf(values, weights)


def eval_cdf(F: StepCdf, t: float) -> float:
    """F(t): total weight of atoms at or below t."""
    if math.isnan(t):
        raise ValueError("t must not be NaN")
    if t == math.inf:
        return 1.0
    if t == -math.inf:
        return 0.0
    idx = np.searchsorted(F.jumps, t, side="right")
    return float(F.cum[idx - 1]) if idx > 0 else 0.0


def left_limit(F: StepCdf, t: float) -> float:
    """F(t-): total weight of atoms strictly below t."""
    if math.isnan(t):
        raise ValueError("t must not be NaN")
    if t == math.inf:
        return 1.0
    if t == -math.inf:
        return 0.0
    idx = np.searchsorted(F.jumps, t, side="left")
    return float(F.cum[idx - 1]) if idx > 0 else 0.0


def quantile(F: StepCdf, alpha: float) -> float:
    """Extended quantile: -inf for alpha <= 0, +inf for alpha > 1, else the
    smallest jump whose cumulative weight reaches alpha (within LEVEL_GUARD).
    """
    if math.isnan(alpha):
        raise ValueError("alpha must not be NaN")
    if alpha <= 0.0:
        return -math.inf
    if alpha > 1.0:
        return math.inf
    idx = np.searchsorted(F.cum, alpha - LEVEL_GUARD, side="left")
    return float(F.jumps[idx])


def quantiles(F: StepCdf, alphas) -> np.ndarray:
    """Vectorized :func:`quantile` over an array of levels."""
    alphas = np.asarray(alphas, dtype=float)
    out = np.empty(alphas.shape, dtype=float)
    out[alphas <= 0.0] = -math.inf
    out[alphas > 1.0] = math.inf
    inner = (alphas > 0.0) & (alphas <= 1.0)
    if np.any(inner):
        idx = np.searchsorted(F.cum, alphas[inner] - LEVEL_GUARD, side="left")
        out[inner] = F.jumps[idx]
    return out


def ceil_guarded(x: float, guard: float = LEVEL_GUARD) -> int:
    """ceil(x), except values within ``guard`` of an integer round to it.

    Avoids off-by-one jumps at levels like 0.9*n whose floating-point product
    lands a hair above the intended integer.
    """
    nearest = round(x)
    if abs(x - nearest) <= guard:
        return int(nearest)
    return int(math.ceil(x))
