"""Prediction-interval constructions on leave-fold-out residual bundles.

Bases:
  cv             atoms yhat_full + u_i with fold weights 1/(k*|K_j|)
  cv_plus        atoms yhat^{fold(i)}(x_new) + u_i, same weights
  fitted_values  atoms yhat_full + (y_i - yhat_i), uniform weights

An interval is [Q_{a1} - delta, Q_{a2} + delta] of the method's atom ecdf;
``delta`` may be negative (shrunken).  Symmetrized variants replace the atoms
by centered absolute residuals: for cv and fitted_values the interval is
``center +- (Q_{a2-a1}(|residual| ecdf) + delta)``, while for cv_plus the atoms
``yhat^{fold(i)} + |u_i|`` keep the asymmetric two-quantile form.

Intervals are closed at finite endpoints and empty iff lo > hi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ecdf import StepCdf, eval_cdf, fold_ecdf, left_limit, quantile, uniform_ecdf
from .errors import InvalidBundle, InvalidTolerance, MissingFittedValues
from .predictors import ResidualBundle

BASES = ("cv", "cv_plus", "fitted_values")


@dataclass(frozen=True)
class IntervalMethod:
    base: str = "cv"
    symmetrized: bool = False

    def __post_init__(self):
        if self.base not in BASES:
            raise InvalidBundle(f"unknown interval base {self.base!r}")


@dataclass(frozen=True)
class PredInterval:
    """Closed extended-real interval; empty iff lo > hi."""

    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    @property
    def length(self) -> float:
        if self.empty:
            return 0.0
        if math.isinf(self.lo) or math.isinf(self.hi):
            return math.inf
        return self.hi - self.lo

    def contains(self, y: float) -> bool:
        return self.lo <= y <= self.hi

    def as_jsonable(self) -> dict:
        def enc(v):
            if v == math.inf:
                return "inf"
            if v == -math.inf:
                return "-inf"
            return v

        return {
            "lo": enc(self.lo),
            "hi": enc(self.hi),
            "lo_closed": math.isfinite(self.lo),
            "hi_closed": math.isfinite(self.hi),
            "empty": self.empty,
            "length": enc(self.length),
        }


def _fold_values(bundle: ResidualBundle, values: np.ndarray) -> StepCdf:
    return fold_ecdf([values[f] for f in bundle.partition.folds])


def method_ecdf(method: IntervalMethod, bundle: ResidualBundle) -> StepCdf:
    """The atom ecdf the interval quantiles are taken from."""
    u = bundle.loo_residuals
    if method.base == "cv":
        res = np.abs(u) if method.symmetrized else u
        return _fold_values(bundle, bundle.full_prediction + res)
    if method.base == "cv_plus":
        centers = bundle.fold_predictions_at_xnew[bundle.partition.fold_of]
        res = np.abs(u) if method.symmetrized else u
        return _fold_values(bundle, centers + res)
    if bundle.fitted_values is None:
        raise MissingFittedValues("fitted_values base needs a bundle with fitted values")
    fitted_res = bundle.y - bundle.fitted_values
    res = np.abs(fitted_res) if method.symmetrized else fitted_res
    return uniform_ecdf(bundle.full_prediction + res)


def _centered(center: float, radius: float) -> PredInterval:
    return PredInterval(center - radius, center + radius)


def interval(
    method: IntervalMethod,
    bundle: ResidualBundle,
    alpha1: float,
    alpha2: float,
    delta: float = 0.0,
) -> PredInterval:
    """The delta-distorted interval with nominal coverage alpha2 - alpha1."""
    if method.symmetrized and method.base != "cv_plus":
        # centered form: radius from the |residual| ecdf at the nominal level
        if method.base == "cv":
            F = _fold_values(bundle, np.abs(bundle.loo_residuals))
        else:
            if bundle.fitted_values is None:
                raise MissingFittedValues("fitted_values base needs a bundle with fitted values")
            F = uniform_ecdf(np.abs(bundle.y - bundle.fitted_values))
        return _centered(bundle.full_prediction, quantile(F, alpha2 - alpha1) + delta)
    F = method_ecdf(method, bundle)
    return PredInterval(quantile(F, alpha1) - delta, quantile(F, alpha2) + delta)


def shortest_interval(
    method: IntervalMethod,
    bundle: ResidualBundle,
    nominal: float,
    delta: float = 0.0,
):
    """Scan the atom-aligned (alpha1, alpha2) pairs with alpha2 - alpha1 equal
    to ``nominal`` and return ``(alpha1, alpha2, interval)`` of minimum length,
    ties broken by the smallest alpha1."""
    if not 0.0 < nominal <= 1.0:
        raise InvalidTolerance("nominal must be in (0, 1]")
    F = method_ecdf(method, bundle)
    top = 1.0 - nominal
    cand = {0.0, top}
    for c in F.cum:
        if c <= top:
            cand.add(float(c))
        if c >= nominal:
            cand.add(float(c) - nominal)
    best = None
    for a1 in sorted(min(max(c, 0.0), top) for c in cand):
        piv = interval(method, bundle, a1, a1 + nominal, delta)
        if best is None or piv.length < best[2].length:
            best = (a1, a1 + nominal, piv)
    return best


def coverage_ceiling(bundle: ResidualBundle, alpha1: float, alpha2: float, delta: float) -> float:
    """Computable upper diagnostic F(Q_{a2} + 2d) - F((Q_{a1} - 2d)-) on the
    leave-fold-out residual ecdf; compare it to alpha2 - alpha1."""
    if not delta > 0:
        raise InvalidTolerance("delta must be positive")
    F = _fold_values(bundle, bundle.loo_residuals)
    q1 = quantile(F, alpha1)
    q2 = quantile(F, alpha2)
    return eval_cdf(F, q2 + 2 * delta) - left_limit(F, q1 - 2 * delta)
