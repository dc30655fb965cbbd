"""Smooth approximation of the generalized Tanimoto kernel.

The branchless min/max-sum form of the kernel contains only compositions of
``min`` and ``max``.  Replacing each one with a log-sum-exp soft version at
temperature ``t`` gives a kernel that is infinitely differentiable and
converges to the exact one as ``t -> 0``.

Two modes are provided.  ``"lse"`` (default) uses the standard soft maximum
``t * log(exp(a/t) + exp(b/t))``, which is within ``t * log 2`` of the true
maximum.  ``"literal"`` evaluates an alternative composite formula that mixes
``t`` and ``1/t`` across nesting levels and puts ``1 +`` inside the
logarithms; it is kept for comparison and has no convergence guarantee.
``"paper"`` is accepted as an alias of ``"literal"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import _general_minmax_batch, _pair, weighted_sum
from .errors import NumericalError, ValidationError

__all__ = [
    "MODES",
    "SmoothResult",
    "soft_max",
    "soft_min",
    "smooth_tanimoto",
    "smooth_tanimoto_result",
]

MODES = ("lse", "literal", "paper")
LOG2 = math.log(2.0)


def _canonical_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValidationError(f"unknown smoothing mode {mode!r}; expected one of {MODES}")
    return "literal" if mode == "paper" else mode


def _check_t(t) -> float:
    t = float(t)
    if not t > 0 or not math.isfinite(t):
        raise ValidationError(f"temperature must be positive and finite, got {t}")
    return t


def _soft_max(a, b, t):
    hi = np.maximum(a, b)
    return hi + t * np.log1p(np.exp(-np.abs(a - b) / t))


def _soft_min(a, b, t):
    return -_soft_max(-a, -b, t)


def soft_max(a: float, b: float, t: float) -> float:
    """``t * log(exp(a/t) + exp(b/t))``, shifted by ``max(a, b)`` to avoid overflow.

    Lies in ``[max(a, b), max(a, b) + t*log(2)]``.
    """
    return float(_soft_max(float(a), float(b), _check_t(t)))


def soft_min(a: float, b: float, t: float) -> float:
    """``-soft_max(-a, -b, t)``; lies in ``[min(a, b) - t*log(2), min(a, b)]``."""
    return float(_soft_min(float(a), float(b), _check_t(t)))


def _lse_parts(a, b, w, t, compensated=False):
    lo = _soft_min(a, b, t)
    hi = _soft_max(a, b, t)
    num = weighted_sum(w, _soft_max(lo, 0.0, t), compensated) - weighted_sum(
        w, _soft_min(hi, 0.0, t), compensated
    )
    den = weighted_sum(w, _soft_max(hi, 0.0, t), compensated) - weighted_sum(
        w, _soft_min(lo, 0.0, t), compensated
    )
    return num, den


def _lse2(p, q):
    # log(exp(p) + exp(q)) without overflow
    hi = np.maximum(p, q)
    return hi + np.log1p(np.exp(-np.abs(p - q)))


def _literal_parts(a, b, w, t, compensated=False):
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        inner_small = np.log1p(t * _lse2(a / t, b / t))
        inner_large = np.log1p(_lse2(t * a, t * b) / t)
        s_small = weighted_sum(w, inner_small, compensated)
        s_large = weighted_sum(w, inner_large, compensated)
        num = s_small / t - t * s_large
        den = s_large / t - t * s_small
    return num, den


@dataclass(frozen=True)
class SmoothResult:
    value: float
    numerator: float
    denominator: float
    degenerate: bool


def smooth_tanimoto_result(
    a, b, t: float, mode: str = "lse", mu=None, *, compensated: bool = False
) -> SmoothResult:
    """Smooth kernel value together with its numerator, denominator and a degeneracy flag.

    In ``"lse"`` mode a pair whose smooth denominator is below
    ``8 * t * log(2) * mu(D)`` is flagged degenerate: the smoothing error is
    as large as the signal there, and the exact kernel value is returned.
    """
    a, b, w = _pair(a, b, mu)
    t = _check_t(t)
    mode = _canonical_mode(mode)
    if mode == "lse":
        num, den = (float(v) for v in _lse_parts(a, b, w, t, compensated))
        if den < 8.0 * t * LOG2 * float(w.sum()):
            exact = float(_general_minmax_batch(a, b, w, compensated))
            return SmoothResult(exact, num, den, True)
    else:
        num, den = (float(v) for v in _literal_parts(a, b, w, t, compensated))
    if not (math.isfinite(num) and math.isfinite(den)) or den <= 0:
        raise NumericalError(
            f"smooth denominator vanished or is not finite (num={num}, den={den}, mode={mode})"
        )
    return SmoothResult(num / den, num, den, False)


def smooth_tanimoto(a, b, t: float, mode: str = "lse", mu=None, *, compensated: bool = False) -> float:
    """Smoothed generalized Tanimoto kernel at temperature ``t``.

    >>> round(smooth_tanimoto([1.0, -1.0], [2.0, -3.0], 1e-3), 6)
    0.4
    """
    return smooth_tanimoto_result(a, b, t, mode, mu, compensated=compensated).value


def _smooth_batch(a, b, w, t, mode="lse", compensated=False):
    """Vectorized kernel over broadcast rows; used for Gram matrices."""
    if _canonical_mode(mode) == "literal":
        num, den = _literal_parts(a, b, w, t, compensated)
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den)) and np.all(den > 0)):
            raise NumericalError("literal-mode smooth kernel is undefined for some pairs")
        return num / den
    num, den = _lse_parts(a, b, w, t, compensated)
    degenerate = den < 8.0 * t * LOG2 * float(w.sum())
    out = np.divide(num, den, out=np.zeros(np.shape(num)), where=~degenerate)
    if np.any(degenerate):
        exact = _general_minmax_batch(a, b, w, compensated)
        out = np.where(degenerate, exact, out)
    return out
