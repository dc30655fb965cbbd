"""Exact intersection and Tanimoto kernels under a weighted counting measure.

Vectors are dense 1-d float arrays; a :class:`Measure` assigns a nonnegative
weight to every coordinate (all ones is the counting measure).  Every kernel
here is a ratio (or a single value) of weighted coordinate sums.

All sums are accumulated left to right in coordinate order so that two
formulas producing identical per-coordinate terms produce bitwise identical
results.  The ``_*_batch`` helpers broadcast over leading axes and are what
:mod:`tanimoto.gram` uses for whole rows of a Gram matrix; the public
functions validate their arguments and then call the same helpers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "Measure",
    "as_vector",
    "resolve_measure",
    "weighted_sum",
    "jaccard_binary",
    "intersection_kernel",
    "minmax_kernel",
    "general_intersection",
    "general_tanimoto_minmax",
    "general_tanimoto_l1",
]


@dataclass(frozen=True)
class Measure:
    """Per-coordinate nonnegative weights; ``total`` is the measure of the domain."""

    weights: np.ndarray
    total: float = field(init=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if w.size == 0:
            raise ValidationError("measure needs at least one coordinate")
        if not np.all(np.isfinite(w)):
            raise ValidationError("measure weights must be finite")
        if np.any(w < 0):
            raise ValidationError("measure weights must be nonnegative")
        if not np.any(w > 0):
            raise ValidationError("measure needs at least one positive weight")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "total", float(_accumulate(w)))

    @classmethod
    def counting(cls, n: int) -> "Measure":
        return cls(np.ones(int(n)))

    @property
    def n(self) -> int:
        return self.weights.size

    def __eq__(self, other):
        if not isinstance(other, Measure):
            return NotImplemented
        return self.weights.shape == other.weights.shape and bool(
            np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash(self.weights.tobytes())


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Convert to a finite 1-d float64 array or raise :class:`ValidationError`."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {v.shape}")
    if v.size == 0:
        raise ValidationError(f"{name} must have at least one coordinate")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} contains NaN or infinite entries")
    return v


def resolve_measure(mu, n: int) -> Measure:
    """``None`` means the counting measure on ``n`` coordinates."""
    if mu is None:
        return Measure.counting(n)
    if not isinstance(mu, Measure):
        mu = Measure(mu)
    if mu.n != n:
        raise ValidationError(f"measure has {mu.n} weights but vectors have length {n}")
    return mu


def _pair(f, g, mu) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    f = as_vector(f, "f")
    g = as_vector(g, "g")
    if f.size != g.size:
        raise ValidationError(f"length mismatch: {f.size} != {g.size}")
    return f, g, resolve_measure(mu, f.size).weights


def _require_nonnegative(*vectors: np.ndarray) -> None:
    for v in vectors:
        if np.any(v < 0):
            raise ValidationError("entries must be nonnegative for this kernel")


def _accumulate(terms: np.ndarray) -> np.ndarray:
    # cumsum is a strict left-to-right recurrence, unlike np.sum's pairwise tree
    if terms.shape[-1] == 0:
        return np.zeros(terms.shape[:-1])
    return np.cumsum(terms, axis=-1)[..., -1]


def _accumulate_compensated(terms: np.ndarray) -> np.ndarray:
    # Neumaier summation, still in coordinate order
    s = np.zeros(terms.shape[:-1])
    c = np.zeros(terms.shape[:-1])
    for j in range(terms.shape[-1]):
        x = terms[..., j]
        t = s + x
        c = c + np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        s = t
    return s + c


def weighted_sum(w: np.ndarray, terms: np.ndarray, compensated: bool = False) -> np.ndarray:
    """Sum ``w * terms`` over the last axis in index order."""
    products = w * terms
    if compensated:
        return _accumulate_compensated(products)
    return _accumulate(products)


def _safe_ratio(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den > 0)
    return out


# -- batch kernels ---------------------------------------------------------
# f, g broadcast to (..., n); w has shape (n,)


def _jaccard_batch(a, b, w, compensated=False):
    both = np.logical_and(a, b).astype(np.float64)
    either = np.logical_or(a, b).astype(np.float64)
    return _safe_ratio(weighted_sum(w, both, compensated), weighted_sum(w, either, compensated))


def _intersection_batch(f, g, w, compensated=False):
    return weighted_sum(w, np.minimum(f, g), compensated)


def _minmax_batch(f, g, w, compensated=False):
    num = weighted_sum(w, np.minimum(f, g), compensated)
    den = weighted_sum(w, np.maximum(f, g), compensated)
    return _safe_ratio(num, den)


def _general_minmax_parts(f, g, w, compensated=False):
    lo = np.minimum(f, g)
    hi = np.maximum(f, g)
    num = weighted_sum(w, np.maximum(lo, 0.0), compensated) - weighted_sum(
        w, np.minimum(hi, 0.0), compensated
    )
    den = weighted_sum(w, np.maximum(hi, 0.0), compensated) - weighted_sum(
        w, np.minimum(lo, 0.0), compensated
    )
    return num, den


def _general_minmax_batch(f, g, w, compensated=False):
    return _safe_ratio(*_general_minmax_parts(f, g, w, compensated))


def _l1_parts(f, g, w, compensated=False):
    # norm identity applied per coordinate before summing: for opposite signs
    # |f_j| + |g_j| and |f_j - g_j| round identically, so those terms vanish exactly
    s = np.abs(f) + np.abs(g)
    d = np.abs(f - g)
    num = 0.5 * weighted_sum(w, s - d, compensated)
    den = 0.5 * weighted_sum(w, s + d, compensated)
    return num, den


def _general_intersection_batch(f, g, w, compensated=False):
    num, _ = _l1_parts(f, g, w, compensated)
    # triangle inequality makes this >= 0; clip rounding residue
    return np.maximum(num, 0.0)


def _general_l1_batch(f, g, w, compensated=False):
    num, den = _l1_parts(f, g, w, compensated)
    return np.minimum(_safe_ratio(np.maximum(num, 0.0), den), 1.0)


# -- public scalar API -----------------------------------------------------


def jaccard_binary(a, b, mu=None, *, compensated: bool = False) -> float:
    """Weighted Jaccard index of two 0/1 indicator vectors.

    Returns ``mu(A & B) / mu(A | B)``, and 0 when the union has zero measure.

    >>> jaccard_binary([1, 0, 1], [1, 1, 0])
    0.3333333333333333
    """
    a, b, w = _pair(a, b, mu)
    for v in (a, b):
        if not np.all((v == 0) | (v == 1)):
            raise ValidationError("jaccard_binary requires entries in {0, 1}")
    return float(_jaccard_batch(a != 0, b != 0, w, compensated))


def intersection_kernel(f, g, mu=None, *, compensated: bool = False) -> float:
    """Weighted sum of coordinatewise minima of two nonnegative vectors."""
    f, g, w = _pair(f, g, mu)
    _require_nonnegative(f, g)
    return float(_intersection_batch(f, g, w, compensated))


def minmax_kernel(f, g, mu=None, *, compensated: bool = False) -> float:
    """MinMax kernel ``sum w*min(f, g) / sum w*max(f, g)`` for nonnegative vectors.

    Two all-zero vectors give 0.
    """
    f, g, w = _pair(f, g, mu)
    _require_nonnegative(f, g)
    return float(_minmax_batch(f, g, w, compensated))


def general_intersection(f, g, mu=None, *, compensated: bool = False) -> float:
    """Intersection measure of the signed area sets of two real vectors.

    Computed as ``(|f| + |g| - |f - g|) / 2`` with weighted L1 norms.
    """
    f, g, w = _pair(f, g, mu)
    return float(_general_intersection_batch(f, g, w, compensated))


def general_tanimoto_minmax(f, g, mu=None, *, compensated: bool = False) -> float:
    """Generalized Tanimoto kernel for arbitrary real vectors, min/max-sum form.

    Parameters
    ----------
    f, g : array_like
        Equal-length finite real vectors.
    mu : Measure or array_like, optional
        Coordinate weights; counting measure when omitted.
    compensated : bool
        Use compensated (Neumaier) accumulation instead of plain sums.

    Returns
    -------
    float
        Value in ``[0, 1]``; 0 when both vectors vanish on the support of ``mu``.

    Notes
    -----
    The positive and negative parts are separated with ``max(., 0)`` and
    ``min(., 0)`` instead of sign-restricted sums, so no coordinate is ever
    routed by a branch.  On nonnegative input the result is bitwise equal to
    :func:`minmax_kernel`, and on 0/1 input to :func:`jaccard_binary`.
    """
    f, g, w = _pair(f, g, mu)
    return float(_general_minmax_batch(f, g, w, compensated))


def general_tanimoto_l1(f, g, mu=None, *, compensated: bool = False) -> float:
    """Generalized Tanimoto kernel as a quotient of weighted L1 norms.

    ``(|f| + |g| - |f - g|) / (|f| + |g| + |f - g|)``; 0 for a zero denominator.
    """
    f, g, w = _pair(f, g, mu)
    return float(_general_l1_batch(f, g, w, compensated))
