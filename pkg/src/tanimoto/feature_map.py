"""Truncated explicit feature map of the set Tanimoto kernel.

The Jaccard index of two sets expands into a geometric series in
``r = mu(~A & ~B) / mu(D)`` with first term ``mu(A & B) / mu(D)``.  Block
``k`` of the feature of ``A`` is the tensor product of the indicator of ``A``
with ``k - 1`` copies of the scaled indicator of its complement, so the dot
product of two depth-``K`` features is the partial sum of the first ``K``
series terms.

Weighted measures are supported by scaling every indicator coordinate by
``sqrt(w_j)``; with unit weights this is the plain indicator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Measure, resolve_measure
from .errors import ValidationError

__all__ = [
    "DEFAULT_MAX_ENTRIES",
    "IndicatorVector",
    "TruncatedFeature",
    "feature_size",
    "explicit_feature",
    "truncated_inner_product",
    "complement_ratio_max",
    "default_depth",
]

DEFAULT_MAX_ENTRIES = 1 << 24


@dataclass(frozen=True)
class IndicatorVector:
    bits: np.ndarray
    measure: Measure

    def __post_init__(self):
        raw = np.asarray(self.bits)
        if raw.ndim != 1 or raw.size == 0:
            raise ValidationError("indicator must be a nonempty 1-d sequence")
        if not np.all((raw == 0) | (raw == 1)):
            raise ValidationError("indicator entries must be 0 or 1")
        bits = raw.astype(bool)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "measure", resolve_measure(self.measure, bits.size))

    @classmethod
    def from_bits(cls, bits, mu=None) -> "IndicatorVector":
        bits = np.asarray(bits)
        return cls(bits, resolve_measure(mu, bits.size))

    @property
    def n(self) -> int:
        return self.bits.size

    def complement(self) -> "IndicatorVector":
        return IndicatorVector(~self.bits, self.measure)

    def measure_of(self) -> float:
        return float(self.measure.weights[self.bits].sum())


@dataclass(frozen=True)
class TruncatedFeature:
    depth: int
    blocks: tuple[np.ndarray, ...]
    scale: float

    @property
    def size(self) -> int:
        return sum(b.size for b in self.blocks)

    def flatten(self) -> np.ndarray:
        return np.concatenate(self.blocks)

    def dot(self, other: "TruncatedFeature") -> float:
        if self.depth != other.depth:
            raise ValidationError("features have different depths")
        return float(sum(np.dot(x, y) for x, y in zip(self.blocks, other.blocks)))


def feature_size(n: int, depth: int) -> int:
    """Number of entries ``n + n**2 + ... + n**depth``."""
    return sum(n**k for k in range(1, depth + 1))


def explicit_feature(
    A: IndicatorVector, depth: int, *, max_entries: int = DEFAULT_MAX_ENTRIES
) -> TruncatedFeature:
    """Depth-``depth`` truncation of the explicit feature of ``A``.

    Blocks are flattened in row-major (C) order, so entry ``(i0, ..., ik-1)``
    of block ``k`` sits at ``sum_l i_l * n**(k-1-l)``.
    """
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    size = feature_size(A.n, depth)
    if size > max_entries:
        raise ValidationError(
            f"feature of depth {depth} on {A.n} coordinates needs {size} entries, "
            f"over the budget of {max_entries}"
        )
    total = A.measure.total
    if not total > 0:
        raise ValidationError("total measure must be positive")
    scale = 1.0 / math.sqrt(total)
    root_w = np.sqrt(A.measure.weights)
    head = A.bits * root_w
    tail = (~A.bits) * root_w * scale

    blocks = []
    block = head * scale
    for _ in range(depth):
        blocks.append(block.ravel())
        block = np.multiply.outer(block, tail)
    return TruncatedFeature(depth=depth, blocks=tuple(blocks), scale=scale)


def _overlaps(A: IndicatorVector, B: IndicatorVector):
    if A.n != B.n or A.measure != B.measure:
        raise ValidationError("indicators must share the same measure")
    w = A.measure.weights
    inter = float(w[A.bits & B.bits].sum())
    union = float(w[A.bits | B.bits].sum())
    outside = float(w[~A.bits & ~B.bits].sum())
    return inter, union, outside, A.measure.total


def truncated_inner_product(A: IndicatorVector, B: IndicatorVector, depth: int) -> float:
    """Closed-form partial geometric sum matching ``explicit_feature`` dot products.

    >>> A = IndicatorVector.from_bits([1, 0])
    >>> truncated_inner_product(A, A, 3)
    0.875
    """
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    inter, union, outside, total = _overlaps(A, B)
    if union == 0:
        return 0.0
    r = outside / total
    # 1 - r == union / total; using the latter avoids cancellation
    return (inter / total) * (1.0 - r**depth) / (union / total)


def complement_ratio_max(bits: np.ndarray, mu=None) -> float:
    """Largest ``mu(~A & ~B) / mu(D)`` over row pairs with a nonempty union.

    Pairs of empty rows are skipped, their kernel is 0 by convention.
    """
    X = np.asarray(bits).astype(bool)
    if X.ndim != 2:
        raise ValidationError("expected a 2-d array of indicator rows")
    w = resolve_measure(mu, X.shape[1]).weights
    C = (~X).astype(np.float64)
    outside = (C * w) @ C.T
    union = w.sum() - outside
    mask = union > 0
    if not np.any(mask):
        return 0.0
    return float(outside[mask].max() / w.sum())


def default_depth(r_max: float, tol: float = 1e-9) -> int:
    """Smallest depth ``K >= 1`` with ``r_max**K <= tol``."""
    if not 0 <= r_max < 1:
        raise ValidationError(f"series ratio must lie in [0, 1), got {r_max}")
    if r_max == 0:
        return 1
    k = max(1, math.ceil(math.log(tol) / math.log(r_max)))
    while r_max**k > tol:
        k += 1
    while k > 1 and r_max ** (k - 1) <= tol:
        k -= 1
    return k
