"""Generalized Tanimoto kernel as a quotient F/G of piecewise-linear functions.

With the anchor ``a`` fixed, every coordinate ``j`` falls in one of six
regions determined by the signs of ``a_j`` and ``x_j`` and by the order of
``a_j`` and ``x_j``.  On each region the coordinate contributes a linear
function of ``x_j`` to both F (intersection) and G (union).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .core import _pair, _safe_ratio, weighted_sum

__all__ = [
    "PartitionLabel",
    "FGValue",
    "partition_indices",
    "evaluate_fg",
    "tanimoto_via_fg",
]


class PartitionLabel(IntEnum):
    POS_XNEG = 0  # a_j >= 0, x_j < 0
    POS_MID = 1  # a_j >= 0, 0 <= x_j < a_j
    POS_HIGH = 2  # a_j >= 0, a_j <= x_j
    NEG_LOW = 3  # a_j < 0, x_j < a_j
    NEG_MID = 4  # a_j < 0, a_j <= x_j < 0
    NEG_XPOS = 5  # a_j < 0, 0 <= x_j


# Per-label contribution c_a * a_j + c_x * x_j, indexed by label value.
_F_A = np.array([0.0, 0.0, 1.0, -1.0, 0.0, 0.0])
_F_X = np.array([0.0, 1.0, 0.0, 0.0, -1.0, 0.0])
_G_A = np.array([1.0, 1.0, 0.0, 0.0, -1.0, -1.0])
_G_X = np.array([-1.0, 0.0, 1.0, -1.0, 0.0, 1.0])


@dataclass(frozen=True)
class FGValue:
    f_value: float
    g_value: float
    f_subgradient: np.ndarray
    g_subgradient: np.ndarray
    labels: np.ndarray
    boundary: np.ndarray  # True where x_j == 0 or x_j == a_j


def _labels(a, x):
    pos = a >= 0
    return np.select(
        [
            pos & (x < 0),
            pos & (x < a),
            pos,
            x < a,
            x < 0,
        ],
        [0, 1, 2, 3, 4],
        default=5,
    ).astype(np.int8)


def _contributions(a, x, labels):
    f_terms = _F_A[labels] * a + _F_X[labels] * x
    g_terms = _G_A[labels] * a + _G_X[labels] * x
    return f_terms, g_terms


def _fg_batch(a, x, w, compensated=False):
    a, x = np.broadcast_arrays(a, x)
    labels = _labels(a, x)
    f_terms, g_terms = _contributions(a, x, labels)
    return weighted_sum(w, f_terms, compensated), weighted_sum(w, g_terms, compensated)


def _tanimoto_fg_batch(a, x, w, compensated=False):
    return _safe_ratio(*_fg_batch(a, x, w, compensated))


def partition_indices(a, x) -> list[PartitionLabel]:
    """Region label of every coordinate of ``x`` relative to the anchor ``a``.

    Ties go to the side that carries the non-strict inequality: ``x_j == a_j``
    with ``a_j >= 0`` is ``POS_HIGH``, ``x_j == 0`` with ``a_j < 0`` is
    ``NEG_XPOS``.
    """
    a, x, _ = _pair(a, x, None)
    return [PartitionLabel(int(v)) for v in _labels(a, x)]


def evaluate_fg(a, x, mu=None, *, compensated: bool = False) -> FGValue:
    """F, G and their subgradients with respect to ``x``.

    On a region boundary the subgradient reported is the derivative of the
    region the coordinate was assigned to, i.e. the one-sided derivative from
    the non-strict side; such coordinates are flagged in ``boundary``.
    """
    a, x, w = _pair(a, x, mu)
    labels = _labels(a, x)
    f_terms, g_terms = _contributions(a, x, labels)
    return FGValue(
        f_value=float(weighted_sum(w, f_terms, compensated)),
        g_value=float(weighted_sum(w, g_terms, compensated)),
        f_subgradient=w * _F_X[labels],
        g_subgradient=w * _G_X[labels],
        labels=labels,
        boundary=(x == 0) | (x == a),
    )


def tanimoto_via_fg(a, x, mu=None, *, compensated: bool = False) -> float:
    """``F(a, x) / G(a, x)``, or 0 when G vanishes."""
    a, x, w = _pair(a, x, mu)
    return float(_tanimoto_fg_batch(a, x, w, compensated))
