"""Tanimoto kernel stacked on an arbitrary base kernel.

Each input is mapped to the vector of its base-kernel values against a fixed
basis; the generalized Tanimoto kernel is then applied to those vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import _general_minmax_batch, as_vector
from .errors import ValidationError

__all__ = [
    "BaseKernel",
    "Basis",
    "DEFAULT_BASIS_SIZE",
    "basis_feature",
    "basis_features",
    "composed_tanimoto",
]

DEFAULT_BASIS_SIZE = 64

_KINDS = {"linear", "polynomial", "gaussian"}
_ALIASES = {"poly": "polynomial", "rbf": "gaussian"}


@dataclass(frozen=True)
class BaseKernel:
    kind: str = "gaussian"
    degree: int = 2
    offset: float = 0.0
    bandwidth: float = 1.0

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in _KINDS:
            raise ValidationError(f"unknown base kernel {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValidationError(f"polynomial degree must be an integer >= 1, got {self.degree}")
        if kind == "gaussian" and not self.bandwidth > 0:
            raise ValidationError(f"bandwidth must be positive, got {self.bandwidth}")

    def matrix(self, X, Y) -> np.ndarray:
        """Base-kernel values between the rows of ``X`` and the rows of ``Y``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if X.shape[1] != Y.shape[1]:
            raise ValidationError(f"dimension mismatch: {X.shape[1]} != {Y.shape[1]}")
        if self.kind == "gaussian":
            # explicit differences keep k(x, x) == 1 exactly
            sq = np.empty((X.shape[0], Y.shape[0]))
            for i0 in range(0, X.shape[0], 256):
                diff = X[i0 : i0 + 256, None, :] - Y[None, :, :]
                sq[i0 : i0 + 256] = np.einsum("ijk,ijk->ij", diff, diff)
            return np.exp(-sq / (2.0 * self.bandwidth**2))
        inner = X @ Y.T
        if self.kind == "linear":
            return inner
        return (inner + self.offset) ** int(self.degree)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "degree": int(self.degree),
            "offset": float(self.offset),
            "bandwidth": float(self.bandwidth),
        }


@dataclass(frozen=True)
class Basis:
    elements: np.ndarray
    source: str = "explicit"
    seed: int | None = None

    def __post_init__(self):
        E = np.array(self.elements, dtype=np.float64, copy=True)
        if E.ndim == 1:
            E = E.reshape(1, -1)
        if E.ndim != 2 or E.shape[0] == 0 or E.shape[1] == 0:
            raise ValidationError("basis must be a nonempty set of vectors")
        if not np.all(np.isfinite(E)):
            raise ValidationError("basis elements must be finite")
        E.setflags(write=False)
        object.__setattr__(self, "elements", E)

    @classmethod
    def subsample(cls, data, size: int | None = None, seed: int = 0) -> "Basis":
        """Random rows of ``data`` drawn without replacement, reproducible from ``seed``."""
        data = np.atleast_2d(np.asarray(data, dtype=np.float64))
        m = data.shape[0]
        if size is None:
            size = min(DEFAULT_BASIS_SIZE, m)
        if not 1 <= size <= m:
            raise ValidationError(f"basis size must be in [1, {m}], got {size}")
        rng = np.random.default_rng(seed)
        rows = np.sort(rng.choice(m, size=size, replace=False))
        return cls(data[rows], source="subsample", seed=seed)

    def __len__(self) -> int:
        return self.elements.shape[0]

    @property
    def dim(self) -> int:
        return self.elements.shape[1]


def basis_features(X, basis: Basis, kernel: BaseKernel) -> np.ndarray:
    """Row-wise :func:`basis_feature` for a 2-d array."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != basis.dim:
        raise ValidationError(f"dimension mismatch: {X.shape[1]} != basis dimension {basis.dim}")
    return kernel.matrix(X, basis.elements)


def basis_feature(x, basis: Basis, kernel: BaseKernel) -> np.ndarray:
    x = as_vector(x, "x")
    return basis_features(x[None, :], basis, kernel)[0]


def composed_tanimoto(u, v, basis: Basis, kernel: BaseKernel, *, compensated: bool = False) -> float:
    """Generalized Tanimoto kernel of the basis-relative features of ``u`` and ``v``."""
    fu = basis_feature(u, basis, kernel)
    fv = basis_feature(v, basis, kernel)
    if not (np.all(np.isfinite(fu)) and np.all(np.isfinite(fv))):
        raise ValidationError("base kernel produced non-finite features")
    return float(_general_minmax_batch(fu, fv, np.ones(len(basis)), compensated))
