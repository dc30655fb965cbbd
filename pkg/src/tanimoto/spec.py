"""Kernel selection: a serializable description of which kernel to evaluate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import core, piecewise, smooth
from .composed import Basis, BaseKernel, basis_features
from .errors import ValidationError

__all__ = ["KINDS", "IMPLS", "KernelSpec", "PreparedKernel", "prepare"]

KINDS = ("binary", "minmax", "general", "smooth", "composed")
IMPLS = ("minmax", "l1", "fg")
EXACT_KINDS = frozenset({"binary", "minmax", "general", "composed"})


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to evaluate, and with what parameters.

    ``impl`` picks the formulation of the general kernel (min/max sums, L1
    quotient or piecewise F/G); all three agree to rounding.  ``t`` and
    ``mode`` apply to ``kind="smooth"``; ``base``, ``basis_size`` and
    ``basis_seed`` to ``kind="composed"``.
    """

    kind: str = "general"
    impl: str = "minmax"
    t: float | None = None
    mode: str = "lse"
    base: BaseKernel | None = None
    basis_size: int | None = None
    basis_seed: int = 0
    compensated: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.impl not in IMPLS:
            raise ValidationError(f"unknown implementation {self.impl!r}; expected one of {IMPLS}")
        if self.kind == "smooth":
            if self.t is None or not self.t > 0:
                raise ValidationError("smooth kernel needs a positive temperature t")
            if self.mode not in smooth.MODES:
                raise ValidationError(f"unknown smoothing mode {self.mode!r}")
        if self.kind == "composed" and self.base is None:
            object.__setattr__(self, "base", BaseKernel())
        if self.basis_size is not None and self.basis_size < 1:
            raise ValidationError("basis size must be >= 1")

    @property
    def exact(self) -> bool:
        return self.kind in EXACT_KINDS

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "compensated": self.compensated}
        if self.kind == "general":
            out["impl"] = self.impl
        if self.kind == "smooth":
            out.update(t=self.t, mode=self.mode)
        if self.kind == "composed":
            out.update(base=self.base.to_dict(), basis_size=self.basis_size, basis_seed=self.basis_seed)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        d = dict(d)
        base = d.pop("base", None)
        if base is not None:
            d["base"] = BaseKernel(**base)
        return cls(**d)


@dataclass(frozen=True)
class PreparedKernel:
    """A spec bound to a dataset: transformed rows plus a row-batch evaluator."""

    spec: KernelSpec
    rows: np.ndarray
    weights: np.ndarray
    batch: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    basis: Basis | None = None

    def row(self, i: int, j0: int = 0) -> np.ndarray:
        """Kernel values between row ``i`` and rows ``j0:``."""
        return self.batch(self.rows[i], self.rows[j0:])


def prepare(spec: KernelSpec, X: np.ndarray, weights: np.ndarray) -> PreparedKernel:
    """Validate ``X`` against ``spec`` and bind the evaluator.

    For composed kernels the basis is drawn from the rows of ``X``.
    """
    X = np.asarray(X, dtype=np.float64)
    c = spec.compensated
    if spec.kind == "binary":
        if not np.all((X == 0) | (X == 1)):
            raise ValidationError("binary kernel requires all entries in {0, 1}")
        B = X != 0
        return PreparedKernel(spec, B, weights, lambda x, Y: core._jaccard_batch(x, Y, weights, c))
    if spec.kind == "minmax":
        if np.any(X < 0):
            raise ValidationError("minmax kernel requires nonnegative entries")
        return PreparedKernel(spec, X, weights, lambda x, Y: core._minmax_batch(x, Y, weights, c))
    if spec.kind == "general":
        fn = {
            "minmax": core._general_minmax_batch,
            "l1": core._general_l1_batch,
            "fg": piecewise._tanimoto_fg_batch,
        }[spec.impl]
        return PreparedKernel(spec, X, weights, lambda x, Y: fn(x, Y, weights, c))
    if spec.kind == "smooth":
        t, mode = float(spec.t), spec.mode
        return PreparedKernel(
            spec, X, weights, lambda x, Y: smooth._smooth_batch(x, Y, weights, t, mode, c)
        )
    # composed: the measure of the original coordinates does not enter
    basis = Basis.subsample(X, spec.basis_size, spec.basis_seed)
    Phi = basis_features(X, basis, spec.base)
    if not np.all(np.isfinite(Phi)):
        raise ValidationError("base kernel produced non-finite features")
    ones = np.ones(len(basis))
    return PreparedKernel(
        spec, Phi, ones, lambda x, Y: core._general_minmax_batch(x, Y, ones, c), basis=basis
    )
