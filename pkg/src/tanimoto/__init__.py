"""Generalized Tanimoto (MinMax) kernels for binary, nonnegative and real vectors.

Also provides the truncated explicit feature map, a kernel composed on a
base kernel, a smooth approximation, Gram matrices, and kernel ridge
regression with nested cross-validation.
"""

__version__ = "0.1.0"

from .core import (
    Measure,
    general_intersection,
    general_tanimoto_l1,
    general_tanimoto_minmax,
    intersection_kernel,
    jaccard_binary,
    minmax_kernel,
)
from .composed import BaseKernel, Basis, basis_feature, composed_tanimoto
from .errors import NumericalError, TanimotoError, ValidationError
from .feature_map import IndicatorVector, explicit_feature, truncated_inner_product
from .gram import Dataset, GramMatrix, check_psd, compute_gram
from .krr import CvConfig, KrrModel, fit, metrics, nested_cv, predict
from .piecewise import PartitionLabel, evaluate_fg, partition_indices, tanimoto_via_fg
from .smooth import smooth_tanimoto, soft_max, soft_min
from .spec import KernelSpec

__all__ = [
    "Measure",
    "jaccard_binary",
    "intersection_kernel",
    "minmax_kernel",
    "general_intersection",
    "general_tanimoto_minmax",
    "general_tanimoto_l1",
    "PartitionLabel",
    "partition_indices",
    "evaluate_fg",
    "tanimoto_via_fg",
    "IndicatorVector",
    "explicit_feature",
    "truncated_inner_product",
    "BaseKernel",
    "Basis",
    "basis_feature",
    "composed_tanimoto",
    "soft_max",
    "soft_min",
    "smooth_tanimoto",
    "KernelSpec",
    "Dataset",
    "GramMatrix",
    "compute_gram",
    "check_psd",
    "KrrModel",
    "CvConfig",
    "fit",
    "predict",
    "metrics",
    "nested_cv",
    "TanimotoError",
    "ValidationError",
    "NumericalError",
]
