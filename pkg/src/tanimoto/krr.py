"""Kernel ridge regression on precomputed Gram matrices, with nested CV.

The evaluation protocol is repeated k-fold cross-validation.  For every outer
fold the ridge parameter is chosen by an inner k-fold CV over a fixed grid
(lowest pooled inner MSE, ties to the smaller value), the model is refit on
the whole outer-training part and scored on the held-out fold.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.stats import rankdata

from .errors import NumericalError, ValidationError
from .gram import Dataset, GramMatrix, compute_gram
from .spec import KernelSpec

__all__ = [
    "METRICS",
    "DEFAULT_LAMBDA_GRID",
    "KrrModel",
    "CvConfig",
    "FoldPlan",
    "FoldResult",
    "MetricsReport",
    "fit",
    "predict",
    "metrics",
    "make_folds",
    "cv_plan",
    "select_lambda",
    "nested_cv",
]

log = logging.getLogger(__name__)

METRICS = ("mse", "r2", "pearson", "spearman")
DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-6, 3, 13))


@dataclass(frozen=True)
class KrrModel:
    dual_coefficients: np.ndarray
    lam: float
    training_ids: tuple[str, ...] | None = None
    spec: KernelSpec | None = None
    jitter: float = 0.0
    residual: float = 0.0


def _check_square(K: np.ndarray) -> None:
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValidationError(f"Gram matrix must be square, got shape {K.shape}")
    if not np.allclose(K, K.T, rtol=1e-12, atol=1e-12):
        raise ValidationError("Gram matrix must be symmetric")


def fit(gram_train, y, lam: float, *, training_ids=None, spec: KernelSpec | None = None) -> KrrModel:
    """Solve ``(K + lam*I) alpha = y`` by Cholesky factorization.

    If the factorization fails, it is retried once with ``1e-10 * trace(K) / m``
    added to the diagonal; a second failure raises :class:`NumericalError`.
    """
    K = np.asarray(gram_train, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    _check_square(K)
    m = K.shape[0]
    if y.size != m:
        raise ValidationError(f"{y.size} targets for a {m} x {m} Gram matrix")
    if not lam > 0:
        raise ValidationError(f"regularization must be positive, got {lam}")

    A = K + lam * np.eye(m)
    jitter = 0.0
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError:
        jitter = 1e-10 * float(np.trace(K)) / m
        log.warning("Cholesky failed at lambda=%g; retrying with jitter %g", lam, jitter)
        A = A + jitter * np.eye(m)
        try:
            factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"K + lambda*I is not positive definite at lambda={lam}") from exc
    alpha = scipy.linalg.cho_solve(factor, y)
    residual = float(np.linalg.norm(A @ alpha - y))
    return KrrModel(alpha, float(lam), training_ids, spec, jitter, residual)


def predict(model: KrrModel, gram_cross) -> np.ndarray:
    """Predictions ``K_cross @ alpha`` for a (test x train) cross-kernel matrix."""
    Kc = np.atleast_2d(np.asarray(gram_cross, dtype=np.float64))
    if Kc.shape[1] != model.dual_coefficients.size:
        raise ValidationError(
            f"cross-kernel has {Kc.shape[1]} columns, model has {model.dual_coefficients.size} coefficients"
        )
    return Kc @ model.dual_coefficients


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        return None
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def metrics(y_true, y_pred) -> dict:
    """MSE, R^2, Pearson and Spearman correlation.

    Correlations (and R^2 for constant ``y_true``) are ``None`` when a
    variance is zero, since they are undefined there.

    >>> metrics([1, 2, 3], [1, 3, 2])["spearman"]
    0.5
    """
    yt = np.asarray(y_true, dtype=np.float64).reshape(-1)
    yp = np.asarray(y_pred, dtype=np.float64).reshape(-1)
    if yt.size == 0 or yt.size != yp.size:
        raise ValidationError("metrics need two nonempty sequences of equal length")
    err = yt - yp
    sse = float(err @ err)
    dev = yt - yt.mean()
    sst = float(dev @ dev)
    return {
        "mse": sse / yt.size,
        "r2": 1.0 - sse / sst if sst > 0 else None,
        "pearson": _pearson(yt, yp),
        "spearman": _pearson(rankdata(yt), rankdata(yp)),
    }


@dataclass(frozen=True)
class CvConfig:
    outer_folds: int = 5
    repeats: int = 3
    inner_folds: int = 5
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    seed: int = 0

    def __post_init__(self):
        grid = tuple(sorted(float(v) for v in self.lambda_grid))
        if not grid:
            raise ValidationError("lambda grid is empty")
        if grid[0] <= 0:
            raise ValidationError("lambda grid values must be positive")
        object.__setattr__(self, "lambda_grid", grid)
        if self.outer_folds < 2 or self.inner_folds < 2:
            raise ValidationError("need at least 2 outer and 2 inner folds")
        if self.repeats < 1:
            raise ValidationError("need at least one repeat")

    def to_dict(self) -> dict:
        return {
            "outer_folds": self.outer_folds,
            "repeats": self.repeats,
            "inner_folds": self.inner_folds,
            "lambda_grid": list(self.lambda_grid),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class FoldPlan:
    repeat: int
    fold: int
    train: np.ndarray
    test: np.ndarray
    inner: tuple[tuple[np.ndarray, np.ndarray], ...]


def make_folds(indices, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffle ``indices`` and split them into ``k`` nearly equal folds."""
    perm = rng.permutation(np.asarray(indices))
    return [np.sort(f) for f in np.array_split(perm, k)]


def cv_plan(m: int, cfg: CvConfig) -> list[FoldPlan]:
    """All outer and inner splits; deterministic given ``cfg.seed``."""
    if m < cfg.outer_folds:
        raise ValidationError(f"{m} samples is fewer than {cfg.outer_folds} outer folds")
    plans = []
    for r in range(cfg.repeats):
        outer = make_folds(np.arange(m), cfg.outer_folds, np.random.default_rng([cfg.seed, r]))
        for f, test in enumerate(outer):
            train = np.sort(np.concatenate([o for g, o in enumerate(outer) if g != f]))
            if train.size < cfg.inner_folds:
                raise ValidationError(f"outer-training size {train.size} < {cfg.inner_folds} inner folds")
            inner_rng = np.random.default_rng([cfg.seed, r, f + 1])
            inner_folds = make_folds(train, cfg.inner_folds, inner_rng)
            inner = tuple(
                (np.sort(np.concatenate([o for h, o in enumerate(inner_folds) if h != g])), itest)
                for g, itest in enumerate(inner_folds)
            )
            plans.append(FoldPlan(r, f, train, test, inner))
    return plans


def select_lambda(K: np.ndarray, y: np.ndarray, inner, grid) -> tuple[float, list[float]]:
    """Grid value with the lowest pooled inner-CV MSE; ties go to the smaller value."""
    scores = []
    for lam in grid:
        sse = 0.0
        count = 0
        for itrain, itest in inner:
            model = fit(K[np.ix_(itrain, itrain)], y[itrain], lam)
            err = y[itest] - predict(model, K[np.ix_(itest, itrain)])
            sse += float(err @ err)
            count += itest.size
        scores.append(sse / count)
    best = 0
    for i, s in enumerate(scores):
        if s < scores[best]:
            best = i
    return float(grid[best]), scores


@dataclass(frozen=True)
class FoldResult:
    repeat: int
    fold: int
    lam: float
    test: np.ndarray
    predictions: np.ndarray
    metrics: dict
    inner_mse: list[float]

    def to_dict(self, ids=None) -> dict:
        return {
            "repeat": self.repeat,
            "fold": self.fold,
            "lambda": self.lam,
            "n_test": int(self.test.size),
            "test_ids": [ids[i] for i in self.test] if ids is not None else self.test.tolist(),
            "metrics": self.metrics,
            "inner_mse": self.inner_mse,
        }


def _summary(values) -> dict:
    vals = [v for v in values if v is not None]
    if not vals:
        return {"mean": None, "std": None, "n": 0}
    arr = np.asarray(vals)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std, "n": int(arr.size)}


@dataclass
class MetricsReport:
    """Per-fold, per-repeat and aggregate metrics of a nested CV run.

    ``aggregate`` holds the mean and sample standard deviation over all
    outer-fold evaluations (repeats x folds).  ``pooled`` holds metrics on the
    concatenated out-of-fold predictions of each repeat, and
    ``pooled_aggregate`` their mean and standard deviation over repeats.
    """

    folds: list[FoldResult]
    pooled: list[dict]
    aggregate: dict
    pooled_aggregate: dict
    config: CvConfig
    spec: KernelSpec | None = None
    ids: tuple[str, ...] | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict() if self.spec is not None else None,
            "config": self.config.to_dict(),
            "aggregate": self.aggregate,
            "pooled": self.pooled,
            "pooled_aggregate": self.pooled_aggregate,
            "folds": [f.to_dict(self.ids) for f in self.folds],
            **self.extra,
        }

    def table_row(self, label: str) -> str:
        cells = []
        for name in METRICS:
            s = self.aggregate[name]
            cells.append("n/a" if s["mean"] is None else f"{s['mean']:.3f} ({s['std']:.3f})")
        return f"{label:<16}" + "".join(f"{c:>16}" for c in cells)

    def table(self, label: str = "KRR") -> str:
        header = f"{'Model':<16}" + "".join(f"{h:>16}" for h in ("MSE", "R2", "Pearson", "Spearman"))
        return header + "\n" + self.table_row(label)


def _run_fold(K: np.ndarray, y: np.ndarray, plan: FoldPlan, grid) -> FoldResult:
    lam, scores = select_lambda(K, y, plan.inner, grid)
    model = fit(K[np.ix_(plan.train, plan.train)], y[plan.train], lam)
    pred = predict(model, K[np.ix_(plan.test, plan.train)])
    return FoldResult(plan.repeat, plan.fold, lam, plan.test, pred, metrics(y[plan.test], pred), scores)


def nested_cv(
    data: Dataset | None,
    y,
    spec: KernelSpec | None,
    cfg: CvConfig = CvConfig(),
    *,
    gram: GramMatrix | np.ndarray | None = None,
    workers: int = 1,
) -> MetricsReport:
    """Repeated k-fold CV of kernel ridge regression with inner-CV selection of lambda.

    The full Gram matrix is computed once (or taken from ``gram``) and every
    fold works on slices of it.  Folds may run on ``workers`` threads; the
    report does not depend on the worker count or scheduling.
    """
    if gram is None:
        if data is None or spec is None:
            raise ValidationError("need either a dataset and spec or a precomputed Gram matrix")
        gram = compute_gram(data, spec)
    K = gram.values if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=np.float64)
    _check_square(K)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != K.shape[0]:
        raise ValidationError(f"{y.size} targets for {K.shape[0]} samples")
    if not np.all(np.isfinite(y)):
        raise ValidationError("targets must be finite")

    plans = cv_plan(K.shape[0], cfg)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            folds = list(pool.map(lambda p: _run_fold(K, y, p, cfg.lambda_grid), plans))
    else:
        folds = [_run_fold(K, y, p, cfg.lambda_grid) for p in plans]

    pooled = []
    for r in range(cfg.repeats):
        rf = [f for f in folds if f.repeat == r]
        idx = np.concatenate([f.test for f in rf])
        pred = np.concatenate([f.predictions for f in rf])
        pooled.append(metrics(y[idx], pred))

    aggregate = {k: _summary([f.metrics[k] for f in folds]) for k in METRICS}
    pooled_aggregate = {k: _summary([p[k] for p in pooled]) for k in METRICS}
    ids = data.ids if data is not None else (gram.ids if isinstance(gram, GramMatrix) else None)
    if spec is None and isinstance(gram, GramMatrix):
        spec = gram.spec
    return MetricsReport(folds, pooled, aggregate, pooled_aggregate, cfg, spec, ids)
