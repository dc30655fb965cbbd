"""Gram matrices over a dataset, PSD checks, and Gram file formats."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Measure, resolve_measure
from .errors import ValidationError
from .spec import KernelSpec, prepare

__all__ = [
    "WORKERS_ENV",
    "Dataset",
    "GramMatrix",
    "PsdReport",
    "compute_gram",
    "check_psd",
    "write_gram_csv",
    "read_gram_csv",
    "write_gram_binary",
    "read_gram_binary",
    "format_float",
]

WORKERS_ENV = "TANIMOTO_WORKERS"
DEFAULT_PSD_TOL = 1e-8


@dataclass(frozen=True)
class Dataset:
    vectors: np.ndarray
    ids: tuple[str, ...]
    measure: Measure = None

    def __post_init__(self):
        X = np.array(self.vectors, dtype=np.float64, copy=True)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise ValidationError(f"dataset must be a nonempty m x n array, got shape {X.shape}")
        bad = np.argwhere(~np.isfinite(X))
        if bad.size:
            i, j = bad[0]
            raise ValidationError(f"non-finite value at row {i}, column {j}")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != X.shape[0]:
            raise ValidationError(f"{len(ids)} ids for {X.shape[0]} vectors")
        if len(set(ids)) != len(ids):
            raise ValidationError("dataset ids must be unique")
        X.setflags(write=False)
        object.__setattr__(self, "vectors", X)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "measure", resolve_measure(self.measure, X.shape[1]))

    @classmethod
    def from_array(cls, X, ids=None, mu=None) -> "Dataset":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if ids is None:
            ids = [str(i) for i in range(X.shape[0])]
        return cls(X, tuple(ids), mu)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.asarray(self.vectors.shape, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.vectors, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.measure.weights, dtype="<f8").tobytes())
        h.update("\x1f".join(self.ids).encode())
        return h.hexdigest()

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.vectors[rows], tuple(self.ids[i] for i in rows), self.measure)


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    ids: tuple[str, ...]
    spec: KernelSpec
    dataset_digest: str
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def sidecar(self) -> dict:
        return {
            "m": self.m,
            "ids": list(self.ids),
            "spec": self.spec.to_dict(),
            "digest": self.dataset_digest,
            **self.meta,
        }


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def compute_gram(data: Dataset, spec: KernelSpec, workers: int | None = None) -> GramMatrix:
    """Kernel values between all pairs of rows of ``data``.

    Only the upper triangle is evaluated; it is mirrored into the lower one.
    Rows are split into blocks that run on a thread pool.  Every entry is
    computed by the same code path whatever the number of workers, so the
    result is bitwise independent of ``workers``.
    """
    workers = _default_workers() if workers is None else max(1, int(workers))
    prepared = prepare(spec, data.vectors, data.measure.weights)
    m = data.m
    K = np.empty((m, m))

    def fill(rows: range) -> None:
        for i in rows:
            K[i, i:] = prepared.row(i, i)

    if workers == 1 or m < 2:
        fill(range(m))
    else:
        # interleave rows: row i costs m - i evaluations
        blocks = [range(w, m, workers) for w in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, blocks))

    iu = np.triu_indices(m, 1)
    K[iu[1], iu[0]] = K[iu]
    meta = {}
    if prepared.basis is not None:
        meta["basis_size"] = len(prepared.basis)
    return GramMatrix(K, data.ids, spec, data.digest(), meta)


@dataclass(frozen=True)
class PsdReport:
    min_eigenvalue: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {"min_eigenvalue": self.min_eigenvalue, "tol": self.tol, "pass": self.passed}


def check_psd(g, tol: float = DEFAULT_PSD_TOL) -> PsdReport:
    """Smallest eigenvalue of a symmetric matrix; passes iff it is ``>= -tol``."""
    K = g.values if isinstance(g, GramMatrix) else np.asarray(g, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {K.shape}")
    if not np.array_equal(K, K.T):
        raise ValidationError("matrix is not symmetric")
    lam = float(np.linalg.eigvalsh(K)[0])
    return PsdReport(lam, tol, lam >= -tol)


# -- file formats -----------------------------------------------------------


def format_float(x: float) -> str:
    """Shortest decimal that round-trips to the same double."""
    return repr(float(x))


def write_gram_csv(path, gram: GramMatrix) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["id", *gram.ids]) + "\n")
        for row_id, row in zip(gram.ids, gram.values):
            fh.write(",".join([row_id, *map(format_float, row)]) + "\n")


def read_gram_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\r\n").split(",")
        ids = tuple(header[1:])
        rows = []
        for line in fh:
            parts = line.rstrip("\r\n").split(",")
            rows.append([float(v) for v in parts[1:]])
    return ids, np.array(rows, dtype=np.float64).reshape(len(ids), len(ids))


def write_gram_binary(prefix, gram: GramMatrix, extra: dict | None = None) -> tuple[Path, Path]:
    """Raw little-endian float64 matrix at ``prefix.bin`` plus ``prefix.json`` sidecar."""
    prefix = Path(prefix)
    bin_path = prefix.with_name(prefix.name + ".bin")
    json_path = prefix.with_name(prefix.name + ".json")
    np.ascontiguousarray(gram.values, dtype="<f8").tofile(bin_path)
    sidecar = gram.sidecar()
    if extra:
        sidecar.update(extra)
    json_path.write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    return bin_path, json_path


def read_gram_binary(prefix) -> tuple[np.ndarray, dict]:
    prefix = Path(prefix)
    sidecar = json.loads(prefix.with_name(prefix.name + ".json").read_text(encoding="utf-8"))
    m = int(sidecar["m"])
    values = np.fromfile(prefix.with_name(prefix.name + ".bin"), dtype="<f8")
    if values.size != m * m:
        raise ValidationError(f"binary Gram file has {values.size} values, expected {m * m}")
    return values.reshape(m, m).astype(np.float64), sidecar
