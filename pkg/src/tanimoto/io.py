"""CSV ingestion for feature, weight and target files, plus config files."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .core import Measure
from .errors import ValidationError
from .gram import Dataset

__all__ = [
    "REPRESENTATIONS",
    "parse_float",
    "parse_vector",
    "read_features",
    "read_weights",
    "read_targets",
    "align_targets",
    "coerce_representation",
    "write_features_csv",
    "read_config",
]

REPRESENTATIONS = ("binary", "count", "real")


def parse_float(text: str, where: str) -> float:
    """Locale-independent float parse that rejects NaN and infinities."""
    try:
        value = float(text.strip())
    except ValueError:
        raise ValidationError(f"{where}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise ValidationError(f"{where}: non-finite value {text!r}")
    return value


def parse_vector(text: str) -> np.ndarray:
    """Comma-separated vector literal such as ``"1,-1,0.5"``."""
    parts = [p for p in text.replace(" ", "").split(",")]
    if not parts or any(p == "" for p in parts):
        raise ValidationError(f"malformed vector literal {text!r}")
    return np.array([parse_float(p, f"vector {text!r}") for p in parts])


def _rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            yield lineno, [c.strip() for c in row]


def read_features(path, mu: Measure | None = None) -> Dataset:
    """Read an ``id,f1,...,fn`` feature file into a :class:`Dataset`.

    Errors name the file line and the column header of the offending cell.
    """
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise ValidationError(f"{path}: empty feature file") from None
    if len(header) < 2 or header[0].lower() != "id":
        raise ValidationError(f"{path}: header must be 'id,f1,...,fn', got {','.join(header)!r}")
    columns = header[1:]
    n = len(columns)
    ids, data = [], []
    for lineno, row in rows:
        if len(row) != n + 1:
            raise ValidationError(f"{path}: row {lineno} has {len(row) - 1} feature fields, expected {n}")
        ids.append(row[0])
        data.append([parse_float(v, f"{path}: row {lineno}, column {columns[j]!r}") for j, v in enumerate(row[1:])])
    if not data:
        raise ValidationError(f"{path}: no data rows")
    if len(set(ids)) != len(ids):
        seen = set()
        dup = next(i for i in ids if i in seen or seen.add(i))
        raise ValidationError(f"{path}: duplicate id {dup!r}")
    return Dataset(np.array(data), tuple(ids), mu)


def read_weights(path, n: int) -> Measure:
    """Read an ``index,weight`` file; indices run from 1 to ``n`` like ``f1..fn``."""
    weights = np.full(n, np.nan)
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise ValidationError(f"{path}: empty weights file") from None
    if [h.lower() for h in header[:2]] != ["index", "weight"]:
        raise ValidationError(f"{path}: header must be 'index,weight'")
    for lineno, row in rows:
        if len(row) != 2:
            raise ValidationError(f"{path}: row {lineno} must have 2 fields")
        idx = parse_float(row[0], f"{path}: row {lineno}, column 'index'")
        if idx != int(idx) or not 1 <= idx <= n:
            raise ValidationError(f"{path}: row {lineno}: index {row[0]} outside 1..{n}")
        w = parse_float(row[1], f"{path}: row {lineno}, column 'weight'")
        if w < 0:
            raise ValidationError(f"{path}: row {lineno}: negative weight {w}")
        weights[int(idx) - 1] = w
    missing = np.flatnonzero(np.isnan(weights))
    if missing.size:
        raise ValidationError(f"{path}: no weight for indices {(missing + 1).tolist()[:10]}")
    return Measure(weights)


def read_targets(path) -> dict[str, float]:
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise ValidationError(f"{path}: empty targets file") from None
    if [h.lower() for h in header[:2]] != ["id", "target"]:
        raise ValidationError(f"{path}: header must be 'id,target'")
    out: dict[str, float] = {}
    for lineno, row in rows:
        if len(row) != 2:
            raise ValidationError(f"{path}: row {lineno} must have 2 fields")
        if row[0] in out:
            raise ValidationError(f"{path}: duplicate id {row[0]!r}")
        out[row[0]] = parse_float(row[1], f"{path}: row {lineno}, column 'target'")
    return out


def align_targets(data: Dataset, targets: dict[str, float]) -> tuple[Dataset, np.ndarray]:
    """Restrict ``data`` to rows with a target and return the matching target vector."""
    unknown = [i for i in targets if i not in set(data.ids)]
    if unknown:
        raise ValidationError(f"{len(unknown)} target ids not in the feature file, e.g. {unknown[:5]}")
    rows = [i for i, rid in enumerate(data.ids) if rid in targets]
    if not rows:
        raise ValidationError("no feature rows have targets")
    sub = data if len(rows) == data.m else data.subset(rows)
    return sub, np.array([targets[rid] for rid in sub.ids])


def coerce_representation(X: np.ndarray, kind: str) -> np.ndarray:
    """Map a fingerprint matrix to the binary, count or real representation.

    ``binary`` marks nonzero entries; ``count`` keeps values but requires
    nonnegative integers; ``real`` is the identity.
    """
    X = np.asarray(X, dtype=np.float64)
    if kind == "binary":
        return (X != 0).astype(np.float64)
    if kind == "count":
        bad = np.argwhere((X < 0) | (X != np.round(X)))
        if bad.size:
            i, j = bad[0]
            raise ValidationError(f"count representation needs nonnegative integers; row {i}, column {j} is {X[i, j]}")
        return X.copy()
    if kind == "real":
        return X.copy()
    raise ValidationError(f"unknown representation {kind!r}; expected one of {REPRESENTATIONS}")


def write_features_csv(path, ids, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["id", *header]) + "\n")
        for rid, row in zip(ids, rows):
            fh.write(",".join([rid, *(repr(float(v)) for v in row)]) + "\n")


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment.  Keys use flag spelling."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}: line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out
