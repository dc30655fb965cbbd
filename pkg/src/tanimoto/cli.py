"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data validation error, 3 numerical
failure.  Options may also come from ``--config FILE`` (``key = value`` lines
using the long flag names); explicit flags take precedence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .composed import BaseKernel, Basis, composed_tanimoto
from .core import general_tanimoto_l1, general_tanimoto_minmax, jaccard_binary, minmax_kernel
from .errors import NumericalError, ValidationError
from .feature_map import (
    DEFAULT_MAX_ENTRIES,
    IndicatorVector,
    complement_ratio_max,
    default_depth,
    explicit_feature,
    feature_size,
)
from .gram import WORKERS_ENV, Dataset, check_psd, compute_gram, write_gram_binary, write_gram_csv
from .io import (
    REPRESENTATIONS,
    align_targets,
    coerce_representation,
    parse_vector,
    read_config,
    read_features,
    read_targets,
    read_weights,
    write_features_csv,
)
from .krr import CvConfig, DEFAULT_LAMBDA_GRID, nested_cv
from .piecewise import tanimoto_via_fg
from .smooth import smooth_tanimoto
from .spec import IMPLS, KINDS, KernelSpec

log = logging.getLogger("tanimoto")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _kernel_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("kernel")
    g.add_argument("--kernel", choices=KINDS, default=None,
                   help="kernel variant (default: general; smooth if --smooth-t, composed if --base-kernel)")
    g.add_argument("--impl", choices=IMPLS, default="minmax",
                   help="formulation of the general kernel")
    g.add_argument("--smooth-t", type=float, default=None, help="temperature of the smooth kernel")
    g.add_argument("--smooth-mode", choices=("lse", "literal", "paper"), default="lse",
                   help="lse (default) or the literal composite formula; paper is an alias of literal")
    g.add_argument("--base-kernel", choices=("linear", "poly", "rbf"), default=None)
    g.add_argument("--degree", type=int, default=2, help="polynomial base kernel degree")
    g.add_argument("--offset", type=float, default=0.0, help="polynomial base kernel offset")
    g.add_argument("--bandwidth", type=float, default=1.0, help="rbf base kernel bandwidth")
    g.add_argument("--basis-size", type=int, default=None, help="basis size (default min(64, m))")
    g.add_argument("--basis-seed", type=int, default=None, help="basis seed (default: --seed)")
    g.add_argument("--compensated", action="store_true", help="compensated summation")
    d = p.add_argument_group("data")
    d.add_argument("--weights", type=Path, default=None, help="coordinate weights CSV (index,weight)")
    d.add_argument("--representation", choices=REPRESENTATIONS, default="real",
                   help="coerce features to binary / count / real")
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    p.add_argument("--workers", type=int, default=None, help=f"worker threads (default ${WORKERS_ENV} or 1)")
    p.add_argument("--config", type=Path, default=None, help="key=value config file")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = _kernel_options()
    parser = _Parser(prog="tanimoto", description="Generalized Tanimoto kernels and KRR benchmarks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    p = sub.add_parser("kernel", parents=[common], help="evaluate the kernel on two vectors")
    p.add_argument("u", help="vector literal '1,-1,...' or an id from --features")
    p.add_argument("v", help="vector literal or id")
    p.add_argument("--features", type=Path, default=None, help="feature CSV for id lookup")
    subs["kernel"] = p

    p = sub.add_parser("gram", parents=[common], help="Gram matrix of a feature file")
    p.add_argument("features", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True, help="output prefix (.csv/.bin/.json)")
    p.add_argument("--check-psd", action="store_true", help="report the smallest eigenvalue")
    p.add_argument("--psd-tol", type=float, default=1e-8)
    subs["gram"] = p

    p = sub.add_parser("krr-cv", parents=[common], help="nested-CV kernel ridge regression")
    p.add_argument("features", type=Path)
    p.add_argument("targets", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True, help="JSON report path")
    p.add_argument("--summary", type=Path, default=None, help="text summary path (default: <output>.txt)")
    p.add_argument("--outer-folds", type=int, default=5)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--inner-folds", type=int, default=5)
    p.add_argument("--lambda-grid", default=None, help="comma-separated lambda values")
    p.add_argument("--label", default=None, help="row label of the summary table")
    subs["krr-cv"] = p

    p = sub.add_parser("features", parents=[common], help="truncated explicit features of binary rows")
    p.add_argument("features", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--depth", type=int, default=None, help="truncation depth K (default: r_max^K <= 1e-9)")
    p.add_argument("--max-entries", type=int, default=DEFAULT_MAX_ENTRIES,
                   help="memory budget in feature entries (rows x entries per row)")
    subs["features"] = p
    return parser, subs


def _apply_config(sub: argparse.ArgumentParser, path: Path) -> None:
    try:
        values = read_config(path)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"{path}: unknown option {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            continue
        try:
            value = action.type(raw) if action.type else raw
        except (TypeError, ValueError):
            raise UsageError(f"{path}: bad value {raw!r} for {key}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"{path}: {key} must be one of {list(action.choices)}")
        defaults[key] = value
    sub.set_defaults(**defaults)


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        _apply_config(subs[args.command], args.config)
        args = parser.parse_args(argv)
    return args


def spec_from_args(args) -> KernelSpec:
    kind = args.kernel
    if kind is None:
        if args.smooth_t is not None:
            kind = "smooth"
        elif args.base_kernel is not None:
            kind = "composed"
        else:
            kind = "general"
    base = None
    if kind == "composed":
        base = BaseKernel(args.base_kernel or "rbf", args.degree, args.offset, args.bandwidth)
    return KernelSpec(
        kind=kind,
        impl=args.impl,
        t=args.smooth_t,
        mode=args.smooth_mode,
        base=base,
        basis_size=args.basis_size,
        basis_seed=args.seed if args.basis_seed is None else args.basis_seed,
        compensated=args.compensated,
    )


def _load_dataset(args, path: Path) -> Dataset:
    data = read_features(path)
    if args.weights is not None:
        data = Dataset(data.vectors, data.ids, read_weights(args.weights, data.n))
    if args.representation != "real":
        data = Dataset(coerce_representation(data.vectors, args.representation), data.ids, data.measure)
    return data


def _resolve(token: str, data: Dataset | None) -> np.ndarray:
    if data is not None and token in data.ids:
        return data.vectors[data.ids.index(token)]
    try:
        return parse_vector(token)
    except ValidationError:
        if data is None:
            raise ValidationError(f"{token!r} is not a vector literal (pass --features to look up ids)") from None
        raise ValidationError(f"unknown id {token!r}") from None


def cmd_kernel(args) -> int:
    spec = spec_from_args(args)
    data = _load_dataset(args, args.features) if args.features is not None else None
    u = _resolve(args.u, data)
    v = _resolve(args.v, data)
    if args.representation != "real" and data is None:
        u, v = (coerce_representation(x[None], args.representation)[0] for x in (u, v))
    mu = data.measure if data is not None else None
    if args.weights is not None and data is None:
        mu = read_weights(args.weights, u.size)
    c = spec.compensated
    if spec.kind == "binary":
        value = jaccard_binary(u, v, mu, compensated=c)
    elif spec.kind == "minmax":
        value = minmax_kernel(u, v, mu, compensated=c)
    elif spec.kind == "general":
        fn = {"minmax": general_tanimoto_minmax, "l1": general_tanimoto_l1, "fg": tanimoto_via_fg}[spec.impl]
        value = fn(u, v, mu, compensated=c)
    elif spec.kind == "smooth":
        value = smooth_tanimoto(u, v, spec.t, spec.mode, mu, compensated=c)
    else:
        if data is None:
            raise UsageError("composed kernel needs --features to draw the basis from")
        if u.size != data.n or v.size != data.n:
            raise ValidationError("vector length does not match the feature file")
        basis = Basis.subsample(data.vectors, spec.basis_size, spec.basis_seed)
        value = composed_tanimoto(u, v, basis, spec.base, compensated=c)
    print(format(value, ".17g"))
    return EXIT_OK


def cmd_gram(args) -> int:
    spec = spec_from_args(args)
    data = _load_dataset(args, args.features)
    gram = compute_gram(data, spec, workers=args.workers)
    out = args.output
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out.with_name(out.name + ".csv")
    write_gram_csv(csv_path, gram)
    extra = {}
    status = EXIT_OK
    if args.check_psd:
        report = check_psd(gram, args.psd_tol)
        extra["psd"] = report.to_dict()
        print(json.dumps({"psd": report.to_dict()}))
        if not report.passed:
            if spec.exact:
                log.error("Gram matrix failed the PSD check: min eigenvalue %g", report.min_eigenvalue)
                status = EXIT_NUMERIC
            else:
                log.warning("smooth-kernel Gram matrix is not PSD (min eigenvalue %g)", report.min_eigenvalue)
    bin_path, json_path = write_gram_binary(out, gram, extra)
    log.info("wrote %s, %s, %s", csv_path, bin_path, json_path)
    return status


def cmd_krr_cv(args) -> int:
    spec = spec_from_args(args)
    data = _load_dataset(args, args.features)
    data, y = align_targets(data, read_targets(args.targets))
    grid = DEFAULT_LAMBDA_GRID
    if args.lambda_grid:
        grid = tuple(float(v) for v in parse_vector(args.lambda_grid))
    cfg = CvConfig(args.outer_folds, args.repeats, args.inner_folds, grid, args.seed)
    if data.m < cfg.outer_folds:
        raise ValidationError(f"{data.m} samples with targets; need at least {cfg.outer_folds}")
    gram = compute_gram(data, spec, workers=args.workers)
    workers = args.workers or 1
    report = nested_cv(data, y, spec, cfg, gram=gram, workers=workers)
    report.extra["representation"] = args.representation
    report.extra["dataset_digest"] = gram.dataset_digest
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    label = args.label or f"KRR + {args.representation.capitalize()}"
    table = report.table(label)
    summary_path = args.summary or args.output.with_suffix(".txt")
    summary_path.write_text(table + "\n", encoding="utf-8")
    print(table)
    return EXIT_OK


def _feature_header(n: int, depth: int) -> list[str]:
    return [f"b{k}_{i}" for k in range(1, depth + 1) for i in range(n**k)]


def cmd_features(args) -> int:
    data = read_features(args.features)
    mu = read_weights(args.weights, data.n) if args.weights is not None else data.measure
    X = data.vectors
    if args.representation == "binary":
        X = coerce_representation(X, "binary")
    if not np.all((X == 0) | (X == 1)):
        raise ValidationError("explicit features need binary input (use --representation binary to threshold)")
    depth = args.depth
    if depth is None:
        depth = default_depth(complement_ratio_max(X, mu))
        log.info("using depth %d", depth)
    if depth < 1:
        raise UsageError("--depth must be >= 1")
    per_row = feature_size(data.n, depth)
    total = per_row * data.m
    if total > args.max_entries:
        raise UsageError(
            f"depth {depth} needs {per_row} entries per row, {total} in total, "
            f"over the budget of {args.max_entries} (--max-entries)"
        )
    rows = (
        explicit_feature(IndicatorVector(x, mu), depth, max_entries=args.max_entries).flatten() for x in X
    )
    args.output.parent.mkdir(parents=True, exist_ok=True)
    write_features_csv(args.output, data.ids, _feature_header(data.n, depth), rows)
    return EXIT_OK


COMMANDS = {"kernel": cmd_kernel, "gram": cmd_gram, "krr-cv": cmd_krr_cv, "features": cmd_features}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"tanimoto: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"tanimoto: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"tanimoto: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"tanimoto: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"tanimoto: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"tanimoto: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
