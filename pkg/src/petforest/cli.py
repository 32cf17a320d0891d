"""Command-line interface: train, predict, benchmark, ablate, liftchart.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable/invalid input
files, incompatible model), 3 internal error.  All randomness flows from the
explicit ``--seed`` flags, so identical invocations produce identical files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .dataset import Dataset, filter_classes, load_csv, load_features_csv
from .ensemble import (
    build_ensemble,
    deserialize_model,
    oob_classify_training_set,
    serialize_model,
)
from .errors import DataError, ModelFormatError, UsageError
from .estimators import (
    EstimatorKind,
    EstimatorOptions,
    Smoothing,
    bpets_predict_batch,
    build_mobesp_matrices,
    ebpets_predict_batch,
    mobesp_predict_batch,
)
from .harness import (
    DatasetSpec,
    ExperimentConfig,
    ablation_grid,
    config_from_json,
    emit_report,
    run_experiment,
)
from .metrics import ScoredSet, lift_curve
from .tree import TreeConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _label_arg(text: str) -> int | str:
    return int(text) if text.lstrip("-").isdigit() else text


def _classes_arg(text: str) -> tuple[str, str]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2 or not all(parts):
        raise UsageError(f"--classes expects two comma-separated labels, got {text!r}")
    return parts[0], parts[1]


def _estimator_options(args: argparse.Namespace) -> EstimatorOptions:
    kind = EstimatorKind(args.estimator)
    if kind == EstimatorKind.BPETS:
        if args.no_smoothing or args.m is not None:
            raise UsageError("bpets always uses Laplace smoothing; drop --no-smoothing/--m")
        return EstimatorOptions(kind=kind, alpha=args.alpha)
    if args.no_smoothing and args.m is not None:
        raise UsageError("--no-smoothing and --m are contradictory")
    smoothing = (
        Smoothing.NONE
        if args.no_smoothing
        else Smoothing.M_ESTIMATE
        if args.m is not None
        else Smoothing.LAPLACE
    )
    include_oob = kind == EstimatorKind.EBPETS and not args.no_oob
    return EstimatorOptions(
        kind=kind, include_oob=include_oob, smoothing=smoothing, m=args.m, alpha=args.alpha
    )


def _options_to_dict(opts: EstimatorOptions) -> dict:
    return {
        "kind": opts.kind.value,
        "include_oob": opts.include_oob,
        "smoothing": opts.smoothing.value,
        "m": opts.m,
        "priors": list(opts.priors) if opts.priors else None,
        "alpha": opts.alpha,
    }


def _options_from_dict(doc: dict | None) -> EstimatorOptions:
    if doc is None:
        return EstimatorOptions(kind=EstimatorKind.BPETS)
    return EstimatorOptions(
        kind=EstimatorKind(doc["kind"]),
        include_oob=bool(doc.get("include_oob", False)),
        smoothing=Smoothing(doc.get("smoothing", "laplace")),
        m=doc.get("m"),
        priors=tuple(doc["priors"]) if doc.get("priors") else None,
        alpha=float(doc.get("alpha", 1.0)),
    )


def _load_training_data(args: argparse.Namespace) -> Dataset:
    d = load_csv(args.data, args.label)
    if args.classes is not None:
        d = filter_classes(d, args.classes)
    return d


def _cmd_train(args: argparse.Namespace) -> int:
    opts = _estimator_options(args)
    d = _load_training_data(args)
    config = TreeConfig(random_features=args.random_features)
    ensemble = build_ensemble(d, args.trees, config, args.seed, n_jobs=args.jobs)
    matrices = None
    if opts.kind == EstimatorKind.MOBESP:
        oob = oob_classify_training_set(ensemble, d)
        matrices = build_mobesp_matrices(ensemble, d, oob, opts)
    serialize_model(
        ensemble,
        args.out,
        matrices=matrices,
        estimator_options=_options_to_dict(opts),
        class_names=d.class_names,
    )
    print(
        f"trained {opts.kind.value} model: {ensemble.num_trees} trees, "
        f"K={ensemble.num_classes}, D={ensemble.num_features} -> {args.out}"
    )
    return 0


def _predict_with_bundle(bundle, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    opts = _options_from_dict(bundle.estimator_options)
    if opts.kind == EstimatorKind.MOBESP:
        if bundle.matrices is None:
            raise ModelFormatError("model lacks the conditional matrices mobesp needs")
        return mobesp_predict_batch(bundle.ensemble, bundle.matrices, features)
    if opts.kind == EstimatorKind.BPETS:
        return bpets_predict_batch(bundle.ensemble, features)
    return ebpets_predict_batch(bundle.ensemble, features, opts)


def _cmd_predict(args: argparse.Namespace) -> int:
    bundle = deserialize_model(args.model)
    ensemble = bundle.ensemble
    if args.label is not None:
        d = load_csv(args.data, args.label)
        ensemble.check_compatible(d)
        features = d.features
    else:
        features, _ = load_features_csv(args.data)
        if features.shape[1] != ensemble.num_features:
            raise DataError(
                f"model expects {ensemble.num_features} features, data has {features.shape[1]}"
            )
    probs, votes = _predict_with_bundle(bundle, features)
    names = bundle.class_names or tuple(str(k) for k in range(ensemble.num_classes))
    with open(args.out, "w", newline="") as fh:
        fh.write(",".join([f"prob_{n}" for n in names] + ["vote", "argmax"]) + "\n")
        for row, vote in zip(probs, votes):
            cells = [repr(float(p)) for p in row]
            cells.append(names[int(vote)])
            cells.append(names[int(np.argmax(row))])
            fh.write(",".join(cells) + "\n")
    print(f"wrote {probs.shape[0]} predictions -> {args.out}")
    return 0


def _cmd_benchmark(args: argparse.Namespace) -> int:
    cfg = config_from_json(args.config)
    if args.jobs != 1:
        cfg = ExperimentConfig(
            datasets=cfg.datasets,
            estimators=cfg.estimators,
            trials=cfg.trials,
            trees=cfg.trees,
            test_fraction=cfg.test_fraction,
            master_seed=cfg.master_seed,
            confidence=cfg.confidence,
            n_jobs=args.jobs,
        )
    report = run_experiment(cfg, progress=lambda line: print(line, file=sys.stderr))
    written = emit_report(report, "csv", args.out)
    written += emit_report(report, "markdown", args.out)
    for path in written:
        print(f"wrote {path}")
    if report.errors:
        for ds, message in report.errors:
            print(f"dataset {ds} failed: {message}", file=sys.stderr)
        if not report.results:
            return 2
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    baseline, challengers = ablation_grid(args.direction)
    spec = DatasetSpec(
        path=args.data,
        label=args.label,
        classes=args.classes,
        id=Path(args.data).stem,
    )
    cfg = ExperimentConfig(
        datasets=(spec,),
        estimators=tuple([baseline] + challengers),
        trials=args.trials,
        trees=args.trees,
        test_fraction=args.test_fraction,
        master_seed=args.seed,
        confidence=args.confidence,
        n_jobs=args.jobs,
    )
    report = run_experiment(cfg, progress=lambda line: print(line, file=sys.stderr))
    if not report.results:
        for ds, message in report.errors:
            print(f"dataset {ds} failed: {message}", file=sys.stderr)
        return 2
    written = emit_report(report, "csv", args.out, baseline=baseline.name)
    written += emit_report(report, "markdown", args.out, baseline=baseline.name)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_liftchart(args: argparse.Namespace) -> int:
    bundle = deserialize_model(args.model)
    d = load_csv(args.data, args.label)
    bundle.ensemble.check_compatible(d)
    if bundle.class_names and str(args.class_ident) in bundle.class_names:
        k = bundle.class_names.index(str(args.class_ident))
    else:
        try:
            k = int(args.class_ident)
        except ValueError:
            raise DataError(
                f"unknown class {args.class_ident!r}; model classes are {bundle.class_names}"
            ) from None
        if not 0 <= k < bundle.ensemble.num_classes:
            raise DataError(f"class index {k} out of range")
    probs, _ = _predict_with_bundle(bundle, d.features)
    scored = ScoredSet(probs, d.labels, d.priors())
    fractions, lifts = lift_curve(scored, k)
    with open(args.out, "w", newline="") as fh:
        fh.write("fraction\tlift\n")
        for v, l in zip(fractions, lifts):
            fh.write(f"{repr(float(v))}\t{repr(float(l))}\n")
    print(f"wrote lift curve for class {args.class_ident} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="petforest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="grow a forest and save a model file")
    train.add_argument("--data", required=True, help="training CSV")
    train.add_argument("--label", required=True, type=_label_arg, help="label column (index or name)")
    train.add_argument("--classes", type=_classes_arg, default=None, help="keep two classes: a,b")
    train.add_argument("--trees", type=int, default=128, help="trees in the forest")
    train.add_argument("--seed", type=int, default=0, help="master seed")
    train.add_argument(
        "--estimator", required=True, choices=[k.value for k in EstimatorKind]
    )
    train.add_argument("--no-smoothing", action="store_true", help="use raw leaf frequencies")
    train.add_argument("--no-oob", action="store_true", help="exclude out-of-bag mass from leaves")
    train.add_argument(
        "--random-features", action="store_true", help="evaluate ceil(sqrt(D)) attributes per node"
    )
    train.add_argument("--alpha", type=float, default=1.0, help="out-of-bag weight")
    train.add_argument("--m", type=float, default=None, help="m-estimate smoothing weight")
    train.add_argument("--jobs", type=int, default=1, help="parallel tree builds")
    train.add_argument("--out", required=True, help="model file to write")
    train.set_defaults(func=_cmd_train)

    predict = sub.add_parser("predict", help="score a CSV with a saved model")
    predict.add_argument("--model", required=True)
    predict.add_argument("--data", required=True)
    predict.add_argument(
        "--label",
        type=_label_arg,
        default=None,
        help="label column to strip/validate (omit for feature-only files)",
    )
    predict.add_argument("--out", required=True, help="CSV of per-class probabilities")
    predict.set_defaults(func=_cmd_predict)

    benchmark = sub.add_parser("benchmark", help="run a configured benchmark grid")
    benchmark.add_argument("--config", required=True, help="JSON experiment config")
    benchmark.add_argument("--out", required=True, help="output directory")
    benchmark.add_argument("--jobs", type=int, default=1)
    benchmark.set_defaults(func=_cmd_benchmark)

    ablate = sub.add_parser("ablate", help="compare single-enhancement estimator variants")
    ablate.add_argument("--data", required=True)
    ablate.add_argument("--label", required=True, type=_label_arg)
    ablate.add_argument("--classes", type=_classes_arg, default=None)
    ablate.add_argument("--direction", required=True, choices=["add", "remove"])
    ablate.add_argument("--trials", type=int, default=100)
    ablate.add_argument("--trees", type=int, default=128)
    ablate.add_argument("--test-fraction", type=float, default=1.0 / 3.0)
    ablate.add_argument("--confidence", type=float, default=0.1)
    ablate.add_argument("--seed", type=int, default=0)
    ablate.add_argument("--jobs", type=int, default=1)
    ablate.add_argument("--out", required=True, help="output directory")
    ablate.set_defaults(func=_cmd_ablate)

    liftchart = sub.add_parser("liftchart", help="lift curve of one class on labeled data")
    liftchart.add_argument("--model", required=True)
    liftchart.add_argument("--data", required=True)
    liftchart.add_argument("--label", required=True, type=_label_arg)
    liftchart.add_argument("--class", dest="class_ident", required=True)
    liftchart.add_argument("--out", required=True, help="TSV of (fraction, lift) points")
    liftchart.set_defaults(func=_cmd_liftchart)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ModelFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except SystemExit:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
