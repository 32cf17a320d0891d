"""Repeated-holdout benchmark harness with paired significance testing.

For every dataset and trial the harness draws one random train/test split,
builds one forest per distinct tree configuration, scores every estimator on
the shared forests (so estimators differing only in estimation-time options
see identical trees), and records the four metrics.  Per-trial seeds derive
from ``(master_seed, dataset id, trial index)``, so any trial can be
reproduced in isolation and reruns are byte-identical.

Estimator pairs are compared per dataset with a two-sided paired t-test on
the per-trial metric differences; a difference is significant when its
p-value is below the configured confidence threshold (default 0.1), and
significant differences become WIN or LOSS according to the metric's
direction.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .dataset import Dataset, filter_classes, holdout_split, load_csv
from .ensemble import Ensemble, build_ensemble, oob_classify_training_set
from .errors import DataError, UsageError
from .estimators import (
    EstimatorKind,
    EstimatorOptions,
    Smoothing,
    bpets_predict_batch,
    build_mobesp_matrices,
    ebpets_predict_batch,
    mobesp_predict_batch,
)
from .metrics import MetricReport, ScoredSet, lift_curve, score
from .seeding import derive_seed, rng_from
from .tree import TreeConfig

METRIC_NAMES = ("zero_one_mse", "av_log_loss", "aulc", "delta_acc")
HIGHER_IS_BETTER = {"zero_one_mse": False, "av_log_loss": False, "aulc": True, "delta_acc": True}

SEED_DERIVATION = "trial_seed = seedseq(master_seed, sha256(dataset_id), trial_index)"
SIGNIFICANCE_RULE = (
    "two-sided paired t-test on per-trial differences; "
    "significant when p < confidence"
)


@dataclass(frozen=True)
class EstimatorSpec:
    """A named estimator: estimation-time options plus the forest flavor."""

    name: str
    options: EstimatorOptions
    random_features: bool = False

    def tree_config(self) -> TreeConfig:
        return TreeConfig(random_features=self.random_features)


def _preset(name: str) -> EstimatorSpec:
    opts = {
        # The three headline estimators.
        "bpets": (EstimatorOptions(kind=EstimatorKind.BPETS), False),
        "ebpets": (
            EstimatorOptions(
                kind=EstimatorKind.EBPETS, include_oob=True, smoothing=Smoothing.NONE
            ),
            True,
        ),
        "mobesp": (EstimatorOptions(kind=EstimatorKind.MOBESP), True),
        # Single-enhancement variants used by the ablation grids.
        "bpets+oob": (
            EstimatorOptions(
                kind=EstimatorKind.EBPETS, include_oob=True, smoothing=Smoothing.LAPLACE
            ),
            False,
        ),
        "bpets+nosmooth": (
            EstimatorOptions(
                kind=EstimatorKind.EBPETS, include_oob=False, smoothing=Smoothing.NONE
            ),
            False,
        ),
        "bpets+rf": (
            EstimatorOptions(
                kind=EstimatorKind.EBPETS, include_oob=False, smoothing=Smoothing.LAPLACE
            ),
            True,
        ),
        "ebpets-oob": (
            EstimatorOptions(
                kind=EstimatorKind.EBPETS, include_oob=False, smoothing=Smoothing.NONE
            ),
            True,
        ),
        "ebpets-nosmooth": (
            EstimatorOptions(
                kind=EstimatorKind.EBPETS, include_oob=True, smoothing=Smoothing.LAPLACE
            ),
            True,
        ),
        "ebpets-rf": (
            EstimatorOptions(
                kind=EstimatorKind.EBPETS, include_oob=True, smoothing=Smoothing.NONE
            ),
            False,
        ),
    }
    if name not in opts:
        raise UsageError(f"unknown estimator preset {name!r}; known: {sorted(opts)}")
    options, random_features = opts[name]
    return EstimatorSpec(name=name, options=options, random_features=random_features)


ESTIMATOR_PRESET_NAMES = (
    "bpets",
    "ebpets",
    "mobesp",
    "bpets+oob",
    "bpets+nosmooth",
    "bpets+rf",
    "ebpets-oob",
    "ebpets-nosmooth",
    "ebpets-rf",
)


def estimator_preset(name: str) -> EstimatorSpec:
    """Look up a named estimator configuration."""
    return _preset(name)


def ablation_grid(direction: str) -> tuple[EstimatorSpec, list[EstimatorSpec]]:
    """Baseline and challengers for enhancement ablations.

    ``add`` starts from the plain bagged baseline and switches each
    enhancement on individually (out-of-bag inclusion, smoothing omission,
    random feature selection), plus all three at once.  ``remove`` starts
    from the fully enhanced estimator and switches each off individually.
    """
    if direction == "add":
        return _preset("bpets"), [
            _preset("bpets+oob"),
            _preset("bpets+nosmooth"),
            _preset("bpets+rf"),
            _preset("ebpets"),
        ]
    if direction == "remove":
        return _preset("ebpets"), [
            _preset("ebpets-oob"),
            _preset("ebpets-nosmooth"),
            _preset("ebpets-rf"),
        ]
    raise UsageError(f"direction must be 'add' or 'remove', got {direction!r}")


@dataclass(frozen=True)
class DatasetSpec:
    """One dataset to benchmark: a CSV path or a preloaded Dataset."""

    path: str | None = None
    label: int | str = 0
    classes: tuple[str, str] | None = None
    id: str | None = None
    data: Dataset | None = None

    def dataset_id(self) -> str:
        if self.id:
            return self.id
        if self.path:
            stem = Path(self.path).stem
            return f"{stem}[{self.classes[0]},{self.classes[1]}]" if self.classes else stem
        return "dataset"

    def load(self) -> Dataset:
        if self.data is not None:
            d = self.data
        elif self.path is not None:
            d = load_csv(self.path, self.label)
        else:
            raise DataError(f"dataset spec {self.dataset_id()!r} has neither path nor data")
        if self.classes is not None:
            d = filter_classes(d, self.classes)
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a benchmark run depends on."""

    datasets: tuple[DatasetSpec, ...]
    estimators: tuple[EstimatorSpec, ...]
    trials: int = 100
    trees: int = 128
    test_fraction: float = 1.0 / 3.0
    master_seed: int = 0
    confidence: float = 0.1
    n_jobs: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if not self.datasets:
            raise UsageError("config needs at least one dataset")
        if not self.estimators:
            raise UsageError("config needs at least one estimator")
        names = [e.name for e in self.estimators]
        if len(set(names)) != len(names):
            raise UsageError(f"estimator names must be unique, got {names}")
        if self.trials < 1:
            raise UsageError(f"trials must be >= 1, got {self.trials}")
        if self.trees < 1:
            raise UsageError(f"trees must be >= 1, got {self.trees}")
        if not 0.0 < self.test_fraction < 1.0:
            raise UsageError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if not 0.0 < self.confidence < 1.0:
            raise UsageError(f"confidence must lie in (0, 1), got {self.confidence}")


@dataclass(frozen=True)
class TrialResult:
    """Metrics for one estimator on one trial's test split."""

    dataset: str
    trial: int
    estimator: str
    metrics: MetricReport
    duration_s: float
    split_digest: str


class Verdict(str, enum.Enum):
    WIN = "WIN"
    TIE = "TIE"
    LOSS = "LOSS"


@dataclass(frozen=True)
class WtlCell:
    """Outcome of one paired comparison on one metric (b versus a)."""

    metric: str
    verdict: Verdict
    mean_a: float
    mean_b: float
    t_statistic: float


def paired_t_test(
    a: Sequence[float], b: Sequence[float], confidence: float, metric: str = "zero_one_mse"
) -> WtlCell:
    """Compare paired per-trial values of ``b`` against ``a`` on one metric.

    The verdict is WIN when the difference is significant and ``b`` is better
    in the metric's direction, LOSS when significant the other way, TIE
    otherwise.  All-zero differences are a TIE; identical non-zero
    differences (zero variance) are treated as unambiguously significant.
    """
    if metric not in HIGHER_IS_BETTER:
        raise ValueError(f"unknown metric {metric!r}; known: {sorted(HIGHER_IS_BETTER)}")
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape or av.ndim != 1 or av.size < 2:
        raise ValueError(f"need two equal-length series of >= 2 trials, got {av.shape}, {bv.shape}")
    d = bv - av
    mean_d = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        significant = mean_d != 0.0
        t_stat = math.copysign(math.inf, mean_d) if significant else 0.0
    else:
        t_stat = mean_d / (sd / math.sqrt(d.size))
        p = 2.0 * float(stats.t.sf(abs(t_stat), df=d.size - 1))
        significant = p < confidence
    if not significant:
        verdict = Verdict.TIE
    else:
        improved = mean_d > 0 if HIGHER_IS_BETTER[metric] else mean_d < 0
        verdict = Verdict.WIN if improved else Verdict.LOSS
    return WtlCell(
        metric=metric,
        verdict=verdict,
        mean_a=float(av.mean()),
        mean_b=float(bv.mean()),
        t_statistic=float(t_stat),
    )


def _metric_value(report: MetricReport, metric: str) -> float:
    return getattr(report, metric)


@dataclass(frozen=True)
class WtlTable:
    """Per-dataset verdicts and summary counts for one estimator pair."""

    baseline: str
    challenger: str
    rows: dict[str, dict[str, WtlCell]]  # dataset -> metric -> cell
    summary: dict[str, tuple[int, int, int]]  # metric -> (wins, ties, losses)


def win_tie_loss_table(
    results: Sequence[TrialResult],
    baseline: str,
    challenger: str,
    confidence: float = 0.1,
) -> WtlTable:
    """Paired per-dataset comparison of two estimators over all four metrics.

    Raises if any (dataset, trial) pair lacks a result for either estimator —
    unpaired comparisons would not be valid.
    """
    series: dict[str, dict[str, dict[int, MetricReport]]] = {}
    for r in results:
        if r.estimator in (baseline, challenger):
            series.setdefault(r.dataset, {}).setdefault(r.estimator, {})[r.trial] = r.metrics
    if not series:
        raise ValueError(f"no results for estimators {baseline!r} / {challenger!r}")
    rows: dict[str, dict[str, WtlCell]] = {}
    for dataset in sorted(series):
        per_est = series[dataset]
        for est in (baseline, challenger):
            if est not in per_est:
                raise ValueError(f"estimator {est!r} has no results for dataset {dataset!r}")
        trials_a, trials_b = set(per_est[baseline]), set(per_est[challenger])
        if trials_a != trials_b:
            odd = sorted(trials_a.symmetric_difference(trials_b))
            raise ValueError(
                f"dataset {dataset!r}: trials {odd} are missing for one of "
                f"{baseline!r}/{challenger!r}; comparisons must be paired"
            )
        order = sorted(trials_a)
        rows[dataset] = {
            metric: paired_t_test(
                [_metric_value(per_est[baseline][t], metric) for t in order],
                [_metric_value(per_est[challenger][t], metric) for t in order],
                confidence,
                metric,
            )
            for metric in METRIC_NAMES
        }
    summary = {}
    for metric in METRIC_NAMES:
        verdicts = [rows[ds][metric].verdict for ds in rows]
        summary[metric] = (
            sum(v == Verdict.WIN for v in verdicts),
            sum(v == Verdict.TIE for v in verdicts),
            sum(v == Verdict.LOSS for v in verdicts),
        )
    return WtlTable(baseline=baseline, challenger=challenger, rows=rows, summary=summary)


def _split_digest(train: Dataset, test: Dataset) -> str:
    h = hashlib.sha256()
    h.update(train.digest().encode())
    h.update(test.digest().encode())
    return h.hexdigest()[:16]


def run_trial(
    d: Dataset,
    cfg: ExperimentConfig,
    trial_seed: int,
    *,
    dataset_id: str = "dataset",
    trial_index: int = 0,
) -> list[TrialResult]:
    """One holdout split scored by every configured estimator.

    Estimators whose tree configuration matches share a single forest, so
    their comparison isolates the estimation rule; distinct configurations
    get separate forests seeded from the same trial seed.
    """
    results, _ = _run_trial_with_curves(
        d, cfg, trial_seed, dataset_id=dataset_id, trial_index=trial_index
    )
    return results


def _run_trial_with_curves(
    d: Dataset,
    cfg: ExperimentConfig,
    trial_seed: int,
    *,
    dataset_id: str = "dataset",
    trial_index: int = 0,
    collect_curves: bool = False,
) -> tuple[list[TrialResult], dict[tuple[str, int], tuple[np.ndarray, np.ndarray]]]:
    train, test = holdout_split(d, cfg.test_fraction, rng_from(trial_seed, "split"))
    digest = _split_digest(train, test)
    priors = train.priors()

    forests: dict[tuple, Ensemble] = {}
    oob_cache: dict[tuple, object] = {}
    for spec in cfg.estimators:
        key = spec.tree_config().build_key()
        if key not in forests:
            forest_seed = derive_seed(trial_seed, "forest", repr(key))
            forests[key] = build_ensemble(
                train, cfg.trees, spec.tree_config(), forest_seed, n_jobs=cfg.n_jobs
            )

    results: list[TrialResult] = []
    curves: dict[tuple[str, int], tuple[np.ndarray, np.ndarray]] = {}
    for spec in cfg.estimators:
        started = time.perf_counter()
        forest = forests[spec.tree_config().build_key()]
        if spec.options.kind == EstimatorKind.MOBESP:
            key = spec.tree_config().build_key()
            if key not in oob_cache:
                oob_cache[key] = oob_classify_training_set(forest, train)
            mats = build_mobesp_matrices(forest, train, oob_cache[key], spec.options)
            probs, votes = mobesp_predict_batch(forest, mats, test.features)
        elif spec.options.kind == EstimatorKind.BPETS:
            probs, votes = bpets_predict_batch(forest, test.features)
        else:
            probs, votes = ebpets_predict_batch(forest, test.features, spec.options)
        scored = ScoredSet(probs, test.labels, priors)
        report = score(scored, votes)
        results.append(
            TrialResult(
                dataset=dataset_id,
                trial=trial_index,
                estimator=spec.name,
                metrics=report,
                duration_s=time.perf_counter() - started,
                split_digest=digest,
            )
        )
        if collect_curves:
            for k in range(d.num_classes):
                curves[(spec.name, k)] = lift_curve(scored, k)
    return results, curves


@dataclass
class ExperimentReport:
    """Everything a benchmark run produced."""

    config: ExperimentConfig
    results: list[TrialResult]
    errors: list[tuple[str, str]] = field(default_factory=list)
    lift_curves: dict[tuple[str, str, int], tuple[np.ndarray, np.ndarray]] = field(
        default_factory=dict
    )  # (dataset, estimator, class) -> (fractions, lifts)
    dataset_info: dict[str, dict] = field(default_factory=dict)

    def estimator_names(self) -> list[str]:
        return [e.name for e in self.config.estimators]


def run_experiment(
    cfg: ExperimentConfig, progress: Callable[[str], None] | None = None
) -> ExperimentReport:
    """Run every (dataset, trial, estimator) cell of the configured grid.

    A failing dataset is recorded in ``errors`` and does not abort the rest.
    Lift curves are kept for each dataset's first trial.  ``progress``, if
    given, is called with a line of text after each completed dataset trial.
    """
    report = ExperimentReport(config=cfg, results=[])
    for spec in cfg.datasets:
        dataset_id = spec.dataset_id()
        try:
            d = spec.load()
            report.dataset_info[dataset_id] = {
                "examples": d.num_examples,
                "features": d.num_features,
                "classes": d.num_classes,
                "class_names": list(d.class_names) if d.class_names else None,
            }
            for trial in range(cfg.trials):
                trial_seed = derive_seed(cfg.master_seed, dataset_id, trial)
                rows, curves = _run_trial_with_curves(
                    d,
                    cfg,
                    trial_seed,
                    dataset_id=dataset_id,
                    trial_index=trial,
                    collect_curves=(trial == 0),
                )
                report.results.extend(rows)
                for (est, k), curve in curves.items():
                    report.lift_curves[(dataset_id, est, k)] = curve
                if progress is not None:
                    progress(f"{dataset_id}: trial {trial + 1}/{cfg.trials} done")
        except DataError as exc:
            report.errors.append((dataset_id, str(exc)))
            if progress is not None:
                progress(f"{dataset_id}: FAILED ({exc})")
    report.results.sort(key=lambda r: (r.dataset, r.trial, r.estimator))
    return report


# ---------------------------------------------------------------------------
# Report emission


def _fmt(value: float) -> str:
    return repr(float(value))


CSV_COLUMNS = (
    "dataset",
    "trial",
    "estimator",
    "zero_one_mse",
    "av_log_loss",
    "aulc",
    "delta_acc",
    "per_class_aulc",
    "split_digest",
)


_BARE_OPTS = EstimatorOptions(kind=EstimatorKind.BPETS)


def _require_report(report: "ExperimentReport | Sequence[TrialResult]") -> ExperimentReport:
    """Accept a full report or a bare result list (wrapped with a stub config)."""
    if isinstance(report, ExperimentReport):
        return report
    results = list(report)
    seen: list[str] = []
    datasets: list[str] = []
    for r in results:
        if r.estimator not in seen:
            seen.append(r.estimator)
        if r.dataset not in datasets:
            datasets.append(r.dataset)
    cfg = ExperimentConfig(
        datasets=tuple(DatasetSpec(id=ds) for ds in datasets),
        estimators=tuple(EstimatorSpec(name, _BARE_OPTS) for name in seen),
        trials=max((r.trial for r in results), default=0) + 1,
    )
    return ExperimentReport(
        config=cfg, results=sorted(results, key=lambda r: (r.dataset, r.trial, r.estimator))
    )


def mean_table(results: Sequence[TrialResult]) -> dict[tuple[str, str], dict[str, float]]:
    """Mean of each metric per (dataset, estimator), trials averaged."""
    groups: dict[tuple[str, str], list[MetricReport]] = {}
    for r in sorted(results, key=lambda r: (r.dataset, r.trial, r.estimator)):
        groups.setdefault((r.dataset, r.estimator), []).append(r.metrics)
    return {
        key: {m: float(np.mean([_metric_value(rep, m) for rep in reps])) for m in METRIC_NAMES}
        for key, reps in groups.items()
    }


def _safe_name(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in text)


def emit_report(
    report: "ExperimentReport | Sequence[TrialResult]",
    format: str,
    path: str | Path,
    *,
    baseline: str | None = None,
) -> list[Path]:
    """Write benchmark output files under directory ``path``.

    ``csv`` writes the per-trial table (stable column order, full-precision
    floats) plus one tab-separated lift-curve file per (dataset, estimator,
    class) when curves were collected.  ``markdown`` writes the aggregate
    summary: dataset inventory, mean metrics, and win/tie/loss tables of
    every estimator against the baseline (the first configured estimator by
    default).  Reruns with the same config and seed produce byte-identical
    files.
    """
    rep = _require_report(report)
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if format == "csv":
        target = out / "trials.csv"
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for r in sorted(rep.results, key=lambda r: (r.dataset, r.trial, r.estimator)):
                writer.writerow(
                    [
                        r.dataset,
                        r.trial,
                        r.estimator,
                        _fmt(r.metrics.zero_one_mse),
                        _fmt(r.metrics.av_log_loss),
                        _fmt(r.metrics.aulc),
                        _fmt(r.metrics.delta_acc),
                        ";".join(_fmt(a) for a in r.metrics.per_class_aulc),
                        r.split_digest,
                    ]
                )
        written.append(target)
        if rep.lift_curves:
            chart_dir = out / "liftcharts"
            chart_dir.mkdir(exist_ok=True)
            for (dataset, est, k) in sorted(rep.lift_curves):
                fractions, lifts = rep.lift_curves[(dataset, est, k)]
                target = chart_dir / f"{_safe_name(dataset)}__{_safe_name(est)}__class{k}.tsv"
                with open(target, "w", newline="") as fh:
                    fh.write("fraction\tlift\n")
                    for v, l in zip(fractions, lifts):
                        fh.write(f"{_fmt(v)}\t{_fmt(l)}\n")
                written.append(target)
        return written
    if format == "markdown":
        written.append(_emit_markdown(rep, out, baseline))
        return written
    raise ValueError(f"unknown report format {format!r}; use 'csv' or 'markdown'")


def _emit_markdown(rep: ExperimentReport, out: Path, baseline: str | None) -> Path:
    cfg = rep.config
    names = rep.estimator_names()
    baseline = baseline or names[0]
    lines: list[str] = []
    lines.append("# Benchmark summary")
    lines.append("")
    lines.append(f"- master seed: {cfg.master_seed}")
    lines.append(f"- trials per dataset: {cfg.trials}; trees per forest: {cfg.trees}")
    lines.append(f"- test fraction: {_fmt(cfg.test_fraction)}")
    lines.append(f"- seed derivation: {SEED_DERIVATION}")
    lines.append(f"- significance: {SIGNIFICANCE_RULE} (confidence = {cfg.confidence})")
    lines.append(
        "- metric direction: lower is better for zero_one_mse and av_log_loss; "
        "higher is better for aulc and delta_acc"
    )
    lines.append("")
    if rep.dataset_info:
        lines.append("## Datasets")
        lines.append("")
        lines.append("| dataset | examples | features | classes | labels (dense -> original) |")
        lines.append("| --- | --- | --- | --- | --- |")
        for ds in sorted(rep.dataset_info):
            info = rep.dataset_info[ds]
            mapping = (
                ", ".join(f"{i}->{name}" for i, name in enumerate(info["class_names"]))
                if info.get("class_names")
                else "-"
            )
            lines.append(
                f"| {ds} | {info['examples']} | {info['features']} | {info['classes']} | {mapping} |"
            )
        lines.append("")
    if rep.errors:
        lines.append("## Errors")
        lines.append("")
        for ds, message in rep.errors:
            lines.append(f"- {ds}: {message}")
        lines.append("")
    means = mean_table(rep.results)
    if means:
        lines.append("## Mean metrics")
        lines.append("")
        lines.append("| dataset | estimator | " + " | ".join(METRIC_NAMES) + " |")
        lines.append("| --- | --- |" + " --- |" * len(METRIC_NAMES))
        for (ds, est) in sorted(means):
            row = means[(ds, est)]
            cells = " | ".join(f"{row[m]:.6g}" for m in METRIC_NAMES)
            lines.append(f"| {ds} | {est} | {cells} |")
        lines.append("")
    datasets_ok = sorted({r.dataset for r in rep.results})
    if datasets_ok and len(names) > 1 and cfg.trials >= 2:
        for challenger in names:
            if challenger == baseline:
                continue
            table = win_tie_loss_table(rep.results, baseline, challenger, cfg.confidence)
            lines.append(f"## {challenger} vs {baseline}")
            lines.append("")
            header = ["dataset"]
            for m in METRIC_NAMES:
                header += [f"{m} ({baseline})", f"{m} ({challenger})", "verdict"]
            lines.append("| " + " | ".join(header) + " |")
            lines.append("|" + " --- |" * len(header))
            for ds in sorted(table.rows):
                cells = [ds]
                for m in METRIC_NAMES:
                    cell = table.rows[ds][m]
                    cells += [f"{cell.mean_a:.6g}", f"{cell.mean_b:.6g}", cell.verdict.value]
                lines.append("| " + " | ".join(cells) + " |")
            summary_cells = [
                f"{m}: {w}/{t}/{l}" for m, (w, t, l) in table.summary.items()
            ]
            lines.append("")
            lines.append(f"Win/tie/loss for {challenger}: " + "; ".join(summary_cells))
            lines.append("")
    target = out / "summary.md"
    with open(target, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return target


def read_results_csv(path: str | Path) -> list[TrialResult]:
    """Re-ingest a per-trial CSV written by :func:`emit_report`."""
    results: list[TrialResult] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(CSV_COLUMNS):
            raise DataError(f"{path}: unexpected columns {reader.fieldnames}")
        for row in reader:
            per_class = tuple(float(x) for x in row["per_class_aulc"].split(";"))
            results.append(
                TrialResult(
                    dataset=row["dataset"],
                    trial=int(row["trial"]),
                    estimator=row["estimator"],
                    metrics=MetricReport(
                        zero_one_mse=float(row["zero_one_mse"]),
                        av_log_loss=float(row["av_log_loss"]),
                        aulc=float(row["aulc"]),
                        delta_acc=float(row["delta_acc"]),
                        per_class_aulc=per_class,
                    ),
                    duration_s=0.0,
                    split_digest=row["split_digest"],
                )
            )
    return results


def config_from_json(path: str | Path) -> ExperimentConfig:
    """Parse a benchmark configuration file (JSON mirroring ExperimentConfig).

    ``estimators`` entries are preset names or objects with ``name``,
    ``kind``, ``include_oob``, ``smoothing``, ``alpha``, ``m``, and
    ``random_features`` fields.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must be a JSON object")
    try:
        datasets = []
        for entry in doc.get("datasets", []):
            classes = entry.get("classes")
            datasets.append(
                DatasetSpec(
                    path=entry["path"],
                    label=entry.get("label", 0),
                    classes=tuple(str(c) for c in classes) if classes else None,
                    id=entry.get("id"),
                )
            )
        estimators = []
        for entry in doc.get("estimators", ["bpets", "ebpets", "mobesp"]):
            if isinstance(entry, str):
                estimators.append(_preset(entry))
            else:
                options = EstimatorOptions(
                    kind=EstimatorKind(entry["kind"]),
                    include_oob=bool(entry.get("include_oob", False)),
                    smoothing=Smoothing(entry.get("smoothing", "laplace")),
                    m=entry.get("m"),
                    priors=tuple(entry["priors"]) if entry.get("priors") else None,
                    alpha=float(entry.get("alpha", 1.0)),
                )
                estimators.append(
                    EstimatorSpec(
                        name=entry["name"],
                        options=options,
                        random_features=bool(entry.get("random_features", False)),
                    )
                )
        return ExperimentConfig(
            datasets=tuple(datasets),
            estimators=tuple(estimators),
            trials=int(doc.get("trials", 100)),
            trees=int(doc.get("trees", 128)),
            test_fraction=float(doc.get("test_fraction", 1.0 / 3.0)),
            master_seed=int(doc.get("master_seed", 0)),
            confidence=float(doc.get("confidence", 0.1)),
            n_jobs=int(doc.get("n_jobs", 1)),
        )
    except UsageError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"config {path} is malformed: {exc}") from exc
