"""End-to-end acceptance suite.

Every check prints one ``[acceptance N] PASS/FAIL - detail`` line (visible
with ``pytest -s`` or in captured output on failure) and enforces its own
wall-clock budget.  The checks lean on independent, loop-style re-computations
rather than the library's vectorized internals wherever a number can be
derived from first principles.

The normalization sweep (number 7) is defined last so it can audit the
probability matrices accumulated by every earlier check, but it keeps its
number in the printed report.
"""

import math
import time
from pathlib import Path

import numpy as np

from conftest import make_noisy_overlap, make_separable, make_tiny
from petforest import cli
from petforest.dataset import Dataset, holdout_split, stratified_bootstrap
from petforest.ensemble import (
    build_ensemble,
    deserialize_model,
    oob_classify_training_set,
    serialize_model,
)
from petforest.estimators import (
    EstimatorKind,
    EstimatorOptions,
    Smoothing,
    bpets_predict_batch,
    build_mobesp_matrices,
    ebpets_predict_batch,
    laplace_estimate,
    m_estimate,
    mobesp_predict_batch,
)
from petforest.harness import (
    DatasetSpec,
    EstimatorSpec,
    ExperimentConfig,
    Verdict,
    estimator_preset,
    mean_table,
    run_experiment,
    win_tie_loss_table,
)
from petforest.metrics import (
    ScoredSet,
    avg_log_loss,
    aulc,
    delta_accuracy,
    lift,
    zero_one_mse,
)
from petforest.seeding import derive_seed
from petforest.tree import TreeConfig

# Probability matrices produced by the checks below, audited at the end for
# row normalization.  Entries tagged laplace=True contain only
# Laplace-smoothed estimates and must additionally stay strictly inside (0, 1).
_PROB_SINK: list[tuple[str, bool, np.ndarray]] = []


def _sink(tag: str, probs: np.ndarray, laplace: bool = False) -> None:
    _PROB_SINK.append((tag, laplace, np.asarray(probs, dtype=np.float64)))


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"[acceptance {num}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"acceptance check {num} failed: {detail}"


def _mobesp_same_forest_spec() -> EstimatorSpec:
    # Same bagging configuration as the bpets preset, so paired comparisons
    # run both estimators on identical forests.
    return EstimatorSpec(
        "mobesp", EstimatorOptions(kind=EstimatorKind.MOBESP), random_features=False
    )


def test_acceptance_1_reduction_identities():
    start = time.perf_counter()
    data = make_tiny(num_classes=3, n=200, num_features=5, seed=424)
    train, test = holdout_split(data, 1.0 / 3.0, np.random.default_rng(41))
    forest = build_ensemble(train, 32, TreeConfig(), master_seed=derive_seed(424, "reduction"))

    base_probs, base_votes = bpets_predict_batch(forest, test.features)
    plain = EstimatorOptions(
        kind=EstimatorKind.EBPETS, include_oob=False, smoothing=Smoothing.LAPLACE
    )
    eb_probs, eb_votes = ebpets_predict_batch(forest, test.features, plain)
    forests_equal = base_probs.tobytes() == eb_probs.tobytes() and np.array_equal(
        base_votes, eb_votes
    )
    _sink("reduction-bpets", base_probs, laplace=True)

    grid_mismatches = 0
    for k in (2, 3, 5):
        for n in range(51):
            for n_k in range(n + 1):
                if m_estimate(n_k, n, 1.0 / k, float(k)) != laplace_estimate(n_k, n, k):
                    grid_mismatches += 1
    elapsed = time.perf_counter() - start
    ok = forests_equal and grid_mismatches == 0 and elapsed < 10.0
    _report(
        1,
        ok,
        f"plain-options estimator bitwise equal to baseline on {test.num_examples} "
        f"held-out points: {forests_equal}; m-estimate(1/K, K) vs Laplace grid "
        f"mismatches: {grid_mismatches}; {elapsed:.1f}s (budget 10s)",
    )


def test_acceptance_2_out_of_bag_fraction():
    start = time.perf_counter()
    features = np.random.default_rng(1009).normal(0.0, 1.0, (1000, 4))
    features[:600, 0] += 1.5
    labels = np.array([0] * 600 + [1] * 400, dtype=np.int64)
    data = Dataset(features, labels, 2)

    rng = np.random.default_rng(55)
    fractions = [stratified_bootstrap(data, rng).out_bag.size / 1000 for _ in range(100)]
    mean_fraction = float(np.mean(fractions))

    forest = build_ensemble(data, 128, TreeConfig(), master_seed=derive_seed(1009, "obcount"))
    ob_per_example = np.zeros(1000)
    for sample in forest.samples:
        ob_per_example[sample.out_bag] += 1
    mean_ob_trees = float(ob_per_example.mean())

    elapsed = time.perf_counter() - start
    ok = (
        0.35 <= mean_fraction <= 0.40
        and 0.33 * 128 <= mean_ob_trees <= 0.41 * 128
        and elapsed < 30.0
    )
    _report(
        2,
        ok,
        f"mean out-of-bag fraction {mean_fraction:.4f} in [0.35, 0.40]; mean "
        f"out-of-bag trees/example {mean_ob_trees:.1f} in [{0.33 * 128:.1f}, "
        f"{0.41 * 128:.1f}] at 128 trees; {elapsed:.1f}s (budget 30s)",
    )


# --- independent, loop-style metric re-computations -------------------------


def _brute_mse(probs, labels):
    total = 0.0
    for i, y in enumerate(labels):
        total += (1.0 - probs[i][y]) ** 2
    return total / len(labels)


def _brute_avll(probs, labels, priors):
    eps = min(0.005, 0.5 * min(priors))
    total = 0.0
    for i, y in enumerate(labels):
        p = probs[i][y]
        if p == 0.0:
            p = eps
        elif p == 1.0:
            p = 1.0 - eps
        total += -math.log2(p)
    return total / len(labels)


def _brute_lift(probs, labels, k, v):
    u = len(labels)
    order = sorted(range(u), key=lambda i: (-probs[i][k], i))
    top = order[: math.ceil(v * u)]
    top_rate = sum(1 for i in top if labels[i] == k) / len(top)
    base_rate = sum(1 for y in labels if y == k) / u
    return top_rate / base_rate


def _brute_aulc(probs, labels, priors):
    u = len(labels)
    total = 0.0
    for k, prior in enumerate(priors):
        order = sorted(range(u), key=lambda i: (-probs[i][k], i))
        fractions, lifts = [], []
        for pos in range(u):
            last_of_group = pos == u - 1 or probs[order[pos + 1]][k] != probs[order[pos]][k]
            if last_of_group:
                fractions.append((pos + 1) / u)
                lifts.append(_brute_lift(probs, labels, k, (pos + 1) / u))
        fractions = [0.0] + fractions
        lifts = [lifts[0]] + lifts
        area = 0.0
        for j in range(1, len(fractions)):
            area += (fractions[j] - fractions[j - 1]) * (lifts[j] + lifts[j - 1]) / 2.0
        total += prior * area
    return total


def _brute_delta_accuracy(probs, labels, votes):
    u = len(labels)
    hits_argmax = 0
    for i, y in enumerate(labels):
        best = max(range(len(probs[i])), key=lambda c: (probs[i][c], -c))
        hits_argmax += best == y
    hits_vote = sum(1 for i, y in enumerate(labels) if votes[i] == y)
    return hits_argmax / u - hits_vote / u


def _random_scored_fixture(rng, u=30):
    k = int(rng.integers(2, 4))
    probs = rng.random((u, k))
    probs /= probs.sum(axis=1, keepdims=True)
    # Sprinkle exact one-hot rows so the log-loss clamp stays exercised.
    for row in rng.choice(u, size=3, replace=False):
        hot = int(rng.integers(k))
        probs[row] = 0.0
        probs[row, hot] = 1.0
    labels = rng.integers(0, k, size=u)
    labels[:k] = np.arange(k)  # every class present
    votes = rng.integers(0, k, size=u)
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    priors = counts / counts.sum()
    return ScoredSet(probs, labels, priors), votes


def test_acceptance_3_metric_oracles():
    start = time.perf_counter()
    rng = np.random.default_rng(20260816)
    worst = 0.0
    lift_full_ok = True
    avll_finite_ok = True
    brier_worst = 0.0
    for _ in range(100):
        scored, votes = _random_scored_fixture(rng)
        probs = scored.probs.tolist()
        labels = scored.labels.tolist()
        priors = scored.train_priors.tolist()

        worst = max(worst, abs(zero_one_mse(scored) - _brute_mse(probs, labels)))
        avll = avg_log_loss(scored)
        avll_finite_ok &= math.isfinite(avll)
        worst = max(worst, abs(avll - _brute_avll(probs, labels, priors)))
        for k in range(scored.num_classes):
            v = float(rng.uniform(0.05, 1.0))
            worst = max(worst, abs(lift(scored, k, v) - _brute_lift(probs, labels, k, v)))
            lift_full_ok &= lift(scored, k, 1.0) == 1.0
        worst = max(worst, abs(aulc(scored) - _brute_aulc(probs, labels, priors)))
        worst = max(
            worst,
            abs(
                delta_accuracy(scored, votes)
                - _brute_delta_accuracy(probs, labels, votes.tolist())
            ),
        )
        _sink("metric-fixture", scored.probs)

        if scored.num_classes == 2:
            onehot = np.zeros_like(scored.probs)
            onehot[np.arange(scored.num_examples), scored.labels] = 1.0
            brier = float(((scored.probs - onehot) ** 2).sum(axis=1).mean())
            brier_worst = max(brier_worst, abs(zero_one_mse(scored) - brier / 2.0))

    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and lift_full_ok and avll_finite_ok and brier_worst <= 1e-12
    _report(
        3,
        ok,
        f"max |library - brute force| {worst:.2e} (tol 1e-12) over 100 fixtures; "
        f"lift at fraction 1.0 exactly 1: {lift_full_ok}; log-loss finite under "
        f"exact-0 estimates: {avll_finite_ok}; binary 0/1-MSE vs half Brier "
        f"gap {brier_worst:.2e}; {elapsed:.1f}s",
    )


def test_acceptance_4_directional_benchmark():
    start = time.perf_counter()
    data = make_noisy_overlap()  # frozen: N=2000, shift 2.5, 10% label flips
    config = ExperimentConfig(
        datasets=(DatasetSpec(id="noisy_overlap", data=data),),
        estimators=(estimator_preset("bpets"), _mobesp_same_forest_spec()),
        trials=20,
        trees=64,
        test_fraction=0.5,
        master_seed=1,
    )
    report = run_experiment(config)
    table = win_tie_loss_table(report.results, "bpets", "mobesp", confidence=0.1)
    row = table.rows["noisy_overlap"]
    mse_cell = row["zero_one_mse"]
    avll_cell = row["av_log_loss"]

    elapsed = time.perf_counter() - start
    ok = (
        mse_cell.mean_b < mse_cell.mean_a
        and mse_cell.verdict is Verdict.WIN
        and avll_cell.verdict is Verdict.WIN
        and elapsed < 180.0
    )
    _report(
        4,
        ok,
        f"20-trial mean 0/1-MSE {mse_cell.mean_b:.5f} (conditional) vs "
        f"{mse_cell.mean_a:.5f} (baseline), t={mse_cell.t_statistic:+.2f} "
        f"{mse_cell.verdict.value}; log-loss t={avll_cell.t_statistic:+.2f} "
        f"{avll_cell.verdict.value}; {elapsed:.0f}s (budget 180s)",
    )


def test_acceptance_5_separable_sanity():
    start = time.perf_counter()
    data = make_separable(n=100, seed=7)
    config = ExperimentConfig(
        datasets=(DatasetSpec(id="separable", data=data),),
        estimators=(estimator_preset("bpets"), _mobesp_same_forest_spec()),
        trials=10,
        trees=128,
        master_seed=5,
    )
    report = run_experiment(config)
    means = mean_table(report.results)
    bpets_mse = means[("separable", "bpets")]["zero_one_mse"]
    mobesp_mse = means[("separable", "mobesp")]["zero_one_mse"]

    elapsed = time.perf_counter() - start
    ok = bpets_mse < 0.01 and mobesp_mse <= bpets_mse and elapsed < 60.0
    _report(
        5,
        ok,
        f"mean 0/1-MSE over 10 trials: baseline {bpets_mse:.5f} (< 0.01), "
        f"conditional {mobesp_mse:.5f} (<= baseline); {elapsed:.1f}s (budget 60s)",
    )


def _write_benchmark_inputs(root: Path) -> Path:
    data = make_tiny(num_classes=2, n=120, num_features=4, seed=99)
    lines = ["f0,f1,f2,f3,label"]
    for row, label in zip(data.features, data.labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(label)}")
    csv_path = root / "tiny.csv"
    csv_path.write_text("\n".join(lines) + "\n")
    config_path = root / "config.json"
    config_path.write_text(
        '{"datasets": [{"path": "%s", "label": "label"}],\n'
        ' "estimators": ["bpets", "mobesp"],\n'
        ' "trials": 3, "trees": 16, "master_seed": 9}\n' % csv_path
    )
    return config_path


def test_acceptance_6_determinism(tmp_path):
    start = time.perf_counter()
    config_path = _write_benchmark_inputs(tmp_path)
    outputs = []
    for name in ("first", "second"):
        out_dir = tmp_path / name
        code = cli.main(
            ["benchmark", "--config", str(config_path), "--out", str(out_dir)]
        )
        assert code == 0
        outputs.append((out_dir / "trials.csv").read_bytes())
    reruns_identical = outputs[0] == outputs[1]

    data = make_tiny(num_classes=3, n=90, num_features=4, seed=17)
    forest = build_ensemble(data, 24, TreeConfig(), master_seed=derive_seed(17, "roundtrip"))
    oob = oob_classify_training_set(forest, data)
    opts = EstimatorOptions(kind=EstimatorKind.MOBESP)
    mats = build_mobesp_matrices(forest, data, oob, opts)
    model_path = tmp_path / "model.petf"
    serialize_model(forest, model_path, matrices=mats, estimator_options={"kind": "mobesp"})
    bundle = deserialize_model(model_path)

    probe = np.random.default_rng(3).normal(0.0, 1.2, (100, 4))
    before_p, before_v = mobesp_predict_batch(forest, mats, probe)
    after_p, after_v = mobesp_predict_batch(bundle.ensemble, bundle.matrices, probe)
    base_before, _ = bpets_predict_batch(forest, probe)
    base_after, _ = bpets_predict_batch(bundle.ensemble, probe)
    roundtrip_identical = (
        before_p.tobytes() == after_p.tobytes()
        and np.array_equal(before_v, after_v)
        and base_before.tobytes() == base_after.tobytes()
    )
    _sink("roundtrip-mobesp", before_p)
    _sink("roundtrip-bpets", base_before, laplace=True)

    elapsed = time.perf_counter() - start
    ok = reruns_identical and roundtrip_identical
    _report(
        6,
        ok,
        f"repeat benchmark CSVs byte-identical: {reruns_identical}; serialize/"
        f"deserialize predictions identical on 100-point probe: "
        f"{roundtrip_identical}; {elapsed:.1f}s",
    )


# --- fixed small-instance oracle --------------------------------------------


def _fixture_12pt() -> Dataset:
    features = np.array(
        [
            [0.0, 2.0],
            [0.4, 1.1],
            [0.9, 2.4],
            [1.3, 0.2],
            [1.8, 1.9],
            [2.2, 0.6],
            [2.7, 2.2],
            [3.1, 1.0],
            [3.6, 2.8],
            [4.0, 0.4],
            [4.5, 1.6],
            [4.9, 2.6],
        ]
    )
    labels = np.array([0, 0, 1, 0, 1, 2, 1, 2, 1, 2, 2, 1], dtype=np.int64)
    return Dataset(features, labels, 3)


def _brute_oob_votes(forest, data):
    """Per-example ensemble label voted by the trees that missed it."""
    votes = []
    for i, x in enumerate(data.features):
        tally = {}
        for tree, sample in zip(forest.trees, forest.samples):
            if i in set(sample.out_bag.tolist()):
                label = _brute_leaf_vote(tree, x)
                tally[label] = tally.get(label, 0) + 1
        if not tally:  # never out-of-bag: fall back to the full-forest vote
            for tree in forest.trees:
                label = _brute_leaf_vote(tree, x)
                tally[label] = tally.get(label, 0) + 1
        top = max(tally.values())
        votes.append(min(label for label, c in tally.items() if c == top))
    return votes


def _brute_leaf_vote(tree, x):
    counts = tree.leaves[tree.route(x)].ib_counts
    best = max(range(len(counts)), key=lambda c: (counts[c], -c))
    return best


def _brute_mobesp_12pt(forest, data, probes, alpha=1.0):
    k = data.num_classes
    oob_votes = _brute_oob_votes(forest, data)

    # Per tree, per leaf: cross-tally and per-column normalization, as dicts.
    tree_tables = []
    for tree in forest.trees:
        per_leaf = []
        for bins in tree.leaves:
            cross = [[0.0] * k for _ in range(k)]
            for i in bins.ib_members.tolist():  # one entry per bootstrap draw
                cross[data.labels[i]][oob_votes[i]] += 1.0
            for i in bins.ob_members.tolist():
                cross[data.labels[i]][oob_votes[i]] += alpha
            per_leaf.append(cross)
        tree_tables.append(per_leaf)

    results = []
    for x in probes:
        tally = {}
        for tree in forest.trees:
            label = _brute_leaf_vote(tree, x)
            tally[label] = tally.get(label, 0) + 1
        top = max(tally.values())
        vote = min(label for label, c in tally.items() if c == top)

        supported = []
        for t, tree in enumerate(forest.trees):
            cross = tree_tables[t][tree.route(x)]
            column_mass = sum(cross[c][vote] for c in range(k))
            if column_mass > 0:
                supported.append([cross[c][vote] / column_mass for c in range(k)])
        if supported:
            probs = [sum(col[c] for col in supported) / len(supported) for c in range(k)]
        else:
            tables = []
            for t, tree in enumerate(forest.trees):
                cross = tree_tables[t][tree.route(x)]
                row_totals = [sum(cross[c]) for c in range(k)]
                total = sum(row_totals)
                tables.append([row_totals[c] / total for c in range(k)])
            probs = [sum(tab[c] for tab in tables) / len(tables) for c in range(k)]
        results.append((probs, vote))
    return results


def test_acceptance_8_small_instance_oracle():
    start = time.perf_counter()
    data = _fixture_12pt()
    forest = build_ensemble(data, 3, TreeConfig(), master_seed=derive_seed("fixed", 12, 3))
    oob = oob_classify_training_set(forest, data)
    opts = EstimatorOptions(kind=EstimatorKind.MOBESP)
    mats = build_mobesp_matrices(forest, data, oob, opts)

    probes = np.vstack([data.features, [[2.0, 1.5], [0.2, 0.3], [4.8, 2.9]]])
    lib_probs, lib_votes = mobesp_predict_batch(forest, mats, probes)
    brute = _brute_mobesp_12pt(forest, data, probes, alpha=opts.alpha)

    vote_equal = all(int(lib_votes[i]) == brute[i][1] for i in range(len(probes)))
    prob_equal = all(
        lib_probs[i][c] == brute[i][0][c]
        for i in range(len(probes))
        for c in range(data.num_classes)
    )
    _sink("small-instance", lib_probs)

    elapsed = time.perf_counter() - start
    ok = vote_equal and prob_equal
    _report(
        8,
        ok,
        f"12-point, 3-tree fixture: votes exactly equal: {vote_equal}; "
        f"probabilities exactly equal to first-principles recomputation: "
        f"{prob_equal} ({len(probes)} probes); {elapsed:.1f}s",
    )


def test_acceptance_7_normalization_invariants():
    start = time.perf_counter()
    # Laplace estimates stay strictly inside (0, 1) on an exhaustive grid.
    laplace_interior = True
    for k in range(2, 7):
        for n in range(61):
            for n_k in range(n + 1):
                p = laplace_estimate(n_k, n, k)
                laplace_interior &= 0.0 < p < 1.0

    # Matrix columns with support are distributions; estimates sum to 1.
    data = make_tiny(num_classes=3, n=150, num_features=4, seed=23)
    forest = build_ensemble(data, 16, TreeConfig(), master_seed=derive_seed(23, "norms"))
    oob = oob_classify_training_set(forest, data)
    mats = build_mobesp_matrices(
        forest, data, oob, EstimatorOptions(kind=EstimatorKind.MOBESP)
    )
    column_gap = 0.0
    for matrix, support in zip(mats.matrices, mats.support):
        sums = matrix.sum(axis=1)  # (L, K) column sums of each leaf's matrix
        occupied = support > 0
        if occupied.any():
            column_gap = max(column_gap, float(np.abs(sums[occupied] - 1.0).max()))

    probe = np.random.default_rng(8).normal(0.0, 1.0, (64, 4))
    for options in (
        EstimatorOptions(kind=EstimatorKind.EBPETS),
        EstimatorOptions(kind=EstimatorKind.EBPETS, smoothing=Smoothing.NONE),
        EstimatorOptions(
            kind=EstimatorKind.EBPETS, smoothing=Smoothing.M_ESTIMATE, m=4.0
        ),
        EstimatorOptions(kind=EstimatorKind.EBPETS, include_oob=False),
    ):
        probs, _ = ebpets_predict_batch(forest, probe, options)
        _sink("norms-ebpets", probs, laplace=options.smoothing is Smoothing.LAPLACE)
    probs, _ = mobesp_predict_batch(forest, mats, probe)
    _sink("norms-mobesp", probs)

    # Audit every probability matrix accumulated across the whole suite.
    row_gap = 0.0
    interior_ok = laplace_interior
    rows_checked = 0
    for _, laplace_only, probs in _PROB_SINK:
        if probs.size == 0:
            continue
        rows_checked += probs.shape[0]
        row_gap = max(row_gap, float(np.abs(probs.sum(axis=1) - 1.0).max()))
        if laplace_only:
            interior_ok &= bool(((probs > 0.0) & (probs < 1.0)).all())

    elapsed = time.perf_counter() - start
    ok = row_gap <= 1e-9 and column_gap <= 1e-9 and interior_ok
    _report(
        7,
        ok,
        f"estimate rows summing to 1 within 1e-9: {rows_checked} rows, max gap "
        f"{row_gap:.2e}; occupied matrix columns max gap {column_gap:.2e}; "
        f"Laplace estimates strictly inside (0,1): {interior_ok}; {elapsed:.1f}s",
    )
