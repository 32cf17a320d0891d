"""Bagged tree ensembles: building, voting, OOB classification, model files.

Per-tree randomness is derived from the master seed with
``numpy.random.SeedSequence(master_seed).spawn(num_trees)``: tree ``t`` always
receives stream ``t`` regardless of build order, so serial and parallel builds
produce bit-identical ensembles.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from joblib import Parallel, delayed

from .dataset import BootstrapSample, Dataset, stratified_bootstrap
from .errors import DataError, ModelFormatError
from .tree import LeafBins, Tree, TreeConfig, bin_out_of_bag, grow_tree

MODEL_FORMAT = "petforest-model"
MODEL_VERSION = 1


@dataclass
class Ensemble:
    """A bagged forest with its bootstrap samples and build provenance."""

    trees: list[Tree]
    samples: list[BootstrapSample]
    config: TreeConfig
    num_classes: int
    num_features: int
    master_seed: int
    train_ref: str

    @property
    def num_trees(self) -> int:
        return len(self.trees)

    def check_compatible(self, d: Dataset) -> None:
        """Raise if ``d`` cannot be scored by this model."""
        if d.num_features != self.num_features:
            raise DataError(
                f"model expects {self.num_features} features, data has {d.num_features}"
            )
        if d.num_classes != self.num_classes:
            raise DataError(
                f"model was built for {self.num_classes} classes, data has {d.num_classes}"
            )


@dataclass(frozen=True)
class OobClassifications:
    """Ensemble labels for every training example, voted by its OB trees.

    ``oob_tree_counts[i]`` is the number of trees whose bootstrap missed
    example ``i``.  Where that count is zero the prediction falls back to the
    full-ensemble vote.
    """

    predicted: np.ndarray
    oob_tree_counts: np.ndarray


def _build_one(
    train: Dataset, config: TreeConfig, seed: np.random.SeedSequence
) -> tuple[Tree, BootstrapSample]:
    rng = np.random.default_rng(seed)
    sample = stratified_bootstrap(train, rng)
    tree = grow_tree(sample, train, config, rng)
    bin_out_of_bag(tree, sample, train)
    return tree, sample


def build_ensemble(
    train: Dataset,
    num_trees: int,
    config: TreeConfig,
    master_seed: int,
    n_jobs: int = 1,
) -> Ensemble:
    """Grow ``num_trees`` trees on stratified bootstraps of ``train``.

    Each tree is grown on its own bootstrap and immediately OB-binned.
    ``n_jobs`` > 1 parallelizes over trees without changing the result.
    """
    if num_trees < 1:
        raise ValueError(f"num_trees must be >= 1, got {num_trees}")
    seeds = np.random.SeedSequence(master_seed).spawn(num_trees)
    if n_jobs == 1:
        built = [_build_one(train, config, s) for s in seeds]
    else:
        built = Parallel(n_jobs=n_jobs)(
            delayed(_build_one)(train, config, s) for s in seeds
        )
    trees = [t for t, _ in built]
    samples = [s for _, s in built]
    return Ensemble(
        trees=trees,
        samples=samples,
        config=config,
        num_classes=train.num_classes,
        num_features=train.num_features,
        master_seed=master_seed,
        train_ref=train.digest(),
    )


def vote_counts_batch(
    e: Ensemble, xs: np.ndarray, tree_ids: Sequence[int] | None = None
) -> np.ndarray:
    """(U, K) tally of per-tree majority-class votes over ``tree_ids``."""
    xs = np.asarray(xs, dtype=np.float64)
    ids = range(e.num_trees) if tree_ids is None else tree_ids
    counts = np.zeros((xs.shape[0], e.num_classes), dtype=np.int64)
    rows = np.arange(xs.shape[0])
    for t in ids:
        tree = e.trees[t]
        counts[rows, tree.leaf_votes[tree.route_batch(xs)]] += 1
    return counts


def majority_vote_batch(e: Ensemble, xs: np.ndarray) -> np.ndarray:
    """Plurality class per row of ``xs``; vote ties take the lowest index."""
    return vote_counts_batch(e, xs).argmax(axis=1)


def majority_vote(e: Ensemble, x: np.ndarray) -> int:
    """Plurality class over all trees for a single example."""
    return int(majority_vote_batch(e, np.asarray(x, dtype=np.float64)[None, :])[0])


def vote_on_subset(e: Ensemble, x: np.ndarray, tree_ids: Sequence[int]) -> int:
    """Plurality class over the listed trees only."""
    if len(tree_ids) == 0:
        raise ValueError("vote_on_subset needs at least one tree")
    counts = vote_counts_batch(e, np.asarray(x, dtype=np.float64)[None, :], tree_ids)
    return int(counts[0].argmax())


def oob_classify_training_set(e: Ensemble, train: Dataset) -> OobClassifications:
    """Classify every training example using only the trees it is out-of-bag for.

    Each OB tree contributes its leaf's majority class; the plurality wins,
    ties to the lowest class index.  Examples that are in-bag everywhere get
    the full-ensemble vote instead (their ``oob_tree_counts`` entry is 0).
    """
    n = train.num_examples
    votes = np.zeros((n, e.num_classes), dtype=np.int64)
    ob_count = np.zeros(n, dtype=np.int64)
    for tree, sample in zip(e.trees, e.samples):
        ob = sample.out_bag
        if ob.size == 0:
            continue
        leaf_of = tree.route_batch(train.features[ob])
        votes[ob, tree.leaf_votes[leaf_of]] += 1
        ob_count[ob] += 1
    predicted = votes.argmax(axis=1)
    never_ob = np.flatnonzero(ob_count == 0)
    if never_ob.size:
        predicted[never_ob] = majority_vote_batch(e, train.features[never_ob])
    return OobClassifications(predicted=predicted, oob_tree_counts=ob_count)


def _tree_to_dict(tree: Tree) -> dict[str, Any]:
    return {
        "split_attribute": tree.split_attribute.tolist(),
        "split_threshold": [None if np.isnan(v) else v for v in tree.split_threshold],
        "children_left": tree.children_left.tolist(),
        "children_right": tree.children_right.tolist(),
        "leaf_ids": tree.leaf_ids.tolist(),
        "leaves": [
            {
                "ib_counts": b.ib_counts.tolist(),
                "ob_counts": b.ob_counts.tolist(),
                "ib_members": b.ib_members.tolist(),
                "ob_members": b.ob_members.tolist(),
            }
            for b in tree.leaves
        ],
    }


def _tree_from_dict(obj: dict[str, Any], num_features: int, num_classes: int) -> Tree:
    leaves = [
        LeafBins(
            ib_counts=np.asarray(leaf["ib_counts"], dtype=np.int64),
            ob_counts=np.asarray(leaf["ob_counts"], dtype=np.int64),
            ib_members=np.asarray(leaf["ib_members"], dtype=np.int64),
            ob_members=np.asarray(leaf["ob_members"], dtype=np.int64),
        )
        for leaf in obj["leaves"]
    ]
    for leaf in leaves:
        if len(leaf.ib_counts) != num_classes or len(leaf.ob_counts) != num_classes:
            raise ModelFormatError("leaf bin width does not match num_classes")
    return Tree(
        np.asarray(obj["split_attribute"], dtype=np.int64),
        np.asarray(
            [np.nan if v is None else v for v in obj["split_threshold"]], dtype=np.float64
        ),
        np.asarray(obj["children_left"], dtype=np.int64),
        np.asarray(obj["children_right"], dtype=np.int64),
        np.asarray(obj["leaf_ids"], dtype=np.int64),
        leaves,
        num_features,
    )


@dataclass
class ModelBundle:
    """Everything a model file holds: the forest plus optional extras."""

    ensemble: Ensemble
    matrices: Any | None = None  # estimators.MobespMatrices
    estimator_options: dict[str, Any] | None = None
    class_names: tuple[str, ...] | None = None


def serialize_model(
    e: Ensemble,
    path: str | Path,
    *,
    matrices: Any | None = None,
    estimator_options: dict[str, Any] | None = None,
    class_names: Sequence[str] | None = None,
) -> None:
    """Write a self-describing, losslessly round-trippable model file.

    The file is gzipped JSON carrying the format version, shape (K, D, T),
    tree config, every tree with its leaf bins, every bootstrap sample, and —
    when supplied — conditional-probability matrices, the estimator options
    the model was trained for, and the original class labels.
    """
    doc: dict[str, Any] = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "num_classes": e.num_classes,
        "num_features": e.num_features,
        "num_trees": e.num_trees,
        "master_seed": e.master_seed,
        "train_ref": e.train_ref,
        "config": {
            "min_leaf_examples": e.config.min_leaf_examples,
            "random_features": e.config.random_features,
            "feature_subset_size": e.config.feature_subset_size,
            "rng_seed": e.config.rng_seed,
        },
        "trees": [_tree_to_dict(t) for t in e.trees],
        "samples": [
            {"in_bag": s.in_bag.tolist(), "out_bag": s.out_bag.tolist()} for s in e.samples
        ],
        "estimator_options": estimator_options,
        "class_names": list(class_names) if class_names is not None else None,
    }
    if matrices is not None:
        doc["mobesp"] = {
            "alpha": matrices.alpha,
            "matrices": [m.tolist() for m in matrices.matrices],
            "support": [s.tolist() for s in matrices.support],
        }
    else:
        doc["mobesp"] = None
    with gzip.open(path, "wt", encoding="utf-8") as fh:
        json.dump(doc, fh)


def deserialize_model(path: str | Path) -> ModelBundle:
    """Load a model file written by :func:`serialize_model`.

    Raises ModelFormatError for files that are not gzipped JSON, do not carry
    the expected format marker, use an unsupported version, or are missing
    required sections.
    """
    try:
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError, EOFError) as exc:
        raise ModelFormatError(f"model file {path} is corrupt: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path} is not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model version {doc.get('version')!r}; this build reads {MODEL_VERSION}"
        )
    try:
        config = TreeConfig(**doc["config"])
        num_features = int(doc["num_features"])
        num_classes = int(doc["num_classes"])
        trees = [_tree_from_dict(t, num_features, num_classes) for t in doc["trees"]]
        samples = [
            BootstrapSample(
                np.asarray(s["in_bag"], dtype=np.int64),
                np.asarray(s["out_bag"], dtype=np.int64),
            )
            for s in doc["samples"]
        ]
        ensemble = Ensemble(
            trees=trees,
            samples=samples,
            config=config,
            num_classes=num_classes,
            num_features=num_features,
            master_seed=int(doc["master_seed"]),
            train_ref=str(doc["train_ref"]),
        )
        if len(trees) != int(doc["num_trees"]) or len(samples) != len(trees):
            raise ModelFormatError(f"{path}: tree/sample sections are inconsistent")
        matrices = None
        if doc.get("mobesp") is not None:
            from .estimators import MobespMatrices

            mob = doc["mobesp"]
            matrices = MobespMatrices(
                alpha=float(mob["alpha"]),
                matrices=[np.asarray(m, dtype=np.float64) for m in mob["matrices"]],
                support=[np.asarray(s, dtype=np.float64) for s in mob["support"]],
            )
        class_names = doc.get("class_names")
        return ModelBundle(
            ensemble=ensemble,
            matrices=matrices,
            estimator_options=doc.get("estimator_options"),
            class_names=tuple(class_names) if class_names is not None else None,
        )
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model file {path} is malformed: {exc}") from exc
