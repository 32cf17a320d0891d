"""Binary decision trees grown to purity for class-probability estimation.

Trees split on numeric attributes with ``x[attr] <= threshold`` routing left.
Split quality is plain information gain (Shannon entropy in bits); candidate
thresholds are midpoints between consecutive distinct attribute values.  A
node becomes a leaf when it is pure in-bag or when no admissible split has
positive gain.  Exact gain ties are broken uniformly at random, first among
tied attributes and then among tied thresholds, so duplicated attributes are
chosen equally often.

Leaves keep both the in-bag members that grew them (counted per bootstrap
draw) and, after :func:`bin_out_of_bag`, the out-of-bag members that route to
them.  Everything downstream — smoothed leaf frequencies, out-of-bag
corrections, conditional matrices — reads from these bins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import BootstrapSample, Dataset

# Computed gains below this are treated as zero, so proportional splits whose
# true gain is 0 are rejected despite float rounding in the entropy sums.
GAIN_EPS = 1e-12


@dataclass(frozen=True)
class TreeConfig:
    """Growth parameters shared by every tree of an ensemble.

    ``min_leaf_examples`` counts in-bag examples per bootstrap draw (a point
    drawn twice counts twice).  With ``random_features`` on, every node
    evaluates a fresh uniform sample of ``feature_subset_size`` attributes;
    the size defaults to ceil(sqrt(D)) when left unset.
    """

    min_leaf_examples: int = 2
    random_features: bool = False
    feature_subset_size: int | None = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.min_leaf_examples < 1:
            raise ValueError(f"min_leaf_examples must be >= 1, got {self.min_leaf_examples}")
        if self.feature_subset_size is not None and self.feature_subset_size < 1:
            raise ValueError(f"feature_subset_size must be >= 1, got {self.feature_subset_size}")

    def subset_size(self, num_features: int) -> int:
        """Attributes evaluated per node when random_features is on."""
        if self.feature_subset_size is not None:
            return min(self.feature_subset_size, num_features)
        d = math.isqrt(num_features)
        if d * d < num_features:
            d += 1
        return d

    def build_key(self) -> tuple:
        """Hashable identity of everything that affects tree structure."""
        return (self.min_leaf_examples, self.random_features, self.feature_subset_size)


@dataclass(frozen=True)
class SplitTest:
    """A single threshold test; x[attribute] <= threshold routes left."""

    attribute: int
    threshold: float

    def goes_left(self, x: np.ndarray) -> bool:
        return bool(x[self.attribute] <= self.threshold)


@dataclass
class LeafBins:
    """Per-leaf class tallies and member lists.

    ``ib_counts``/``ib_members`` cover the in-bag examples that grew the leaf,
    repetition included; ``ob_counts``/``ob_members`` cover the out-of-bag
    examples routed there afterwards (each counted once).
    """

    ib_counts: np.ndarray
    ob_counts: np.ndarray
    ib_members: np.ndarray
    ob_members: np.ndarray


def entropy(class_counts: np.ndarray) -> float:
    """Shannon entropy in bits of a class-count vector, with 0*log(0) = 0."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if (counts < 0).any():
        raise ValueError(f"class counts must be non-negative, got {class_counts}")
    total = counts.sum()
    if total <= 0:
        raise ValueError("entropy of an empty count vector is undefined")
    return float(_entropy_rows(counts[None, :], np.array([total]))[0])


def _entropy_rows(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Row-wise entropy of a (B, K) count matrix with row sums ``totals``."""
    p = counts / totals[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = p * np.log2(p)
    return -np.where(counts > 0, terms, 0.0).sum(axis=-1)


def information_gain(
    parent_counts: np.ndarray, left_counts: np.ndarray, right_counts: np.ndarray
) -> float:
    """Entropy reduction of splitting ``parent`` into ``left`` and ``right``."""
    parent = np.asarray(parent_counts, dtype=np.float64)
    left = np.asarray(left_counts, dtype=np.float64)
    right = np.asarray(right_counts, dtype=np.float64)
    if not np.array_equal(left + right, parent):
        raise ValueError("left + right counts must equal parent counts")
    n_left, n_right = left.sum(), right.sum()
    if n_left <= 0 or n_right <= 0:
        raise ValueError("both children must be non-empty")
    n = n_left + n_right
    gain = entropy(parent) - (n_left * entropy(left) + n_right * entropy(right)) / n
    # Mathematically >= 0; clip the ~1e-16 float noise.
    return max(float(gain), 0.0)


def candidate_thresholds(values: np.ndarray) -> np.ndarray:
    """Midpoints between consecutive distinct values of one attribute.

    Fewer than two distinct values yield an empty array (the attribute
    cannot split the node).
    """
    distinct = np.unique(np.asarray(values, dtype=np.float64))
    return (distinct[:-1] + distinct[1:]) / 2.0


def choose_split(
    node_features: np.ndarray,
    node_labels: np.ndarray,
    num_classes: int,
    config: TreeConfig,
    rng: np.random.Generator,
) -> SplitTest | None:
    """Best admissible split of a node, or None if the node must become a leaf.

    A split is admissible when both children hold at least
    ``config.min_leaf_examples`` examples (per draw).  Among admissible
    (attribute, threshold) pairs with positive gain the maximum-gain one wins;
    exact ties are broken uniformly at random, first over tied attributes,
    then over that attribute's tied thresholds.
    """
    x = np.asarray(node_features, dtype=np.float64)
    y = np.asarray(node_labels, dtype=np.int64)
    n, num_attrs = x.shape
    min_leaf = config.min_leaf_examples
    if n < 2 * min_leaf:
        return None

    if config.random_features:
        d = config.subset_size(num_attrs)
        attrs = np.sort(rng.choice(num_attrs, size=d, replace=False))
    else:
        attrs = np.arange(num_attrs)

    onehot = np.zeros((n, num_classes))
    onehot[np.arange(n), y] = 1.0
    total_counts = onehot.sum(axis=0)
    h_parent = _entropy_rows(total_counts[None, :], np.array([float(n)]))[0]

    best_gain = 0.0
    candidates: list[tuple[int, np.ndarray]] = []  # (attribute, tied thresholds)
    for a in attrs:
        order = np.argsort(x[:, a], kind="stable")
        sv = x[order, a]
        boundary = np.flatnonzero(sv[:-1] != sv[1:])
        if boundary.size == 0:
            continue
        left_n = boundary + 1
        right_n = n - left_n
        admissible = (left_n >= min_leaf) & (right_n >= min_leaf)
        if not admissible.any():
            continue
        boundary = boundary[admissible]
        left_n = left_n[admissible]
        right_n = right_n[admissible]
        left_counts = np.cumsum(onehot[order], axis=0)[boundary]
        right_counts = total_counts - left_counts
        h_left = _entropy_rows(left_counts, left_n.astype(np.float64))
        h_right = _entropy_rows(right_counts, right_n.astype(np.float64))
        gains = h_parent - (left_n * h_left + right_n * h_right) / n
        top = gains.max()
        if top <= GAIN_EPS or top < best_gain:
            continue
        tied = boundary[gains == top]
        thresholds = (sv[tied] + sv[tied + 1]) / 2.0
        if top > best_gain:
            best_gain = top
            candidates = [(int(a), thresholds)]
        else:
            candidates.append((int(a), thresholds))

    if not candidates:
        return None
    attribute, thresholds = (
        candidates[rng.integers(len(candidates))] if len(candidates) > 1 else candidates[0]
    )
    threshold = thresholds[rng.integers(thresholds.size)] if thresholds.size > 1 else thresholds[0]
    return SplitTest(attribute, float(threshold))


class Tree:
    """A grown tree in flat-array form plus per-leaf bins.

    Node 0 is the root.  Branch nodes carry an attribute/threshold pair and
    two child ids; leaf nodes carry a dense leaf id into ``leaves``.
    """

    __slots__ = (
        "split_attribute",
        "split_threshold",
        "children_left",
        "children_right",
        "leaf_ids",
        "leaves",
        "leaf_votes",
        "num_features",
    )

    def __init__(
        self,
        split_attribute: np.ndarray,
        split_threshold: np.ndarray,
        children_left: np.ndarray,
        children_right: np.ndarray,
        leaf_ids: np.ndarray,
        leaves: list[LeafBins],
        num_features: int,
    ) -> None:
        self.split_attribute = np.asarray(split_attribute, dtype=np.int64)
        self.split_threshold = np.asarray(split_threshold, dtype=np.float64)
        self.children_left = np.asarray(children_left, dtype=np.int64)
        self.children_right = np.asarray(children_right, dtype=np.int64)
        self.leaf_ids = np.asarray(leaf_ids, dtype=np.int64)
        self.leaves = leaves
        self.num_features = num_features
        # Majority in-bag class per leaf; argmax takes the lowest index on ties.
        self.leaf_votes = np.array(
            [int(np.argmax(b.ib_counts)) for b in leaves], dtype=np.int64
        )

    @property
    def num_nodes(self) -> int:
        return self.split_attribute.shape[0]

    @property
    def num_leaves(self) -> int:
        return len(self.leaves)

    def route(self, x: np.ndarray) -> int:
        """Leaf id reached by a single example."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.num_features,):
            raise ValueError(f"expected {self.num_features} features, got shape {x.shape}")
        node = 0
        while self.split_attribute[node] >= 0:
            if x[self.split_attribute[node]] <= self.split_threshold[node]:
                node = self.children_left[node]
            else:
                node = self.children_right[node]
        return int(self.leaf_ids[node])

    def route_batch(self, xs: np.ndarray) -> np.ndarray:
        """Leaf ids for a (U, D) feature matrix, one descent level at a time."""
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.num_features:
            raise ValueError(f"expected (U, {self.num_features}) features, got {xs.shape}")
        node = np.zeros(xs.shape[0], dtype=np.int64)
        while True:
            attr = self.split_attribute[node]
            active = np.flatnonzero(attr >= 0)
            if active.size == 0:
                return self.leaf_ids[node]
            at = node[active]
            go_left = xs[active, attr[active]] <= self.split_threshold[at]
            node[active] = np.where(
                go_left, self.children_left[at], self.children_right[at]
            )

    def leaf_count_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """(in-bag, out-of-bag) class counts stacked to (num_leaves, K) arrays."""
        ib = np.stack([b.ib_counts for b in self.leaves]).astype(np.float64)
        ob = np.stack([b.ob_counts for b in self.leaves]).astype(np.float64)
        return ib, ob


def grow_tree(
    sample: BootstrapSample,
    train: Dataset,
    config: TreeConfig,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grow an unpruned tree on the in-bag multiset of ``sample``.

    Children are processed depth-first, left before right, so node and leaf
    ids — and the order in which the generator is consumed — are a pure
    function of the inputs.  Out-of-bag bins start empty; see
    :func:`bin_out_of_bag`.
    """
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    x_all, y_all = train.features, train.labels
    k = train.num_classes

    split_attribute: list[int] = []
    split_threshold: list[float] = []
    children_left: list[int] = []
    children_right: list[int] = []
    leaf_ids: list[int] = []
    leaves: list[LeafBins] = []

    def new_node() -> int:
        split_attribute.append(-1)
        split_threshold.append(np.nan)
        children_left.append(-1)
        children_right.append(-1)
        leaf_ids.append(-1)
        return len(split_attribute) - 1

    root_members = np.asarray(sample.in_bag, dtype=np.int64)
    stack: list[tuple[int, np.ndarray]] = [(new_node(), root_members)]
    while stack:
        nid, members = stack.pop()
        y = y_all[members]
        counts = np.bincount(y, minlength=k)
        split = None
        if counts.max() < members.size:  # impure
            split = choose_split(x_all[members], y, k, config, rng)
        if split is None:
            leaf_ids[nid] = len(leaves)
            leaves.append(
                LeafBins(
                    ib_counts=counts,
                    ob_counts=np.zeros(k, dtype=np.int64),
                    ib_members=members.copy(),
                    ob_members=np.empty(0, dtype=np.int64),
                )
            )
            continue
        go_left = x_all[members, split.attribute] <= split.threshold
        split_attribute[nid] = split.attribute
        split_threshold[nid] = split.threshold
        left_id, right_id = new_node(), new_node()
        children_left[nid] = left_id
        children_right[nid] = right_id
        stack.append((right_id, members[~go_left]))
        stack.append((left_id, members[go_left]))

    return Tree(
        np.array(split_attribute),
        np.array(split_threshold),
        np.array(children_left),
        np.array(children_right),
        np.array(leaf_ids),
        leaves,
        train.num_features,
    )


def bin_out_of_bag(tree: Tree, sample: BootstrapSample, train: Dataset) -> Tree:
    """Route the out-of-bag examples of ``sample`` into the tree's leaf bins.

    Each out-of-bag example is counted once.  Returns the same tree with its
    ``ob_counts``/``ob_members`` populated (leaves no OB example reaches stay
    empty).
    """
    ob = np.asarray(sample.out_bag, dtype=np.int64)
    if ob.size == 0:
        return tree
    leaf_of = tree.route_batch(train.features[ob])
    labels = train.labels[ob]
    k = train.num_classes
    for leaf_id in range(tree.num_leaves):
        here = leaf_of == leaf_id
        if not here.any():
            continue
        bins = tree.leaves[leaf_id]
        bins.ob_members = ob[here]
        bins.ob_counts = np.bincount(labels[here], minlength=k)
    return tree


def route_to_leaf(tree: Tree, x: np.ndarray) -> int:
    """Leaf id reached by ``x``; equal-to-threshold comparisons go left."""
    return tree.route(x)


def leaf_majority_class(bins: LeafBins) -> int:
    """Most frequent in-bag class of a leaf; ties take the lowest index."""
    if bins.ib_counts.sum() <= 0:
        raise ValueError("leaf has no in-bag examples")
    return int(np.argmax(bins.ib_counts))
