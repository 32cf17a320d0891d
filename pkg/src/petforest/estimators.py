"""Class-probability estimators layered on a bagged forest.

Three estimator families share the same grown trees:

* ``bpets`` — per-tree Laplace-smoothed in-bag leaf frequencies, averaged
  over the forest.
* ``ebpets`` — leaf frequencies over in-bag plus alpha-weighted out-of-bag
  members, with Laplace, m-estimate, or no smoothing.  With out-of-bag
  inclusion off and Laplace smoothing on it reduces bitwise to ``bpets``.
* ``mobesp`` — per-leaf K-by-K conditional matrices indexed by the ensemble's
  out-of-bag classification of each leaf member; prediction averages the
  matrix column of the ensemble's vote over trees where that column is
  non-empty.

All predictors route a whole probe matrix through each tree at once; the
single-example operations are the one-row case of the batched ones, so both
paths agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .ensemble import Ensemble, OobClassifications, majority_vote_batch
from .tree import Tree


class EstimatorKind(str, Enum):
    BPETS = "bpets"
    EBPETS = "ebpets"
    MOBESP = "mobesp"


class Smoothing(str, Enum):
    LAPLACE = "laplace"
    M_ESTIMATE = "m_estimate"
    NONE = "none"


@dataclass(frozen=True)
class EstimatorOptions:
    """Estimation-time switches; tree growth is configured separately.

    ``alpha`` weights out-of-bag mass against in-bag mass, both in enhanced
    leaf estimates and in conditional-matrix cells.  ``m`` and ``priors``
    parameterize the m-estimate smoother; left unset they default to the
    class count K and the uniform distribution, where the m-estimate equals
    Laplace smoothing.
    """

    kind: EstimatorKind
    include_oob: bool = False
    smoothing: Smoothing = Smoothing.LAPLACE
    m: float | None = None
    priors: tuple[float, ...] | None = None
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == EstimatorKind.BPETS:
            if self.include_oob or self.smoothing != Smoothing.LAPLACE:
                raise ValueError(
                    "bpets is the fixed baseline: include_oob=False, Laplace smoothing"
                )
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.m is not None and self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        if self.priors is not None:
            total = float(np.sum(self.priors))
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"priors must sum to 1, got {total}")
            if min(self.priors) < 0:
                raise ValueError("priors must be non-negative")


@dataclass(frozen=True)
class ProbEstimate:
    """A class distribution for one example plus the ensemble's voted class.

    ``predicted_class`` is the majority vote of the underlying forest (for
    mobesp, the class whose matrix column was averaged); the argmax of
    ``probs`` may differ and is what reclassification accuracy compares
    against.
    """

    probs: np.ndarray
    predicted_class: int

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()}, not 1")
        if (probs < 0).any():
            raise ValueError("probabilities must be non-negative")
        if not 0 <= self.predicted_class < probs.shape[0]:
            raise ValueError(f"predicted_class {self.predicted_class} out of range")
        object.__setattr__(self, "probs", probs)


def laplace_estimate(n_k: float, n: float, num_classes: int) -> float:
    """(n_k + 1) / (n + K): leaf frequency pulled toward the uniform prior."""
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    if n_k < 0 or n < n_k:
        raise ValueError(f"need 0 <= n_k <= n, got n_k={n_k}, n={n}")
    return (n_k + 1) / (n + num_classes)


def m_estimate(n_k: float, n: float, p_k: float, m: float) -> float:
    """(n_k + p_k * m) / (n + m): frequency pulled toward prior ``p_k``.

    With p_k = 1/K and m = K this is exactly the Laplace estimate; with
    m = 0 it is the raw leaf frequency.
    """
    if n_k < 0 or n < n_k:
        raise ValueError(f"need 0 <= n_k <= n, got n_k={n_k}, n={n}")
    if not 0 <= p_k <= 1:
        raise ValueError(f"p_k must lie in [0, 1], got {p_k}")
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if n + m <= 0:
        raise ValueError("m = 0 requires a non-empty leaf")
    return (n_k + p_k * m) / (n + m)


def _leaf_estimate_rows(
    ib: np.ndarray, ob: np.ndarray, opts: EstimatorOptions, num_classes: int
) -> np.ndarray:
    """Per-leaf class distributions for (L, K) in-bag/out-of-bag count rows."""
    counts = ib + opts.alpha * ob if opts.include_oob else ib.astype(np.float64)
    totals = counts.sum(axis=1, keepdims=True)
    if opts.smoothing == Smoothing.LAPLACE:
        return (counts + 1.0) / (totals + num_classes)
    if opts.smoothing == Smoothing.M_ESTIMATE:
        m = float(num_classes) if opts.m is None else opts.m
        priors = (
            np.full(num_classes, 1.0 / num_classes)
            if opts.priors is None
            else np.asarray(opts.priors, dtype=np.float64)
        )
        if (totals + m <= 0).any():
            raise ValueError("m = 0 requires non-empty leaf mass")
        return (counts + priors * m) / (totals + m)
    if (totals <= 0).any():
        raise ValueError("unsmoothed estimates require non-empty leaf mass")
    return counts / totals


def ebpets_leaf_estimate(
    bins, opts: EstimatorOptions, num_classes: int | None = None
) -> np.ndarray:
    """Class distribution of a single leaf under ``opts``."""
    k = len(bins.ib_counts) if num_classes is None else num_classes
    ib = np.asarray(bins.ib_counts, dtype=np.float64)[None, :]
    ob = np.asarray(bins.ob_counts, dtype=np.float64)[None, :]
    return _leaf_estimate_rows(ib, ob, opts, k)[0]


_BPETS_BASELINE = EstimatorOptions(kind=EstimatorKind.BPETS)


def _leafwise_average(e: Ensemble, xs: np.ndarray, opts: EstimatorOptions) -> np.ndarray:
    """Mean over trees of the routed leaf's class distribution; (U, K)."""
    xs = np.asarray(xs, dtype=np.float64)
    per_tree = np.empty((e.num_trees, xs.shape[0], e.num_classes))
    for t, tree in enumerate(e.trees):
        ib, ob = tree.leaf_count_matrices()
        table = _leaf_estimate_rows(ib, ob, opts, e.num_classes)
        per_tree[t] = table[tree.route_batch(xs)]
    return per_tree.mean(axis=0)


def ebpets_predict_batch(e: Ensemble, xs: np.ndarray, opts: EstimatorOptions) -> tuple[np.ndarray, np.ndarray]:
    """(U, K) probabilities and (U,) ensemble votes for a probe matrix."""
    return _leafwise_average(e, xs, opts), majority_vote_batch(e, xs)


def ebpets_predict(e: Ensemble, x: np.ndarray, opts: EstimatorOptions) -> ProbEstimate:
    """Averaged enhanced leaf estimate for one example."""
    probs, votes = ebpets_predict_batch(e, np.asarray(x, dtype=np.float64)[None, :], opts)
    return ProbEstimate(probs=probs[0], predicted_class=int(votes[0]))


def bpets_predict_batch(e: Ensemble, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Baseline bagged estimate: Laplace on in-bag counts only."""
    return ebpets_predict_batch(e, xs, _BPETS_BASELINE)


def bpets_predict(e: Ensemble, x: np.ndarray) -> ProbEstimate:
    """Baseline bagged estimate for one example."""
    return ebpets_predict(e, x, _BPETS_BASELINE)


@dataclass
class MobespMatrices:
    """Per-leaf conditional class distributions, one (L_t, K, K) array per tree.

    ``matrices[t][l][k, j]`` estimates P(true class = k | ensemble OOB vote = j)
    among the members of leaf ``l``; ``support[t][l][j]`` is the combined
    in-bag + alpha * out-of-bag mass behind column ``j``.  Columns with zero
    support are all-zero and must be skipped.
    """

    alpha: float
    matrices: list[np.ndarray]
    support: list[np.ndarray]


def _member_cross_counts(
    members: np.ndarray, true_labels: np.ndarray, oob_labels: np.ndarray, k: int
) -> np.ndarray:
    """K-by-K tally of (true class, OOB-voted class) over ``members``."""
    if members.size == 0:
        return np.zeros((k, k))
    flat = true_labels[members] * k + oob_labels[members]
    return np.bincount(flat, minlength=k * k).reshape(k, k).astype(np.float64)


def build_mobesp_matrices(
    e: Ensemble, train: Dataset, oob: OobClassifications, opts: EstimatorOptions
) -> MobespMatrices:
    """Fill every leaf's conditional matrix from its members' OOB votes.

    In-bag members contribute one unit per bootstrap draw, out-of-bag members
    ``opts.alpha`` units each.  Column ``j`` pools the members the ensemble
    OOB-classified as ``j`` and normalizes their true-class tally.
    """
    k = e.num_classes
    y = train.labels
    yhat = oob.predicted
    matrices: list[np.ndarray] = []
    support: list[np.ndarray] = []
    for tree in e.trees:
        mass = np.empty((tree.num_leaves, k, k))
        for l, bins in enumerate(tree.leaves):
            mass[l] = _member_cross_counts(bins.ib_members, y, yhat, k)
            mass[l] += opts.alpha * _member_cross_counts(bins.ob_members, y, yhat, k)
        col_mass = mass.sum(axis=1)  # (L, K): total weight behind each vote j
        with np.errstate(invalid="ignore"):
            normalized = np.where(col_mass[:, None, :] > 0, mass / col_mass[:, None, :], 0.0)
        matrices.append(normalized)
        support.append(col_mass)
    return MobespMatrices(alpha=opts.alpha, matrices=matrices, support=support)


def mobesp_predict_batch(
    e: Ensemble, mats: MobespMatrices, xs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(U, K) probabilities and (U,) votes under the conditional matrices.

    For each probe the ensemble vote picks a matrix column; the column is
    averaged over the trees where its routed leaf has support for that vote.
    Probes with no supporting tree anywhere fall back to the average of the
    trees' unconditioned (in-bag + alpha * out-of-bag) leaf frequencies.
    """
    xs = np.asarray(xs, dtype=np.float64)
    u = xs.shape[0]
    votes = majority_vote_batch(e, xs)
    rows = np.arange(u)
    acc = np.zeros((u, e.num_classes))
    contributing = np.zeros(u, dtype=np.int64)
    leaf_of = np.empty((e.num_trees, u), dtype=np.int64)
    for t, tree in enumerate(e.trees):
        leaf_of[t] = tree.route_batch(xs)
        cols = mats.matrices[t][leaf_of[t], :, votes]
        has_support = mats.support[t][leaf_of[t], votes] > 0
        acc[has_support] += cols[has_support]
        contributing += has_support
    probs = np.zeros_like(acc)
    covered = contributing > 0
    probs[covered] = acc[covered] / contributing[covered, None]
    orphans = np.flatnonzero(~covered)
    if orphans.size:
        fallback_opts = EstimatorOptions(
            kind=EstimatorKind.EBPETS,
            include_oob=True,
            smoothing=Smoothing.NONE,
            alpha=mats.alpha,
        )
        stack = np.empty((e.num_trees, orphans.size, e.num_classes))
        for t, tree in enumerate(e.trees):
            ib, ob = tree.leaf_count_matrices()
            table = _leaf_estimate_rows(ib, ob, fallback_opts, e.num_classes)
            stack[t] = table[leaf_of[t][orphans]]
        probs[orphans] = stack.mean(axis=0)
    return probs, votes


def mobesp_predict(e: Ensemble, mats: MobespMatrices, x: np.ndarray) -> ProbEstimate:
    """Conditional-matrix estimate for one example."""
    probs, votes = mobesp_predict_batch(e, mats, np.asarray(x, dtype=np.float64)[None, :])
    return ProbEstimate(probs=probs[0], predicted_class=int(votes[0]))


def estimates_from_arrays(probs: np.ndarray, votes: np.ndarray) -> list[ProbEstimate]:
    """Wrap batched predictor output as individual estimates."""
    return [ProbEstimate(probs=p, predicted_class=int(v)) for p, v in zip(probs, votes)]
