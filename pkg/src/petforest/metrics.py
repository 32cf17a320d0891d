"""Evaluation metrics for class-probability estimates.

All four metrics read a :class:`ScoredSet`: the (U, K) estimate matrix, the
true labels, and the *training-set* priors (used for clamping and for the
class-weighted area under the lift chart).

* ``zero_one_mse`` — mean squared error of the probability assigned to the
  true class; on two classes exactly half the Brier score.  Lower is better.
* ``avg_log_loss`` — mean negative log2 of the true-class probability, in
  bits, after clamping exact 0/1 estimates away from the boundary.  Lower is
  better.
* ``aulc`` — prior-weighted area under the cumulative lift chart, evaluated
  at the rank boundaries between distinct estimate values.  Higher is better.
* ``delta_accuracy`` — accuracy of argmax reclassification minus accuracy of
  the ensemble vote.  Higher is better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimators import ProbEstimate


@dataclass(frozen=True)
class ScoredSet:
    """Probability estimates for a labelled evaluation set."""

    probs: np.ndarray
    labels: np.ndarray
    train_priors: np.ndarray

    def __post_init__(self) -> None:
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        priors = np.ascontiguousarray(self.train_priors, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[0] < 1:
            raise ValueError(f"probs must be a non-empty (U, K) matrix, got {probs.shape}")
        u, k = probs.shape
        if labels.shape != (u,):
            raise ValueError(f"labels shape {labels.shape} does not match {u} estimates")
        if priors.shape != (k,):
            raise ValueError(f"train_priors shape {priors.shape} does not match K={k}")
        if labels.min() < 0 or labels.max() >= k:
            raise ValueError("labels must lie in 0..K-1")
        if abs(float(priors.sum()) - 1.0) > 1e-9 or (priors <= 0).any():
            raise ValueError("train_priors must be strictly positive and sum to 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "train_priors", priors)

    @classmethod
    def from_estimates(
        cls,
        estimates: Sequence[ProbEstimate],
        labels: np.ndarray,
        train_priors: np.ndarray,
    ) -> "ScoredSet":
        return cls(np.stack([e.probs for e in estimates]), labels, train_priors)

    @property
    def num_examples(self) -> int:
        return self.probs.shape[0]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class MetricReport:
    """The four metric values for one estimator on one evaluation set."""

    zero_one_mse: float
    av_log_loss: float
    aulc: float
    delta_acc: float
    per_class_aulc: tuple[float, ...]


def zero_one_mse(s: ScoredSet) -> float:
    """Mean (1 - p(true class))^2; 0 only for perfectly confident, correct sets."""
    p_true = s.probs[np.arange(s.num_examples), s.labels]
    return float(np.mean((1.0 - p_true) ** 2))


def clamp_extremes(probs: np.ndarray, train_priors: np.ndarray) -> np.ndarray:
    """Replace exact 0 and 1 estimates by eps and 1-eps, without renormalizing.

    eps = min(0.005, half the smallest training prior).  Only exact endpoint
    values move; everything else, including values between 0 and eps, is left
    alone.
    """
    priors = np.asarray(train_priors, dtype=np.float64)
    eps = min(0.005, 0.5 * float(priors.min()))
    out = np.asarray(probs, dtype=np.float64).copy()
    out[out == 0.0] = eps
    out[out == 1.0] = 1.0 - eps
    return out


def avg_log_loss(s: ScoredSet) -> float:
    """Mean -log2 p(true class) in bits, after clamping exact 0/1 estimates."""
    clamped = clamp_extremes(s.probs, s.train_priors)
    p_true = clamped[np.arange(s.num_examples), s.labels]
    return float(np.mean(-np.log2(p_true)))


def _class_rate(labels: np.ndarray, k: int) -> float:
    rate = float(np.mean(labels == k))
    if rate == 0.0:
        raise ValueError(f"class {k} is absent from the evaluation labels; lift is undefined")
    return rate


def lift(s: ScoredSet, k: int, v: float) -> float:
    """Lift of class ``k`` at list fraction ``v``.

    The evaluation set is ranked by the class-``k`` estimate, descending
    (ties in stable input order); the class-``k`` rate among the top
    ceil(v*U) examples is divided by the overall rate, so lift(..., 1.0) is
    exactly 1.
    """
    if not 0.0 < v <= 1.0:
        raise ValueError(f"v must lie in (0, 1], got {v}")
    if not 0 <= k < s.num_classes:
        raise ValueError(f"class {k} out of range")
    overall = _class_rate(s.labels, k)
    order = np.argsort(-s.probs[:, k], kind="stable")
    top = order[: math.ceil(v * s.num_examples)]
    return float(np.mean(s.labels[top] == k)) / overall


def lift_curve(s: ScoredSet, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Lift of class ``k`` evaluated at every distinct-estimate rank boundary.

    Returns (fractions, lifts).  Examples with equal estimates are grouped,
    so the curve is invariant to their input order; the last point is always
    (1.0, 1.0 / overall-rate * overall-rate) = (1.0, 1.0).
    """
    if not 0 <= k < s.num_classes:
        raise ValueError(f"class {k} out of range")
    overall = _class_rate(s.labels, k)
    u = s.num_examples
    p = s.probs[:, k]
    order = np.argsort(-p, kind="stable")
    sorted_p = p[order]
    hits = np.cumsum(s.labels[order] == k)
    # Last rank of each run of equal estimates, plus the final rank.
    boundary = np.flatnonzero(sorted_p[:-1] != sorted_p[1:])
    last = np.concatenate([boundary, [u - 1]])
    sizes = last + 1
    fractions = sizes / u
    lifts = (hits[last] / sizes) / overall
    return fractions, lifts


def aulc_per_class(s: ScoredSet) -> np.ndarray:
    """Trapezoid area under each class's lift curve, anchored at l(0) = l(v_1)."""
    areas = np.empty(s.num_classes)
    for k in range(s.num_classes):
        fractions, lifts = lift_curve(s, k)
        v = np.concatenate([[0.0], fractions])
        l = np.concatenate([[lifts[0]], lifts])
        areas[k] = float(np.sum((v[1:] - v[:-1]) * (l[1:] + l[:-1]) / 2.0))
    return areas


def aulc(s: ScoredSet) -> float:
    """Training-prior-weighted mean of the per-class lift-chart areas."""
    return float(np.dot(s.train_priors, aulc_per_class(s)))


def delta_accuracy(s: ScoredSet, vote_labels: np.ndarray) -> float:
    """Accuracy gained by argmax reclassification over the ensemble vote.

    Argmax ties take the lowest class index.  Positive values mean the
    probability estimates classify better than the vote that produced them.
    """
    vote_labels = np.asarray(vote_labels, dtype=np.int64)
    if vote_labels.shape != (s.num_examples,):
        raise ValueError(
            f"vote_labels shape {vote_labels.shape} does not match {s.num_examples} estimates"
        )
    reclassified = s.probs.argmax(axis=1)
    return float(np.mean(s.labels == reclassified) - np.mean(s.labels == vote_labels))


def score(s: ScoredSet, vote_labels: np.ndarray) -> MetricReport:
    """All four metrics in one report."""
    per_class = aulc_per_class(s)
    return MetricReport(
        zero_one_mse=zero_one_mse(s),
        av_log_loss=avg_log_loss(s),
        aulc=float(np.dot(s.train_priors, per_class)),
        delta_acc=delta_accuracy(s, vote_labels),
        per_class_aulc=tuple(float(a) for a in per_class),
    )
