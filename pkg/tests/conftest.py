"""Shared synthetic data builders for the test suite."""

import numpy as np
import pytest

from petforest.dataset import Dataset


def make_overlap(n=2000, shift=1.0, noise_dims=4, seed=20260816, frac1=0.5):
    """Two-class Gaussian mixture with controlled overlap.

    The first two features carry signal (class 1 shifted by `shift` in both),
    the remaining `noise_dims` are pure N(0, 1) distractors.
    """
    rng = np.random.default_rng(seed)
    n1 = int(round(n * frac1))
    n0 = n - n1
    x0 = np.hstack([rng.normal(0.0, 1.0, (n0, 2)), rng.normal(0.0, 1.0, (n0, noise_dims))])
    x1 = np.hstack([rng.normal(shift, 1.0, (n1, 2)), rng.normal(0.0, 1.0, (n1, noise_dims))])
    features = np.vstack([x0, x1])
    labels = np.array([0] * n0 + [1] * n1, dtype=np.int64)
    return Dataset(features, labels, 2)


def make_noisy_overlap(n=2000, shift=2.5, flip=0.10, noise_dims=4, seed=20260816):
    """Two Gaussian classes with geometric overlap plus uniform label noise.

    Class 1 is shifted by `shift` in the two signal dimensions; every label is
    then flipped with probability `flip` independently of the features, so the
    true conditional class distribution is mid-range over a wide region and
    known in closed form.
    """
    rng = np.random.default_rng(seed)
    half = n // 2
    x0 = np.hstack([rng.normal(0.0, 1.0, (half, 2)), rng.normal(0.0, 1.0, (half, noise_dims))])
    x1 = np.hstack(
        [rng.normal(shift, 1.0, (n - half, 2)), rng.normal(0.0, 1.0, (n - half, noise_dims))]
    )
    features = np.vstack([x0, x1])
    labels = np.array([0] * half + [1] * (n - half), dtype=np.int64)
    flips = rng.random(n) < flip
    labels = np.where(flips, 1 - labels, labels).astype(np.int64)
    return Dataset(features, labels, 2)


def make_separable(n=100, seed=7):
    """Binary problem with one cleanly separating feature plus three noise dims.

    Feature 0 is negative for class 0 and positive for class 1 with a wide
    margin, so any sane tree drives test error to zero.
    """
    rng = np.random.default_rng(seed)
    half = n // 2
    f0 = np.concatenate([rng.uniform(-2.0, -1.0, half), rng.uniform(1.0, 2.0, n - half)])
    noise = rng.normal(0.0, 1.0, (n, 3))
    features = np.column_stack([f0, noise])
    labels = np.array([0] * half + [1] * (n - half), dtype=np.int64)
    return Dataset(features, labels, 2)


def make_tiny(num_classes=2, n=40, num_features=3, seed=3):
    """Small random dataset where labels loosely follow feature 0 quantiles."""
    rng = np.random.default_rng(seed)
    features = rng.normal(0.0, 1.0, (n, num_features))
    order = np.argsort(features[:, 0], kind="stable")
    labels = np.empty(n, dtype=np.int64)
    for k in range(num_classes):
        block = order[k * n // num_classes : (k + 1) * n // num_classes]
        labels[block] = k
    # Sprinkle some label noise so leaves aren't trivially pure.
    flip = rng.choice(n, size=max(1, n // 10), replace=False)
    labels[flip] = rng.integers(0, num_classes, size=flip.size)
    if len(np.unique(labels)) < num_classes:  # pragma: no cover - seed-dependent guard
        labels[: num_classes] = np.arange(num_classes)
    return Dataset(features, labels, num_classes)


@pytest.fixture
def overlap_small():
    return make_overlap(n=300, seed=11)


@pytest.fixture
def separable():
    return make_separable()


@pytest.fixture
def tiny():
    return make_tiny()
