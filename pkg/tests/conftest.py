"""Shared oracles and builders for the test suite.

Gradient checks use 64-bit central finite differences; conv correctness
uses a direct nested-loop reference; evaluation correctness uses a pure
python brute-force recomputation. These stay deliberately independent of
the library code paths they check.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from cosrec.data import Dataset

FD_STEP = 1e-5
FD_TOLERANCE = 1e-4


def finite_difference(f, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of the scalar function f w.r.t. x.

    f takes no arguments and reads x by reference; x must be float64 and
    is restored to its original values afterwards.
    """
    assert x.dtype == np.float64, "finite differences need 64-bit inputs"
    grad = np.zeros_like(x)
    flat_x = x.reshape(-1)
    flat_g = grad.reshape(-1)
    for i in range(flat_x.size):
        saved = flat_x[i]
        flat_x[i] = saved + h
        up = f()
        flat_x[i] = saved - h
        down = f()
        flat_x[i] = saved
        flat_g[i] = (up - down) / (2.0 * h)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest elementwise relative error, floored to stay meaningful near 0."""
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / denom))


def conv2d_loop(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None) -> np.ndarray:
    """Direct six-loop valid cross-correlation; the trusted reference."""
    b, c, h, w = x.shape
    out_ch, in_ch, k, _ = weight.shape
    assert c == in_ch
    ho, wo = h - k + 1, w - k + 1
    y = np.zeros((b, out_ch, ho, wo), dtype=np.float64)
    for n in range(b):
        for o in range(out_ch):
            for i in range(ho):
                for j in range(wo):
                    acc = 0.0
                    for ch in range(in_ch):
                        for u in range(k):
                            for v in range(k):
                                acc += float(x[n, ch, i + u, j + v]) * float(weight[o, ch, u, v])
                    y[n, o, i, j] = acc + (float(bias[o]) if bias is not None else 0.0)
    return y


def evaluate_oracle(model, dataset: Dataset, ks=(1, 5, 10), exclude_train=True):
    """Brute-force per-user metric recomputation in plain python."""
    ws = int(getattr(model, "window_size", 1))
    aps, precs, recs, users = [], {k: [] for k in ks}, {k: [] for k in ks}, []
    for u in range(dataset.num_users):
        test = [int(i) for i in dataset.test_items(u)]
        if not test:
            continue
        train = [int(i) for i in dataset.train_items(u)]
        window = [0] * ws
        for pos, item in enumerate(train[-ws:]):
            window[ws - len(train[-ws:]) + pos] = item
        scores = model.predict_scores(
            np.array([u], dtype=np.int64),
            np.array([window], dtype=np.uint32))[0]
        banned = set(train) if exclude_train else set()
        ranked = sorted((i for i in range(1, dataset.num_items + 1) if i not in banned),
                        key=lambda i: (-float(scores[i - 1]), i))
        relevant = set(test)
        total = 0.0
        hits = 0
        for rank, item in enumerate(ranked, start=1):
            if item in relevant:
                hits += 1
                total += hits / rank
        aps.append(total / len(relevant))
        for k in ks:
            top_hits = sum(1 for item in ranked[:k] if item in relevant)
            precs[k].append(top_hits / k)
            recs[k].append(top_hits / len(relevant))
        users.append(u)
    return {
        "map": math.fsum(aps) / len(aps),
        "precision": {k: math.fsum(precs[k]) / len(precs[k]) for k in ks},
        "recall": {k: math.fsum(recs[k]) / len(recs[k]) for k in ks},
        "num_users": len(users),
        "ap": aps,
    }


def make_dataset(rng: np.random.Generator, num_users=20, num_items=30,
                 min_len=6, max_len=20) -> Dataset:
    """Random synthetic dataset honoring the Dataset invariants."""
    sequences = []
    boundaries = []
    for _ in range(num_users):
        n = int(rng.integers(min_len, max_len + 1))
        seq = rng.integers(1, num_items + 1, size=n).astype(np.uint32)
        sequences.append(seq)
        boundaries.append(-(-n * 4 // 5))
    return Dataset(sequences=sequences,
                   boundaries=np.asarray(boundaries, dtype=np.int64),
                   num_items=num_items)


def cyclic_dataset(num_users=200, num_items=50, pattern_len=10, repeats=3) -> Dataset:
    """Deterministic dataset where each user cycles a fixed item pattern."""
    sequences = []
    boundaries = []
    for u in range(num_users):
        start = (u * 7) % num_items
        pattern = [(start + i) % num_items + 1 for i in range(pattern_len)]
        seq = np.array(pattern * repeats, dtype=np.uint32)
        sequences.append(seq)
        boundaries.append(-(-len(seq) * 4 // 5))
    return Dataset(sequences=sequences,
                   boundaries=np.asarray(boundaries, dtype=np.int64),
                   num_items=num_items)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
