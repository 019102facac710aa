"""Ranking and top-N metrics over the held-out test split.

Every metric is computed from a deterministic ranked list: items sorted
by descending score, ties broken by ascending item id. The protocol is
one ranking per user, produced from the user's last training window,
with the user's training items excluded from the candidate set.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import Dataset, latest_window


@dataclass
class MetricsReport:
    map: float
    precision: dict[int, float]
    recall: dict[int, float]
    num_users: int
    per_user: dict[str, np.ndarray] | None = None

    def to_text(self) -> str:
        lines = [f"map {self.map:.4f}"]
        for k in sorted(self.precision):
            lines.append(f"prec@{k} {self.precision[k]:.4f}")
        for k in sorted(self.recall):
            lines.append(f"recall@{k} {self.recall[k]:.4f}")
        lines.append(f"users {self.num_users}")
        return "\n".join(lines) + "\n"


def rank_items(scores: np.ndarray, exclude=()) -> np.ndarray:
    """All item ids except the exclusions, by descending score then ascending id."""
    scores = np.asarray(scores)
    n = scores.shape[0]
    ids = np.arange(1, n + 1, dtype=np.int64)
    if len(exclude):
        ex = np.fromiter((int(e) for e in exclude), dtype=np.int64)
        if ex.size and (ex.min() < 1 or ex.max() > n):
            raise ValueError(f"excluded ids must lie in [1, {n}]")
        keep = np.ones(n, dtype=bool)
        keep[ex - 1] = False
        ids = ids[keep]
        scores = scores[keep]
    order = np.lexsort((ids, -scores))
    return ids[order]


def precision_recall_at(ranked: np.ndarray, relevant: set, n: int) -> tuple[float, float]:
    if n < 1:
        raise ValueError("cutoff must be >= 1")
    if not relevant:
        raise ValueError("relevant set is empty")
    hits = sum(1 for item in ranked[:n] if int(item) in relevant)
    return hits / n, hits / len(relevant)


def average_precision(ranked: np.ndarray, relevant: set) -> float:
    """Precision accumulated at every rank that holds a relevant item.

    The full ranked list is scanned (no truncation); the sum is divided
    by the number of relevant items.
    """
    if not relevant:
        raise ValueError("relevant set is empty")
    total = 0.0
    hits = 0
    for rank, item in enumerate(ranked, start=1):
        if int(item) in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def _window_size_of(model) -> int:
    ws = getattr(model, "window_size", None)
    return int(ws) if ws else 1


def evaluate(model, dataset: Dataset, ks=(1, 5, 10), exclude_train: bool = True,
             batch_size: int = 256, threads: int = 1,
             return_per_user: bool = False) -> MetricsReport:
    """Score every user once and average the per-user metrics.

    The model must expose predict_scores(users, windows) -> (batch,
    num_items); users whose test split is empty are skipped.
    """
    ws = _window_size_of(model)
    eligible = [u for u in range(dataset.num_users) if len(dataset.test_items(u)) > 0]
    ks = tuple(ks)

    ap = np.zeros(len(eligible))
    prec = {k: np.zeros(len(eligible)) for k in ks}
    rec = {k: np.zeros(len(eligible)) for k in ks}

    def run_chunk(start: int):
        users = eligible[start:start + batch_size]
        windows = np.stack([latest_window(dataset.train_items(u), ws) for u in users])
        scores = model.predict_scores(np.asarray(users, dtype=np.int64), windows)
        for offset, u in enumerate(users):
            exclude = dataset.train_items(u) if exclude_train else ()
            ranked = rank_items(scores[offset], np.unique(exclude))
            relevant = {int(i) for i in dataset.test_items(u)}
            idx = start + offset
            ap[idx] = average_precision(ranked, relevant)
            for k in ks:
                prec[k][idx], rec[k][idx] = precision_recall_at(ranked, relevant, k)

    starts = range(0, len(eligible), batch_size)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_chunk, starts))
    else:
        for s in starts:
            run_chunk(s)

    def mean(values: np.ndarray) -> float:
        return math.fsum(values) / len(values) if len(values) else 0.0

    return MetricsReport(
        map=mean(ap),
        precision={k: mean(prec[k]) for k in ks},
        recall={k: mean(rec[k]) for k in ks},
        num_users=len(eligible),
        per_user={"ap": ap, **{f"prec@{k}": prec[k] for k in ks},
                  **{f"recall@{k}": rec[k] for k in ks}} if return_per_user else None,
    )
