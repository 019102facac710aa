"""Interaction-log parsing, preprocessing, windowing and negative sampling.

Raw logs become a Dataset: densely reindexed users (0..num_users-1) and
items (1..num_items, id 0 reserved for window padding), each user's items
in chronological order, and a per-user train/test boundary at the first
80% of their actions.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, NamedTuple

import numpy as np

from .model import PADDING_ITEM

TRAIN_FRACTION = 0.8


class RawInteraction(NamedTuple):
    user_key: str
    item_key: str
    timestamp: int


class ParseError(ValueError):
    """Malformed input line, reported with its 1-based line number."""


def parse_movielens(stream: Iterable[str]) -> list[RawInteraction]:
    """Parse '::'-separated UserID::MovieID::Rating::Timestamp lines.

    The rating value is discarded: any rating counts as an interaction.
    """
    out = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split("::")
        if len(fields) != 4:
            raise ParseError(f"line {lineno}: expected 4 '::'-separated fields, got {len(fields)}")
        try:
            ts = int(fields[3])
        except ValueError:
            raise ParseError(f"line {lineno}: bad timestamp {fields[3]!r}") from None
        out.append(RawInteraction(fields[0], fields[1], ts))
    return out


def parse_gowalla(stream: Iterable[str]) -> list[RawInteraction]:
    """Parse tab-separated check-ins: user, ISO-8601 time, lat, lon, location id."""
    out = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise ParseError(f"line {lineno}: expected 5 tab-separated fields, got {len(fields)}")
        try:
            ts = datetime.strptime(fields[1], "%Y-%m-%dT%H:%M:%SZ")
        except ValueError:
            raise ParseError(f"line {lineno}: bad timestamp {fields[1]!r}") from None
        epoch = int(ts.replace(tzinfo=timezone.utc).timestamp())
        out.append(RawInteraction(fields[0], fields[4], epoch))
    return out


@dataclass
class Dataset:
    """Preprocessed interactions with dense ids and per-user splits."""

    sequences: list[np.ndarray]          # per user, chronological item ids
    boundaries: np.ndarray               # per user, train/test split index
    num_items: int
    min_user_actions: int = 0
    min_item_actions: int = 0
    seed: int = 0
    user_keys: list[str] | None = None   # original source keys, index = dense id
    item_keys: list[str] | None = None   # index = dense id - 1

    @property
    def num_users(self) -> int:
        return len(self.sequences)

    @property
    def num_actions(self) -> int:
        return int(sum(len(s) for s in self.sequences))

    def train_items(self, user: int) -> np.ndarray:
        return self.sequences[user][:self.boundaries[user]]

    def test_items(self, user: int) -> np.ndarray:
        return self.sequences[user][self.boundaries[user]:]

    def stats(self) -> dict:
        n_act = self.num_actions
        return {
            "users": self.num_users,
            "items": self.num_items,
            "actions": n_act,
            "avg_actions_per_user": n_act / max(1, self.num_users),
            "avg_actions_per_item": n_act / max(1, self.num_items),
        }


def preprocess(raw: list[RawInteraction], min_user_actions: int,
               min_item_actions: int, seed: int = 0) -> Dataset:
    """Filter rare items then rare users, reindex densely, order by time.

    Equal timestamps keep their input order; repeated (user, item) rows
    are kept as separate actions.
    """
    if min_user_actions < 1 or min_item_actions < 1:
        raise ValueError("filter thresholds must be >= 1")

    item_counts: dict[str, int] = {}
    for r in raw:
        item_counts[r.item_key] = item_counts.get(r.item_key, 0) + 1
    kept = [r for r in raw if item_counts[r.item_key] >= min_item_actions]

    user_counts: dict[str, int] = {}
    for r in kept:
        user_counts[r.user_key] = user_counts.get(r.user_key, 0) + 1
    kept = [r for r in kept if user_counts[r.user_key] >= min_user_actions]
    if not kept:
        raise ValueError("no interactions survive the filtering thresholds")

    # dense ids in order of first appearance; item 0 stays reserved for padding
    user_ids: dict[str, int] = {}
    item_ids: dict[str, int] = {}
    for r in kept:
        if r.user_key not in user_ids:
            user_ids[r.user_key] = len(user_ids)
        if r.item_key not in item_ids:
            item_ids[r.item_key] = len(item_ids) + 1

    per_user: list[list[tuple[int, int, int]]] = [[] for _ in user_ids]
    for pos, r in enumerate(kept):
        per_user[user_ids[r.user_key]].append((r.timestamp, pos, item_ids[r.item_key]))

    sequences = []
    boundaries = np.zeros(len(per_user), dtype=np.int64)
    for u, actions in enumerate(per_user):
        actions.sort(key=lambda a: (a[0], a[1]))
        seq = np.array([a[2] for a in actions], dtype=np.uint32)
        sequences.append(seq)
        boundaries[u] = -(-len(seq) * 4 // 5)  # ceil(0.8 * n)

    return Dataset(
        sequences=sequences,
        boundaries=boundaries,
        num_items=len(item_ids),
        min_user_actions=min_user_actions,
        min_item_actions=min_item_actions,
        seed=seed,
        user_keys=list(user_ids),
        item_keys=list(item_ids),
    )


def carve_validation(dataset: Dataset, fraction: float = 0.1) -> Dataset:
    """Shrink each user's training portion, exposing its tail as a test split.

    The returned dataset sees only the original training items; its "test"
    items are the held-back tail, which early stopping evaluates against.
    """
    sequences = [dataset.sequences[u][:dataset.boundaries[u]] for u in range(dataset.num_users)]
    boundaries = np.array(
        [-(-len(s) * int(round((1 - fraction) * 100)) // 100) for s in sequences],
        dtype=np.int64)
    return Dataset(
        sequences=sequences,
        boundaries=boundaries,
        num_items=dataset.num_items,
        min_user_actions=dataset.min_user_actions,
        min_item_actions=dataset.min_item_actions,
        seed=dataset.seed,
        user_keys=dataset.user_keys,
        item_keys=dataset.item_keys,
    )


class TrainWindow(NamedTuple):
    user: int
    inputs: tuple[int, ...]   # L item ids, possibly left-padded with 0
    targets: tuple[int, ...]  # the T items that follow


@dataclass
class Windows:
    """Training windows as contiguous arrays, indexable as TrainWindow rows."""

    users: np.ndarray    # (n,)
    inputs: np.ndarray   # (n, L)
    targets: np.ndarray  # (n, T)

    def __len__(self) -> int:
        return len(self.users)

    def __getitem__(self, i: int) -> TrainWindow:
        return TrainWindow(int(self.users[i]),
                           tuple(int(x) for x in self.inputs[i]),
                           tuple(int(x) for x in self.targets[i]))


def generate_windows(dataset: Dataset, window_size: int, horizon: int) -> Windows:
    """Slide over each user's training portion.

    A window's targets are the horizon items starting at position p; its
    inputs are the window_size items before p, left-padded with the
    padding id when p < window_size. Long sequences produce every
    unpadded window; a sequence too short for one (but with at least one
    input item and a full target block) produces a single padded window.
    """
    users, inputs, targets = [], [], []
    l, t = window_size, horizon
    for u in range(dataset.num_users):
        seq = dataset.train_items(u)
        n = len(seq)
        if n < t + 1:
            continue
        for p in range(min(l, n - t), n - t + 1):
            window = np.full(l, PADDING_ITEM, dtype=np.uint32)
            lo = max(0, p - l)
            window[l - (p - lo):] = seq[lo:p]
            users.append(u)
            inputs.append(window)
            targets.append(seq[p:p + t])
    if not users:
        return Windows(np.zeros(0, dtype=np.int64),
                       np.zeros((0, l), dtype=np.uint32),
                       np.zeros((0, t), dtype=np.uint32))
    return Windows(np.asarray(users, dtype=np.int64),
                   np.stack(inputs),
                   np.stack(targets).astype(np.uint32))


def latest_window(sequence: np.ndarray, window_size: int) -> np.ndarray:
    """The last window_size items of a sequence, left-padded with 0."""
    window = np.full(window_size, PADDING_ITEM, dtype=np.uint32)
    tail = sequence[-window_size:] if len(sequence) else sequence
    if len(tail):
        window[window_size - len(tail):] = tail
    return window


class NegativeSampler:
    """Uniform sampling from each user's non-interacted items.

    The candidate universe per user is every real item minus the user's
    training items; draws are with replacement. Rejection sampling keeps
    the draw exactly uniform without materializing per-user candidate
    arrays.
    """

    def __init__(self, dataset: Dataset, rate: int = 3):
        if rate < 1:
            raise ValueError("negative sampling rate must be >= 1")
        self.rate = rate
        self.num_items = dataset.num_items
        self._train_sets = [frozenset(int(i) for i in dataset.train_items(u))
                            for u in range(dataset.num_users)]

    def universe_size(self, user: int) -> int:
        return self.num_items - len(self._train_sets[user])

    def sample(self, user: int, num_targets: int, rng: np.random.Generator) -> np.ndarray:
        """Draw rate negatives per target, shape (num_targets, rate)."""
        if self.universe_size(user) < 1:
            raise ValueError(f"user {user} has interacted with every item; nothing to sample")
        seen = self._train_sets[user]
        total = num_targets * self.rate
        out = np.empty(total, dtype=np.uint32)
        filled = 0
        while filled < total:
            draws = rng.integers(1, self.num_items + 1, size=total - filled)
            for d in draws:
                if int(d) not in seen:
                    out[filled] = d
                    filled += 1
        return out.reshape(num_targets, self.rate)

    def sample_batch(self, users: np.ndarray, num_targets: int,
                     rng: np.random.Generator) -> np.ndarray:
        """Negatives for a batch of windows, shape (batch, num_targets, rate)."""
        return np.stack([self.sample(int(u), num_targets, rng) for u in users])


# ----------------------------------------------------------------------
# dataset file format: little-endian uint32 records behind a small header

_MAGIC = b"CSRD"
_VERSION = 1


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<6I", _VERSION, dataset.num_users, dataset.num_items,
                            dataset.min_user_actions, dataset.min_item_actions,
                            dataset.seed))
        for u in range(dataset.num_users):
            seq = dataset.sequences[u]
            f.write(struct.pack("<3I", u, len(seq), int(dataset.boundaries[u])))
            f.write(np.ascontiguousarray(seq, dtype="<u4").tobytes())


def load_dataset(path) -> Dataset:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a dataset file (bad magic {magic!r})")
        version, num_users, num_items, min_user, min_item, seed = struct.unpack("<6I", f.read(24))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported dataset format version {version}")
        sequences = []
        boundaries = np.zeros(num_users, dtype=np.int64)
        for u in range(num_users):
            uid, n, boundary = struct.unpack("<3I", f.read(12))
            if uid != u:
                raise ValueError(f"{path}: user record {u} carries id {uid}")
            seq = np.frombuffer(f.read(4 * n), dtype="<u4").astype(np.uint32)
            sequences.append(seq)
            boundaries[u] = boundary
        if f.read(1):
            raise ValueError(f"{path}: trailing bytes after the last user record")
    return Dataset(sequences=sequences, boundaries=boundaries, num_items=num_items,
                   min_user_actions=min_user, min_item_actions=min_item, seed=seed)
