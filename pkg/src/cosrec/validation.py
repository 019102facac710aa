"""Input-validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numbers

import numpy as np

from .data import RawInteraction


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_fraction(value, name: str) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly between 0 and 1, got {value}")
    return value


def check_user_ids(users, num_users: int) -> np.ndarray:
    """Validate internal user ids: integers in [0, num_users)."""
    users = np.atleast_1d(np.asarray(users))
    if users.ndim != 1:
        raise ValueError(f"users must be one-dimensional, got shape {users.shape}")
    if users.size == 0:
        raise ValueError("users must not be empty")
    if not np.issubdtype(users.dtype, np.integer):
        raise TypeError(f"users must be integers, got dtype {users.dtype}")
    if users.min() < 0 or users.max() >= num_users:
        raise ValueError(f"user ids must lie in [0, {num_users - 1}]")
    return users.astype(np.int64)


def check_interactions(X) -> list[RawInteraction]:
    """Coerce an iterable of (user, item, timestamp) rows to interactions."""
    out = []
    for i, row in enumerate(X):
        if isinstance(row, RawInteraction):
            out.append(row)
            continue
        try:
            user, item, ts = row
        except (TypeError, ValueError):
            raise ValueError(
                f"row {i}: expected (user, item, timestamp), got {row!r}") from None
        if not isinstance(ts, numbers.Real):
            raise TypeError(f"row {i}: timestamp must be numeric, got {ts!r}")
        out.append(RawInteraction(str(user), str(item), int(ts)))
    if not out:
        raise ValueError("no interactions given")
    return out
