"""Estimator shells with the scikit-learn fit/predict surface.

Both estimators accept either a preprocessed Dataset or an iterable of
raw (user, item, timestamp) rows, which are then filtered and reindexed
with the estimator's thresholds. Fitted state lives in trailing-
underscore attributes; hyperparameters round-trip through get_params.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import Dataset, latest_window, preprocess
from .metrics import MetricsReport, evaluate, rank_items
from .model import CosRecModel, ModelConfig
from .training import train_model
from .validation import check_interactions, check_user_ids


def score(model, user: int, window) -> np.ndarray:
    """Single-user scoring through the uniform batch interface."""
    users = np.asarray([user], dtype=np.int64)
    windows = np.asarray([window], dtype=np.uint32).reshape(1, -1)
    return model.predict_scores(users, windows)[0]


def _as_dataset(X, min_user_actions: int, min_item_actions: int, seed: int) -> Dataset:
    if isinstance(X, Dataset):
        return X
    return preprocess(check_interactions(X), min_user_actions,
                      min_item_actions, seed=seed)


class _RecommenderMixin:
    """Ranking helpers shared by every fitted recommender."""

    def _eval_windows(self, users: np.ndarray) -> np.ndarray:
        ws = int(self.window_size)
        return np.stack([latest_window(self.dataset_.train_items(u), ws)
                         for u in users])

    def recommend(self, users, n: int = 10, exclude_train: bool = True) -> np.ndarray:
        """Top-n item ids per user, shape (len(users), n)."""
        check_is_fitted(self, "dataset_")
        users = check_user_ids(users, self.dataset_.num_users)
        if n < 1:
            raise ValueError("n must be >= 1")
        scores = self.predict_scores(users, self._eval_windows(users))
        rows = []
        for i, u in enumerate(users):
            exclude = np.unique(self.dataset_.train_items(u)) if exclude_train else ()
            ranked = rank_items(scores[i], exclude)
            if len(ranked) < n:
                raise ValueError(f"user {u}: only {len(ranked)} candidates, need {n}")
            rows.append(ranked[:n])
        return np.stack(rows)

    def predict(self, users) -> np.ndarray:
        """The single most likely next item per user."""
        return self.recommend(users, n=1)[:, 0]

    def score_report(self, ks=(1, 5, 10), threads: int = 1) -> MetricsReport:
        """Ranking metrics on the held-out split of the fitted dataset."""
        check_is_fitted(self, "dataset_")
        return evaluate(self, self.dataset_, ks=ks, threads=threads)

    def score(self, X=None, y=None) -> float:
        """MAP on the held-out split (scikit-learn scoring hook)."""
        check_is_fitted(self, "dataset_")
        dataset = X if isinstance(X, Dataset) else self.dataset_
        return evaluate(self, dataset).map


class CosRec(_RecommenderMixin, BaseEstimator):
    """Convolutional sequential recommender over pairwise item encodings.

    Parameters mirror the training defaults: embeddings of size 50,
    windows of 5 items predicting the next 3, two conv blocks of 128 and
    256 channels (or an MLP encoder with variant="mlp-base"), dropout
    0.5, Adam at 0.001 on batches of 512 with 3 negatives per target.
    """

    def __init__(self, embedding_dim=50, window_size=5, horizon=3,
                 conv_channels=(128, 256), kernel_sizes=(1, 3, 1, 3),
                 dropout=0.5, variant="cnn", mlp_hidden=512,
                 epochs=20, batch_size=512, learning_rate=0.001,
                 num_negatives=3, validation=True, val_fraction=0.1,
                 patience=5, min_user_actions=5, min_item_actions=5,
                 dtype="float32", random_state=0):
        self.embedding_dim = embedding_dim
        self.window_size = window_size
        self.horizon = horizon
        self.conv_channels = conv_channels
        self.kernel_sizes = kernel_sizes
        self.dropout = dropout
        self.variant = variant
        self.mlp_hidden = mlp_hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.num_negatives = num_negatives
        self.validation = validation
        self.val_fraction = val_fraction
        self.patience = patience
        self.min_user_actions = min_user_actions
        self.min_item_actions = min_item_actions
        self.dtype = dtype
        self.random_state = random_state

    def fit(self, X, y=None):
        dataset = _as_dataset(X, self.min_user_actions, self.min_item_actions,
                              self.random_state)
        config = ModelConfig(
            num_items=dataset.num_items,
            num_users=dataset.num_users,
            embedding_dim=self.embedding_dim,
            window_size=self.window_size,
            horizon=self.horizon,
            conv_channels=tuple(self.conv_channels),
            kernel_sizes=tuple(self.kernel_sizes),
            dropout=self.dropout,
            variant=self.variant,
            mlp_hidden=self.mlp_hidden,
            dtype=self.dtype,
        )
        model = CosRecModel(config)
        model.init_parameters(self.random_state)
        result = train_model(
            model, dataset,
            epochs=self.epochs,
            batch_size=self.batch_size,
            num_negatives=self.num_negatives,
            learning_rate=self.learning_rate,
            seed=self.random_state,
            validation=self.validation,
            val_fraction=self.val_fraction,
            patience=self.patience,
        )
        self.model_ = model
        self.dataset_ = dataset
        self.n_users_ = dataset.num_users
        self.n_items_ = dataset.num_items
        self.history_ = result.history
        self.train_result_ = result
        return self

    def predict_scores(self, users, windows=None) -> np.ndarray:
        """Scores for every item, shape (len(users), n_items_)."""
        check_is_fitted(self, "model_")
        users = check_user_ids(users, self.n_users_)
        if windows is None:
            windows = self._eval_windows(users)
        return self.model_.score(users, windows)


class PopularityRecommender(_RecommenderMixin, BaseEstimator):
    """Non-personalized baseline: items ranked by training-set frequency."""

    def __init__(self, window_size=1, min_user_actions=5, min_item_actions=5,
                 random_state=0):
        self.window_size = window_size
        self.min_user_actions = min_user_actions
        self.min_item_actions = min_item_actions
        self.random_state = random_state

    def fit(self, X, y=None):
        dataset = _as_dataset(X, self.min_user_actions, self.min_item_actions,
                              self.random_state)
        counts = np.zeros(dataset.num_items, dtype=np.float64)
        for u in range(dataset.num_users):
            np.add.at(counts, dataset.train_items(u).astype(np.int64) - 1, 1.0)
        self.popularity_ = counts
        self.dataset_ = dataset
        self.n_users_ = dataset.num_users
        self.n_items_ = dataset.num_items
        return self

    def predict_scores(self, users, windows=None) -> np.ndarray:
        """The same popularity vector for every user; windows are ignored."""
        check_is_fitted(self, "popularity_")
        users = check_user_ids(users, self.n_users_)
        return np.tile(self.popularity_, (len(users), 1))
