"""The sequential recommender model.

A window of the user's L most recent items is embedded, expanded into an
L x L grid of concatenated item-pair embeddings, pushed through either a
small 2-D CNN or an MLP to a d-dimensional sequence vector, concatenated
with the user embedding, and projected to one logit per item. Training
minimizes binary cross-entropy over the T next items against N sampled
negatives per target. All gradients are derived by hand; there is no
autodiff anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import (
    BatchNorm,
    Conv2d,
    Dense,
    Dropout,
    relu_backward,
    relu_forward,
)
from .tensor import ShapeError, resolve_dtype, sigmoid, softplus

PADDING_ITEM = 0

VARIANTS = ("cnn", "mlp-base")


@dataclass
class ModelConfig:
    """Architecture and vocabulary sizes; every layer shape derives from here."""

    num_items: int
    num_users: int
    embedding_dim: int = 50
    window_size: int = 5
    horizon: int = 3
    conv_channels: tuple[int, int] = (128, 256)
    kernel_sizes: tuple[int, int, int, int] = (1, 3, 1, 3)
    dropout: float = 0.5
    variant: str = "cnn"
    mlp_hidden: int = 512
    dtype: str = "float32"

    def __post_init__(self):
        if self.num_items < 1 or self.num_users < 1:
            raise ValueError("need at least one item and one user")
        if self.embedding_dim < 1 or self.window_size < 1 or self.horizon < 1:
            raise ValueError("embedding_dim, window_size and horizon must be >= 1")
        if len(self.conv_channels) != 2 or min(self.conv_channels) < 1:
            raise ValueError(f"conv_channels must be two positive widths, got {self.conv_channels}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        self.conv_channels = tuple(int(c) for c in self.conv_channels)
        self.kernel_sizes = tuple(int(k) for k in self.kernel_sizes)
        if len(self.kernel_sizes) != 4:
            raise ValueError("kernel_sizes must list one kernel per conv layer (4 entries)")
        # walking the spatial chain here makes an inconsistent model unconstructible
        for size in self.spatial_chain():
            if size < 1:
                raise ValueError(
                    f"kernel sizes {self.kernel_sizes} shrink a {self.window_size}x{self.window_size} "
                    f"input below 1x1")

    def spatial_chain(self) -> list[int]:
        """Spatial extent after each conv layer, starting from the input grid."""
        sizes = [self.window_size]
        for k in self.kernel_sizes:
            sizes.append(sizes[-1] - k + 1)
        return sizes[1:]


def lookup_window(table: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Gather embedding rows; ids may be a single window or a batch of windows."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(
            f"item id out of range [0, {table.shape[0] - 1}]: "
            f"min {ids.min()}, max {ids.max()}")
    return table[ids]


def lookup_window_backward(num_rows: int, ids: np.ndarray, grad_rows: np.ndarray) -> np.ndarray:
    """Scatter window gradients back to the table; duplicate ids accumulate."""
    grad_table = np.zeros((num_rows, grad_rows.shape[-1]), dtype=grad_rows.dtype)
    np.add.at(grad_table, np.asarray(ids).reshape(-1), grad_rows.reshape(-1, grad_rows.shape[-1]))
    return grad_table


def pairwise_encode(embeddings: np.ndarray) -> np.ndarray:
    """Expand (L, d) window embeddings to the (2d, L, L) pair grid.

    The channel vector at grid cell (i, j) is [row_i; row_j], so every
    ordered item pair of the window, adjacent or not, gets its own cell.
    Accepts a leading batch axis.
    """
    single = embeddings.ndim == 2
    e = embeddings[None] if single else embeddings
    b, l, d = e.shape
    et = e.transpose(0, 2, 1)
    first = np.broadcast_to(et[:, :, :, None], (b, d, l, l))
    second = np.broadcast_to(et[:, :, None, :], (b, d, l, l))
    out = np.concatenate([first, second], axis=1)
    return out[0] if single else out

def pairwise_encode_backward(grad_grid: np.ndarray) -> np.ndarray:
    """Adjoint of pairwise_encode.

    Row i collects its first-half gradients summed over j and its
    second-half gradients summed over i.
    """
    single = grad_grid.ndim == 3
    g = grad_grid[None] if single else grad_grid
    d = g.shape[1] // 2
    grad_rows = (g[:, :d].sum(axis=3) + g[:, d:].sum(axis=2)).transpose(0, 2, 1)
    return grad_rows[0] if single else grad_rows


def ranking_loss(pos_logits: np.ndarray, neg_logits: np.ndarray):
    """Binary cross-entropy over target and sampled-negative logits.

    loss = -sum(log sigmoid(pos)) - sum(log(1 - sigmoid(neg))), averaged
    over the batch (the leading axis). Returns the loss and its gradients
    with respect to both logit blocks.
    """
    batch = pos_logits.shape[0]
    if neg_logits.shape[0] != batch:
        raise ShapeError(f"batch sizes disagree: {pos_logits.shape} vs {neg_logits.shape}")
    loss = (softplus(-pos_logits).sum(dtype=np.float64)
            + softplus(neg_logits).sum(dtype=np.float64)) / batch
    scale = np.asarray(1.0 / batch, dtype=pos_logits.dtype)
    grad_pos = (sigmoid(pos_logits) - 1.0) * scale
    grad_neg = sigmoid(neg_logits) * scale
    return float(loss), grad_pos, grad_neg


class CosRecModel:
    """All learnable state plus the forward/backward orchestration."""

    def __init__(self, config: ModelConfig):
        self.config = config
        dtype = resolve_dtype(config.dtype)
        self.dtype = dtype
        d = config.embedding_dim
        l = config.window_size
        # row 0 is the padding item: trainable, but never a target or candidate
        self.item_embeddings = np.zeros((config.num_items + 1, d), dtype=dtype)
        self.user_embeddings = np.zeros((config.num_users, d), dtype=dtype)
        self.dropout = Dropout(config.dropout)

        if config.variant == "cnn":
            d1, d2 = config.conv_channels
            widths = [2 * d, d1, d1, d2, d2]
            names = ("conv1_1", "conv1_2", "conv2_1", "conv2_2")
            self.conv_blocks = []
            for i, name in enumerate(names):
                # batchnorm directly follows, which makes a conv bias redundant
                conv = Conv2d(widths[i], widths[i + 1], config.kernel_sizes[i],
                              bias=False, dtype=dtype)
                bn = BatchNorm(widths[i + 1], dtype=dtype)
                self.conv_blocks.append((name, conv, bn))
            final_spatial = config.spatial_chain()[-1]
            self._flat_dim = d2 * final_spatial * final_spatial
            self.fc_hidden = Dense(self._flat_dim, d, dtype=dtype)
        else:
            self._flat_dim = 2 * d * l * l
            self.mlp_1 = Dense(self._flat_dim, config.mlp_hidden, dtype=dtype)
            self.mlp_2 = Dense(config.mlp_hidden, d, dtype=dtype)

        self.fc_out = Dense(2 * d, config.num_items, dtype=dtype)

    # ------------------------------------------------------------------
    # parameter bookkeeping

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable tensors, keyed by stable names (gradients mirror these)."""
        params = {
            "item_embeddings": self.item_embeddings,
            "user_embeddings": self.user_embeddings,
        }
        if self.config.variant == "cnn":
            for name, conv, bn in self.conv_blocks:
                params[f"{name}.weight"] = conv.weight
                params[f"{name}.bn.scale"] = bn.scale
                params[f"{name}.bn.shift"] = bn.shift
            params["fc_hidden.weight"] = self.fc_hidden.weight
            params["fc_hidden.bias"] = self.fc_hidden.bias
        else:
            params["mlp_1.weight"] = self.mlp_1.weight
            params["mlp_1.bias"] = self.mlp_1.bias
            params["mlp_2.weight"] = self.mlp_2.weight
            params["mlp_2.bias"] = self.mlp_2.bias
        params["fc_out.weight"] = self.fc_out.weight
        params["fc_out.bias"] = self.fc_out.bias
        return params

    def state_dict(self) -> dict[str, np.ndarray]:
        """Parameters plus batchnorm running statistics."""
        state = dict(self.parameters())
        if self.config.variant == "cnn":
            for name, _, bn in self.conv_blocks:
                state[f"{name}.bn.running_mean"] = bn.running_mean
                state[f"{name}.bn.running_var"] = bn.running_var
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = self.state_dict()
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise ValueError(f"state mismatch: missing {missing}, unexpected {extra}")
        for name, current in own.items():
            incoming = np.asarray(state[name])
            if incoming.shape != current.shape:
                raise ShapeError(f"{name}: expected shape {current.shape}, got {incoming.shape}")
            current[...] = incoming.astype(current.dtype)

    def init_parameters(self, seed: int) -> None:
        """Deterministic init: N(0, 0.01^2) embeddings, Glorot-uniform weights."""
        rng = np.random.default_rng(seed)
        self.item_embeddings = rng.normal(0.0, 0.01, self.item_embeddings.shape).astype(self.dtype)
        self.user_embeddings = rng.normal(0.0, 0.01, self.user_embeddings.shape).astype(self.dtype)
        if self.config.variant == "cnn":
            for _, conv, bn in self.conv_blocks:
                conv.init_parameters(rng)
                bn.init_parameters(rng)
            self.fc_hidden.init_parameters(rng)
        else:
            self.mlp_1.init_parameters(rng)
            self.mlp_2.init_parameters(rng)
        self.fc_out.init_parameters(rng)

    # ------------------------------------------------------------------
    # forward

    def _check_batch(self, users: np.ndarray, windows: np.ndarray):
        cfg = self.config
        users = np.asarray(users)
        windows = np.asarray(windows)
        if windows.ndim != 2 or windows.shape[1] != cfg.window_size:
            raise ShapeError(f"windows must be (batch, {cfg.window_size}), got {windows.shape}")
        if users.shape != (windows.shape[0],):
            raise ShapeError(f"users must be ({windows.shape[0]},), got {users.shape}")
        if users.size and (users.min() < 0 or users.max() >= cfg.num_users):
            raise IndexError(f"user id out of range [0, {cfg.num_users - 1}]")
        if windows.size and (windows.min() < 0 or windows.max() > cfg.num_items):
            raise IndexError(f"window item id out of range [0, {cfg.num_items}]")
        return users, windows

    def _features(self, users, windows, train: bool,
                  rng: np.random.Generator | None = None,
                  dropout_mask: np.ndarray | None = None):
        """Sequence vector concatenated with the user embedding, plus caches."""
        cfg = self.config
        batch = windows.shape[0]
        emb = lookup_window(self.item_embeddings, windows)
        grid = pairwise_encode(emb)
        caches: dict[str, object] = {}

        if cfg.variant == "cnn":
            h = grid
            for name, conv, bn in self.conv_blocks:
                h, caches[f"{name}.conv"] = conv.forward(h)
                h, caches[f"{name}.bn"] = bn.forward(h, train)
                h, caches[f"{name}.relu"] = relu_forward(h)
            caches["conv_out_shape"] = h.shape
            flat = h.reshape(batch, -1)
            z, caches["fc_hidden"] = self.fc_hidden.forward(flat)
            if train:
                if dropout_mask is not None:
                    v, caches["dropout"] = self.dropout.apply_mask(z, dropout_mask)
                else:
                    v, caches["dropout"] = self.dropout.forward(z, rng, train=True)
            else:
                v = z
        else:
            flat = grid.reshape(batch, -1)
            h1, caches["mlp_1"] = self.mlp_1.forward(flat)
            a1, caches["mlp_1.relu"] = relu_forward(h1)
            if train:
                if dropout_mask is not None:
                    hd, caches["dropout"] = self.dropout.apply_mask(a1, dropout_mask)
                else:
                    hd, caches["dropout"] = self.dropout.forward(a1, rng, train=True)
            else:
                hd = a1
            h2, caches["mlp_2"] = self.mlp_2.forward(hd)
            v, caches["mlp_2.relu"] = relu_forward(h2)

        feat = np.concatenate([v, self.user_embeddings[users]], axis=1)
        return feat, caches

    def _features_backward(self, grad_feat, users, windows, caches) -> dict[str, np.ndarray]:
        cfg = self.config
        d = cfg.embedding_dim
        grads: dict[str, np.ndarray] = {}

        grad_v = grad_feat[:, :d]
        grads["user_embeddings"] = lookup_window_backward(
            cfg.num_users, users, grad_feat[:, d:])

        if cfg.variant == "cnn":
            gz = self.dropout.backward(caches["dropout"], grad_v)
            gflat, gw, gb = self.fc_hidden.backward(caches["fc_hidden"], gz)
            grads["fc_hidden.weight"] = gw
            grads["fc_hidden.bias"] = gb
            gh = gflat.reshape(caches["conv_out_shape"])
            for name, conv, bn in reversed(self.conv_blocks):
                gh = relu_backward(caches[f"{name}.relu"], gh)
                gh, gscale, gshift = bn.backward(caches[f"{name}.bn"], gh)
                grads[f"{name}.bn.scale"] = gscale
                grads[f"{name}.bn.shift"] = gshift
                gh, gw, _ = conv.backward(caches[f"{name}.conv"], gh)
                grads[f"{name}.weight"] = gw
            grad_grid = gh
        else:
            gh2 = relu_backward(caches["mlp_2.relu"], grad_v)
            ghd, gw, gb = self.mlp_2.backward(caches["mlp_2"], gh2)
            grads["mlp_2.weight"] = gw
            grads["mlp_2.bias"] = gb
            ga1 = self.dropout.backward(caches["dropout"], ghd)
            gh1 = relu_backward(caches["mlp_1.relu"], ga1)
            gflat, gw, gb = self.mlp_1.backward(caches["mlp_1"], gh1)
            grads["mlp_1.weight"] = gw
            grads["mlp_1.bias"] = gb
            batch = windows.shape[0]
            grad_grid = gflat.reshape(batch, 2 * d, cfg.window_size, cfg.window_size)

        grad_emb = pairwise_encode_backward(grad_grid)
        grads["item_embeddings"] = lookup_window_backward(
            cfg.num_items + 1, windows, grad_emb)
        return grads

    @property
    def window_size(self) -> int:
        return self.config.window_size

    def score(self, users: np.ndarray, windows: np.ndarray) -> np.ndarray:
        """Eval-mode logits for every real item; scores[:, i] belongs to item id i+1."""
        users, windows = self._check_batch(users, windows)
        feat, _ = self._features(users, windows, train=False)
        logits, _ = self.fc_out.forward(feat)
        return logits

    def predict_scores(self, users: np.ndarray, windows: np.ndarray) -> np.ndarray:
        """Alias for score(); the interface the evaluation loop expects."""
        return self.score(users, windows)

    # ------------------------------------------------------------------
    # training step

    def loss_and_backward(self, users, windows, targets, negatives,
                          rng: np.random.Generator | None = None,
                          dropout_mask: np.ndarray | None = None):
        """Loss over a batch of windows and gradients for every parameter.

        targets is (batch, T) item ids; negatives is (batch, T, N). Only
        the target and negative logits are ever materialized, so the
        gradient of the output layer stays sparse in its rows.
        """
        cfg = self.config
        users, windows = self._check_batch(users, windows)
        targets = np.asarray(targets)
        negatives = np.asarray(negatives)
        batch = windows.shape[0]
        if targets.shape != (batch, cfg.horizon):
            raise ShapeError(f"targets must be ({batch}, {cfg.horizon}), got {targets.shape}")
        if negatives.ndim != 3 or negatives.shape[:2] != (batch, cfg.horizon):
            raise ShapeError(
                f"negatives must be ({batch}, {cfg.horizon}, N), got {negatives.shape}")
        for name, ids in (("target", targets), ("negative", negatives)):
            if ids.size and (ids.min() < 1 or ids.max() > cfg.num_items):
                raise IndexError(f"{name} ids must lie in [1, {cfg.num_items}]")
        if (negatives == targets[:, :, None]).any():
            raise ValueError("a sampled negative equals its target item")

        feat, caches = self._features(users, windows, train=True, rng=rng,
                                      dropout_mask=dropout_mask)

        num_neg = negatives.shape[2]
        needed = np.concatenate(
            [targets, negatives.reshape(batch, cfg.horizon * num_neg)], axis=1)
        rows = self.fc_out.weight[needed - 1]                       # (batch, M, 2d)
        logits = np.einsum("bf,bmf->bm", feat, rows) + self.fc_out.bias[needed - 1]

        pos_logits = logits[:, :cfg.horizon]
        neg_logits = logits[:, cfg.horizon:].reshape(batch, cfg.horizon, num_neg)
        loss, grad_pos, grad_neg = ranking_loss(pos_logits, neg_logits)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite training loss: {loss}")

        grad_logits = np.concatenate(
            [grad_pos, grad_neg.reshape(batch, cfg.horizon * num_neg)], axis=1)
        grad_feat = np.einsum("bm,bmf->bf", grad_logits, rows)
        grad_w_out = np.zeros_like(self.fc_out.weight)
        np.add.at(grad_w_out, (needed - 1).reshape(-1),
                  (grad_logits[:, :, None] * feat[:, None, :]).reshape(-1, feat.shape[1]))
        grad_b_out = np.zeros_like(self.fc_out.bias)
        np.add.at(grad_b_out, (needed - 1).reshape(-1), grad_logits.reshape(-1))

        grads = self._features_backward(grad_feat, users, windows, caches)
        grads["fc_out.weight"] = grad_w_out
        grads["fc_out.bias"] = grad_b_out
        return loss, grads
