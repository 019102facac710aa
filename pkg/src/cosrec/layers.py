"""Network layers with hand-derived backward passes.

Every forward returns (output, cache). The cache carries exactly the
arrays the matching backward needs and may be consumed once; reusing a
cache, or feeding it to a different layer, is an error rather than a
silent wrong gradient.
"""

from __future__ import annotations

import numpy as np

from .tensor import ShapeError, resolve_dtype


class LayerCache:
    """Saved forward state, consumed by exactly one backward call."""

    __slots__ = ("_owner", "_saved", "_used")

    def __init__(self, owner, **saved):
        self._owner = owner
        self._saved = saved
        self._used = False

    def take(self, owner) -> dict:
        if self._used:
            raise RuntimeError("layer cache was already consumed by a backward call")
        if owner is not self._owner:
            raise RuntimeError("cache belongs to a different layer")
        self._used = True
        return self._saved


def _glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv2d:
    """Valid 2-D cross-correlation, stride 1, no padding.

    Implemented as a patch gather followed by one matrix product; the
    naive nested-loop reference lives in the test suite.
    """

    KERNEL_SIZES = (1, 3, 5)

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 bias: bool = True, dtype="float32"):
        if kernel_size not in self.KERNEL_SIZES:
            raise ValueError(f"kernel_size must be one of {self.KERNEL_SIZES}, got {kernel_size}")
        if in_channels < 1 or out_channels < 1:
            raise ValueError("channel counts must be >= 1")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.dtype = resolve_dtype(dtype)
        self.weight = np.zeros((out_channels, in_channels, kernel_size, kernel_size), dtype=self.dtype)
        self.bias = np.zeros(out_channels, dtype=self.dtype) if bias else None

    def init_parameters(self, rng: np.random.Generator) -> None:
        k = self.kernel_size
        self.weight = _glorot_uniform(rng, self.weight.shape,
                                      self.in_channels * k * k, self.out_channels * k * k,
                                      self.dtype)
        if self.bias is not None:
            self.bias = np.zeros_like(self.bias)

    def _check_input(self, x: np.ndarray):
        if x.ndim != 4:
            raise ShapeError(f"conv2d expects (batch, channel, height, width), got {x.shape}")
        b, c, h, w = x.shape
        k = self.kernel_size
        if c != self.in_channels:
            raise ShapeError(f"conv2d expects {self.in_channels} input channels, got {c} (input {x.shape})")
        if h < k or w < k:
            raise ShapeError(f"spatial extent {h}x{w} smaller than kernel {k}x{k}")
        return b, c, h, w

    def _cols(self, x: np.ndarray) -> np.ndarray:
        b, _, h, w = x.shape
        k = self.kernel_size
        ho, wo = h - k + 1, w - k + 1
        patches = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
        # (b, c, ho, wo, k, k) -> (b*ho*wo, c*k*k)
        return patches.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, -1)

    def forward(self, x: np.ndarray):
        b, _, h, w = self._check_input(x)
        k = self.kernel_size
        ho, wo = h - k + 1, w - k + 1
        cols = self._cols(x)
        y = cols @ self.weight.reshape(self.out_channels, -1).T
        if self.bias is not None:
            y += self.bias
        y = y.reshape(b, ho, wo, self.out_channels).transpose(0, 3, 1, 2)
        return y, LayerCache(self, x=x)

    def backward(self, cache: LayerCache, grad_y: np.ndarray):
        x = cache.take(self)["x"]
        b, _, h, w = x.shape
        k = self.kernel_size
        ho, wo = h - k + 1, w - k + 1
        if grad_y.shape != (b, self.out_channels, ho, wo):
            raise ShapeError(f"grad has shape {grad_y.shape}, forward produced {(b, self.out_channels, ho, wo)}")
        cols = self._cols(x)
        gy = grad_y.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        grad_w = (gy.T @ cols).reshape(self.weight.shape)
        grad_b = gy.sum(axis=0) if self.bias is not None else None
        grad_cols = gy @ self.weight.reshape(self.out_channels, -1)
        grad_patches = grad_cols.reshape(b, ho, wo, self.in_channels, k, k)
        grad_x = np.zeros_like(x)
        for i in range(k):
            for j in range(k):
                grad_x[:, :, i:i + ho, j:j + wo] += grad_patches[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return grad_x, grad_w, grad_b


class BatchNorm:
    """Per-channel batch normalization over (batch, height, width).

    Train mode normalizes with batch statistics and updates the running
    estimates by exponential moving average; eval mode uses the running
    estimates only, so it is deterministic and batch-size independent.
    """

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.1, dtype="float32"):
        if eps <= 0:
            raise ValueError("eps must be positive")
        if not 0.0 < momentum < 1.0:
            raise ValueError("momentum must lie in (0, 1)")
        self.channels = channels
        self.eps = eps
        self.momentum = momentum
        self.dtype = resolve_dtype(dtype)
        self.scale = np.ones(channels, dtype=self.dtype)
        self.shift = np.zeros(channels, dtype=self.dtype)
        self.running_mean = np.zeros(channels, dtype=self.dtype)
        self.running_var = np.ones(channels, dtype=self.dtype)

    def init_parameters(self, rng: np.random.Generator) -> None:
        self.scale = np.ones_like(self.scale)
        self.shift = np.zeros_like(self.shift)
        self.running_mean = np.zeros_like(self.running_mean)
        self.running_var = np.ones_like(self.running_var)

    def _check_input(self, x: np.ndarray):
        if x.ndim != 4 or x.shape[1] != self.channels:
            raise ShapeError(f"batchnorm over {self.channels} channels got input {x.shape}")

    def forward(self, x: np.ndarray, train: bool):
        self._check_input(x)
        b, _, h, w = x.shape
        if train:
            if b < 2:
                raise ValueError("train-mode batchnorm needs batch size >= 2")
            m = b * h * w
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
            y = self.scale[None, :, None, None] * xhat + self.shift[None, :, None, None]
            self.running_mean = ((1.0 - self.momentum) * self.running_mean
                                 + self.momentum * mean).astype(self.dtype)
            self.running_var = ((1.0 - self.momentum) * self.running_var
                                + self.momentum * var * m / (m - 1)).astype(self.dtype)
            cache = LayerCache(self, xhat=xhat, inv_std=inv_std, m=m)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean[None, :, None, None]) * inv_std[None, :, None, None]
            y = self.scale[None, :, None, None] * xhat + self.shift[None, :, None, None]
            cache = LayerCache(self, xhat=None, inv_std=None, m=None)
        return y, cache

    def backward(self, cache: LayerCache, grad_y: np.ndarray):
        saved = cache.take(self)
        xhat, inv_std, m = saved["xhat"], saved["inv_std"], saved["m"]
        if xhat is None:
            raise RuntimeError("backward requires a train-mode cache")
        if grad_y.shape != xhat.shape:
            raise ShapeError(f"grad shape {grad_y.shape} does not match forward output {xhat.shape}")
        grad_scale = (grad_y * xhat).sum(axis=(0, 2, 3))
        grad_shift = grad_y.sum(axis=(0, 2, 3))
        gxhat = grad_y * self.scale[None, :, None, None]
        gx = (gxhat
              - gxhat.mean(axis=(0, 2, 3), keepdims=True)
              - xhat * (gxhat * xhat).mean(axis=(0, 2, 3), keepdims=True))
        gx *= inv_std[None, :, None, None]
        return gx, grad_scale, grad_shift


class Dense:
    """Affine map on (batch, features) inputs."""

    def __init__(self, in_features: int, out_features: int, dtype="float32"):
        self.in_features = in_features
        self.out_features = out_features
        self.dtype = resolve_dtype(dtype)
        self.weight = np.zeros((out_features, in_features), dtype=self.dtype)
        self.bias = np.zeros(out_features, dtype=self.dtype)

    def init_parameters(self, rng: np.random.Generator) -> None:
        self.weight = _glorot_uniform(rng, self.weight.shape,
                                      self.in_features, self.out_features, self.dtype)
        self.bias = np.zeros_like(self.bias)

    def forward(self, x: np.ndarray):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(f"dense({self.in_features} -> {self.out_features}) got input {x.shape}")
        y = x @ self.weight.T + self.bias
        return y, LayerCache(self, x=x)

    def backward(self, cache: LayerCache, grad_y: np.ndarray):
        x = cache.take(self)["x"]
        if grad_y.shape != (x.shape[0], self.out_features):
            raise ShapeError(f"grad shape {grad_y.shape} does not match output ({x.shape[0]}, {self.out_features})")
        grad_x = grad_y @ self.weight
        grad_w = grad_y.T @ x
        grad_b = grad_y.sum(axis=0)
        return grad_x, grad_w, grad_b


_RELU = object()
_SIGMOID = object()


def relu_forward(x: np.ndarray):
    y = np.maximum(x, 0)
    return y, LayerCache(_RELU, positive=x > 0)


def relu_backward(cache: LayerCache, grad_y: np.ndarray) -> np.ndarray:
    return grad_y * cache.take(_RELU)["positive"]


def sigmoid_forward(x: np.ndarray):
    from .tensor import sigmoid

    s = sigmoid(x)
    return s, LayerCache(_SIGMOID, s=s)


def sigmoid_backward(cache: LayerCache, grad_y: np.ndarray) -> np.ndarray:
    s = cache.take(_SIGMOID)["s"]
    return grad_y * s * (1.0 - s)


class Dropout:
    """Inverted dropout: survivors are rescaled by 1/p_keep, eval is identity."""

    def __init__(self, rate: float = 0.5):
        keep = 1.0 - rate
        if not 0.0 < keep <= 1.0:
            raise ValueError(f"dropout rate {rate} leaves no keep probability")
        self.rate = rate
        self.p_keep = keep

    def forward(self, x: np.ndarray, rng: np.random.Generator | None, train: bool):
        if not train or self.rate == 0.0:
            return x, LayerCache(self, mask=None)
        mask = rng.random(x.shape) < self.p_keep
        return self.apply_mask(x, mask)

    def apply_mask(self, x: np.ndarray, mask: np.ndarray):
        # fixed-mask entry point, also used by gradient checks
        y = x * mask / np.asarray(self.p_keep, dtype=x.dtype)
        return y, LayerCache(self, mask=mask)

    def backward(self, cache: LayerCache, grad_y: np.ndarray) -> np.ndarray:
        mask = cache.take(self)["mask"]
        if mask is None:
            return grad_y
        return grad_y * mask / np.asarray(self.p_keep, dtype=grad_y.dtype)
