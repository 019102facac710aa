"""Dense tensor primitives shared by every layer.

Values are plain numpy arrays in C order (last index fastest). Layer I/O
follows the channel-major 4D convention (batch, channel, height, width),
which makes architecture tables read off directly as array shapes.
Training runs in float32; gradient-check builds use float64 because
central finite differences are unreliable at single precision.
"""

from __future__ import annotations

import numpy as np

_DTYPES = {
    "float32": np.float32,
    "float64": np.float64,
}


class ShapeError(ValueError):
    """Operand shapes cannot be combined."""


def resolve_dtype(dtype) -> np.dtype:
    """Map a precision name or numpy dtype to float32/float64."""
    if isinstance(dtype, str):
        try:
            return np.dtype(_DTYPES[dtype])
        except KeyError:
            raise ValueError(f"unknown precision {dtype!r}, expected 'float32' or 'float64'") from None
    dt = np.dtype(dtype)
    if dt not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"unsupported dtype {dt}, expected float32 or float64")
    return dt


def check_finite(a: np.ndarray, what: str = "tensor") -> np.ndarray:
    if not np.isfinite(a).all():
        raise ValueError(f"{what} contains non-finite values")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of two 2-D tensors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner extents disagree: {a.shape} x {b.shape}")
    return a @ b


def elementwise(op: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise add/sub/mul.

    Shapes must match exactly, or b may be a per-channel vector broadcast
    over the spatial dims of a 4-D (batch, channel, height, width) tensor.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        if b.ndim == 1 and a.ndim == 4 and a.shape[1] == b.shape[0]:
            b = b[None, :, None, None]
        else:
            raise ShapeError(f"elementwise {op}: incompatible shapes {a.shape} and {b.shape}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown elementwise op {op!r}")


def reduce(op: str, a: np.ndarray, axes=None) -> np.ndarray:
    """Reduce with sum/mean/max over the given axes (all axes when None)."""
    a = np.asarray(a)
    if axes is None:
        axes = tuple(range(a.ndim))
    elif isinstance(axes, int):
        axes = (axes,)
    else:
        axes = tuple(axes)
    for ax in axes:
        if not -a.ndim <= ax < a.ndim:
            raise ShapeError(f"axis {ax} out of range for shape {a.shape}")
        if a.shape[ax] == 0:
            raise ShapeError(f"cannot reduce over zero-extent axis {ax} of shape {a.shape}")
    if op == "sum":
        return np.sum(a, axis=axes)
    if op == "mean":
        return np.mean(a, axis=axes)
    if op == "max":
        return np.max(a, axis=axes)
    raise ValueError(f"unknown reduce op {op!r}")


def reshape(a: np.ndarray, shape) -> np.ndarray:
    a = np.asarray(a)
    shape = tuple(shape)
    if np.prod(shape, dtype=np.int64) != a.size:
        raise ShapeError(f"cannot reshape {a.shape} ({a.size} elements) to {shape}")
    return a.reshape(shape)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, dtype preserving."""
    x = np.asarray(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(x: np.ndarray) -> np.ndarray:
    """log(1 + exp(x)) without overflow."""
    return np.logaddexp(np.asarray(0.0, dtype=np.asarray(x).dtype), x)
