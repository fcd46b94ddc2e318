"""Central finite differences, the independent oracle for every gradient check."""

import numpy as np


def central_diff(f, arr, eps=1e-5):
    """d f / d arr by central differences; perturbs `arr` in place and restores it.

    `f` takes no arguments and must recompute the scalar loss from scratch.
    """
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index
        orig = arr[ix]
        arr[ix] = orig + eps
        f_plus = f()
        arr[ix] = orig - eps
        f_minus = f()
        arr[ix] = orig
        g[ix] = (f_plus - f_minus) / (2.0 * eps)
    return g


def rel_err(a, b):
    """Max of |a-b| / max(1, |a|, |b|): relative error with a unit floor."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0:
        return 0.0
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / denom))
