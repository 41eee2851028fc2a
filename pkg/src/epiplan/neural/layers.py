"""Array-level building blocks.

Every forward op broadcasts over leading parameter dimensions: a weight of
shape ``(K, out, in)`` yields activations of shape ``(K, N, out)``.  The
finite-difference checker relies on this to evaluate many perturbed copies
of one tensor in a single pass.  Backward ops assume unbatched parameters.
"""

from __future__ import annotations

import numpy as np


def linear(x, W, b):
    return x @ np.swapaxes(W, -1, -2) + b[..., None, :]


def linear_backward(dy, x, W):
    return dy @ W, dy.T @ x, dy.sum(axis=0)  # dx, dW, db


def relu(x):
    return np.maximum(x, 0.0)


def gather(h, idx):
    """Rows ``idx`` of the node axis (second to last)."""
    return h[..., idx, :]


def scatter_sum(r, idx, n: int):
    """Sum rows of ``r`` into ``n`` buckets along the second-to-last axis.

    Rows are grouped by a stable sort of ``idx`` and added in index order,
    so results are reproducible.
    """
    out = np.zeros(r.shape[:-2] + (n, r.shape[-1]), dtype=np.float64)
    if len(idx) == 0:
        return out
    order = np.argsort(idx, kind="stable")
    sidx = idx[order]
    starts = np.flatnonzero(np.r_[True, sidx[1:] != sidx[:-1]])
    out[..., sidx[starts], :] = np.add.reduceat(r[..., order, :], starts, axis=-2)
    return out


def mlp(x, p: dict, prefix: str):
    """Two dense layers with a rectifier in between."""
    return linear(relu(linear(x, p[f"{prefix}.0.W"], p[f"{prefix}.0.b"])), p[f"{prefix}.1.W"], p[f"{prefix}.1.b"])


def gine_conv(h, edge_index, e, p: dict, prefix: str, eps: float = 0.0):
    """``MLP((1 + eps) h_v + sum_{u -> v} relu(h_u + e_uv))``.

    ``e`` must already have the node width.
    """
    if e.shape[-1] != h.shape[-1]:
        raise ValueError(f"edge width {e.shape[-1]} != node width {h.shape[-1]}")
    src, dst = edge_index
    msg = relu(gather(h, src) + e)
    agg = scatter_sum(msg, dst, h.shape[-2])
    return mlp((1.0 + eps) * h + agg, p, prefix)


def global_mean_pool(h, assignment, n_graphs: int):
    counts = np.bincount(assignment, minlength=n_graphs).astype(np.float64)
    if np.any(counts == 0):
        raise ValueError("cannot pool an empty graph")
    return scatter_sum(h, assignment, n_graphs) / counts[:, None]


def mse_loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape[-1] != target.shape[-1] or target.shape[-1] == 0:
        raise ValueError("prediction and target lengths differ or are empty")
    return np.mean((pred - target) ** 2, axis=-1)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))
