"""Seeded mini-batch training."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .model import GraphBatch, RegressorModel, forward, loss_and_grads
from .optim import AdamWConfig, AdamWState, adamw_step


@dataclass
class TrainResult:
    model: RegressorModel
    losses: list[float] = field(default_factory=list)  # mean training MSE per epoch


def train(
    model: RegressorModel,
    graphs: list,
    targets,
    epochs: int = 100,
    batch_size: int = 64,
    seed: int = 0,
    optim: AdamWConfig = AdamWConfig(),
    refresh_bn: bool = True,
) -> TrainResult:
    """Train a copy of ``model``; the input model is left untouched.

    ``graphs`` holds feature-array triples (see ``to_feature_arrays``).
    Shuffling and dropout masks come from one generator seeded by ``seed``.
    With ``refresh_bn`` the batch-norm running statistics are recomputed
    from the final weights once training ends (see ``refresh_batch_norm``).
    """
    targets = np.asarray(targets, dtype=np.float64)
    if len(graphs) == 0:
        raise ValueError("cannot train on an empty dataset")
    if len(graphs) != len(targets):
        raise ValueError("graphs and targets differ in length")
    if batch_size < 1 or epochs < 0:
        raise ValueError("batch size must be >= 1 and epochs >= 0")
    model = model.copy()
    rng = np.random.default_rng(seed)
    state = AdamWState.zeros_like(model.params)
    losses = []
    for _ in range(epochs):
        order = rng.permutation(len(graphs))
        total = 0.0
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            batch = GraphBatch.from_arrays([graphs[i] for i in idx])
            loss, grads, _ = loss_and_grads(model, batch, targets[idx], train=True, rng=rng)
            adamw_step(model.params, grads, state, optim)
            total += loss * len(idx)
        losses.append(total / len(graphs))
    if refresh_bn and epochs > 0:
        refresh_batch_norm(model, graphs)
    return TrainResult(model, losses)


def refresh_batch_norm(model: RegressorModel, graphs: list, chunk: int = 1024) -> None:
    """Replace running statistics by their average over the dataset.

    The pooled features can have very small spread across graphs, and the
    momentum-averaged statistics then lag the last weight updates by
    several standard deviations.  A dataset pass with the final weights
    (dropout off, equal-weight average over chunks) removes that lag; when
    the dataset fits in one chunk eval mode reproduces the full-batch
    training-mode forward exactly.
    """
    sums = {k: np.zeros_like(v) for k, v in model.buffers.items()}
    n_chunks = 0
    for s in range(0, len(graphs), chunk):
        part = graphs[s : s + chunk]
        if len(part) < 2 and n_chunks:
            break
        probe = model.copy()
        probe.hyper = replace(probe.hyper, bn_momentum=1.0)
        forward(probe, GraphBatch.from_arrays(part), train=True)
        n = len(part)
        for k in sums:
            # undo the unbiased correction: eval mode should see the
            # population statistics the batch forward would use
            scale = (n - 1) / n if k.endswith(".var") else 1.0
            sums[k] += probe.buffers[k] * scale
        n_chunks += 1
    for k in sums:
        model.buffers[k] = sums[k] / n_chunks


def evaluate_mse(model: RegressorModel, graphs: list, targets, batch_size: int = 256) -> float:
    """Eval-mode MSE over a dataset."""
    targets = np.asarray(targets, dtype=np.float64)
    preds = [
        forward(model, GraphBatch.from_arrays(graphs[s : s + batch_size]))
        for s in range(0, len(graphs), batch_size)
    ]
    return float(np.mean((np.concatenate(preds) - targets) ** 2))
