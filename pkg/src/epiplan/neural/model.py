"""The distance regressor: embeddings, two GINE layers, mean pooling and a
residual head with a clamped sigmoid output."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..embed import StateGraph, to_feature_arrays
from .layers import (
    gather,
    global_mean_pool,
    linear,
    linear_backward,
    relu,
    scatter_sum,
    sigmoid,
)
from .prep import PrepConfig


DEFAULT_ENCODING = {"include_goal": True, "mark_pointed": True, "link_valuations": True}


@dataclass(frozen=True)
class Widths:
    node: int = 64
    edge: int = 32
    hidden: int = 128
    blocks: int = 3


@dataclass(frozen=True)
class Hyper:
    dropout: float = 0.2
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5
    gine_eps: float = 0.0


def param_shapes(w: Widths) -> dict[str, tuple[int, ...]]:
    """Parameter names and shapes in canonical (initialization) order."""
    s: dict[str, tuple[int, ...]] = {}

    def dense(name, n_in, n_out):
        s[f"{name}.W"] = (n_out, n_in)
        s[f"{name}.b"] = (n_out,)

    dense("id.0", 1, w.node)
    dense("id.1", w.node, w.node)
    dense("edge.0", 1, w.edge)
    dense("edge.1", w.edge, w.edge)
    for layer, n_in in (("gine1", w.node), ("gine2", w.hidden)):
        dense(f"{layer}.proj", w.edge, n_in)
        dense(f"{layer}.mlp.0", n_in, w.hidden)
        dense(f"{layer}.mlp.1", w.hidden, w.hidden)
    dense("head.in", w.hidden, w.hidden)
    for k in range(w.blocks):
        for j in (1, 2):
            dense(f"block{k}.fc{j}", w.hidden, w.hidden)
            s[f"block{k}.bn{j}.gamma"] = (w.hidden,)
            s[f"block{k}.bn{j}.beta"] = (w.hidden,)
    dense("head.out", w.hidden, 1)
    return s


def buffer_shapes(w: Widths) -> dict[str, tuple[int, ...]]:
    s = {}
    for k in range(w.blocks):
        for j in (1, 2):
            s[f"block{k}.bn{j}.mean"] = (w.hidden,)
            s[f"block{k}.bn{j}.var"] = (w.hidden,)
    return s


@dataclass
class RegressorModel:
    widths: Widths = Widths()
    hyper: Hyper = Hyper()
    prep: PrepConfig = PrepConfig()
    encoding: dict = field(default_factory=lambda: dict(DEFAULT_ENCODING))
    params: dict = field(default_factory=dict)
    buffers: dict = field(default_factory=dict)

    @classmethod
    def initialize(cls, seed: int = 0, widths: Widths = Widths(), hyper: Hyper = Hyper(),
                   prep: PrepConfig = PrepConfig(), encoding: dict | None = None) -> "RegressorModel":
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in param_shapes(widths).items():
            if name.endswith(".W"):
                bound = 1.0 / np.sqrt(shape[1])
                params[name] = rng.uniform(-bound, bound, size=shape)
            elif name.endswith(".gamma"):
                params[name] = np.ones(shape)
            else:
                params[name] = np.zeros(shape)
        buffers = {
            name: (np.zeros(shape) if name.endswith(".mean") else np.ones(shape))
            for name, shape in buffer_shapes(widths).items()
        }
        enc = dict(DEFAULT_ENCODING)
        enc.update(encoding or {})
        return cls(widths, hyper, prep, enc, params, buffers)

    def copy(self) -> "RegressorModel":
        return RegressorModel(
            self.widths, self.hyper, self.prep, dict(self.encoding),
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.buffers.items()},
        )

    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())

    def predict(self, batch: "GraphBatch") -> np.ndarray:
        return forward(self, batch)

    def config(self) -> dict:
        return {"widths": asdict(self.widths), "hyper": asdict(self.hyper),
                "prep": self.prep.to_dict(), "encoding": dict(self.encoding)}


@dataclass
class GraphBatch:
    x: np.ndarray  # (N, 1)
    edge_index: np.ndarray  # (2, E)
    edge_attr: np.ndarray  # (E, 1)
    assignment: np.ndarray  # (N,)
    n_graphs: int

    @classmethod
    def from_arrays(cls, arrays) -> "GraphBatch":
        xs, eis, eas, assign = [], [], [], []
        offset = 0
        for g, (x, ei, ea) in enumerate(arrays):
            if x.shape[0] == 0:
                raise ValueError("graph without nodes")
            xs.append(x)
            eis.append(ei + offset)
            eas.append(ea)
            assign.append(np.full(x.shape[0], g, dtype=np.int64))
            offset += x.shape[0]
        if not xs:
            raise ValueError("empty batch")
        return cls(
            np.concatenate(xs), np.concatenate(eis, axis=1).astype(np.int64),
            np.concatenate(eas), np.concatenate(assign), len(xs),
        )

    @classmethod
    def from_graphs(cls, graphs: list[StateGraph]) -> "GraphBatch":
        return cls.from_arrays([to_feature_arrays(g) for g in graphs])


def _batch_norm(y, p, buffers, name, hyper: Hyper, train: bool, update: bool, cache):
    gamma = p[f"{name}.gamma"][..., None, :]
    beta = p[f"{name}.beta"][..., None, :]
    if train:
        n = y.shape[-2]
        mu = y.mean(axis=-2, keepdims=True)
        var = y.var(axis=-2, keepdims=True)
        if update:
            m = hyper.bn_momentum
            buffers[f"{name}.mean"] = (1 - m) * buffers[f"{name}.mean"] + m * mu[0]
            if n > 1:
                # running variance tracks the unbiased estimate; a single
                # sample carries no spread information and leaves it alone
                buffers[f"{name}.var"] = (1 - m) * buffers[f"{name}.var"] + m * var[0] * n / (n - 1)
    else:
        mu = buffers[f"{name}.mean"]
        var = buffers[f"{name}.var"]
    inv = 1.0 / np.sqrt(var + hyper.bn_eps)
    xhat = (y - mu) * inv
    if cache is not None:
        cache[name] = (xhat, inv, train)
    return gamma * xhat + beta


def _batch_norm_backward(dout, p, name, cache, grads):
    xhat, inv, train = cache[name]
    gamma = p[f"{name}.gamma"]
    grads[f"{name}.gamma"] = (dout * xhat).sum(axis=0)
    grads[f"{name}.beta"] = dout.sum(axis=0)
    dxhat = dout * gamma
    if not train:
        return dxhat * inv
    n = dout.shape[0]
    return inv / n * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))


def forward(
    model: RegressorModel,
    batch: GraphBatch,
    *,
    train: bool = False,
    rng: np.random.Generator | None = None,
    params: dict | None = None,
    cache: dict | None = None,
    update_stats: bool = True,
) -> np.ndarray:
    """Predictions in ``[min_val, max_val]``, one per graph.

    Training mode uses batch statistics (and updates the running ones when
    ``update_stats``) and draws dropout masks from ``rng``; without an rng
    dropout is skipped.
    """
    p = model.params if params is None else params
    w, hp = model.widths, model.hyper
    c = cache if cache is not None else None
    src, dst = batch.edge_index
    n_nodes = batch.x.shape[0]

    a_id = linear(batch.x, p["id.0.W"], p["id.0.b"])
    z_id = relu(a_id)
    h0 = linear(z_id, p["id.1.W"], p["id.1.b"])
    a_e = linear(batch.edge_attr, p["edge.0.W"], p["edge.0.b"])
    z_e = relu(a_e)
    e0 = linear(z_e, p["edge.1.W"], p["edge.1.b"])

    h = h0
    gine_cache = []
    for layer in ("gine1", "gine2"):
        pe = linear(e0, p[f"{layer}.proj.W"], p[f"{layer}.proj.b"])
        pre_msg = gather(h, src) + pe
        msg = relu(pre_msg)
        s = (1.0 + hp.gine_eps) * h + scatter_sum(msg, dst, n_nodes)
        a1 = linear(s, p[f"{layer}.mlp.0.W"], p[f"{layer}.mlp.0.b"])
        z1 = relu(a1)
        o = linear(z1, p[f"{layer}.mlp.1.W"], p[f"{layer}.mlp.1.b"])
        h_out = relu(o)
        gine_cache.append((h, pe, pre_msg, msg, s, a1, z1, o))
        h = h_out

    g = global_mean_pool(h, batch.assignment, batch.n_graphs)
    a_in = linear(g, p["head.in.W"], p["head.in.b"])
    t = relu(a_in)
    block_cache = []
    for k in range(w.blocks):
        y1 = linear(t, p[f"block{k}.fc1.W"], p[f"block{k}.fc1.b"])
        n1 = _batch_norm(y1, p, model.buffers, f"block{k}.bn1", hp, train, update_stats, c)
        r1 = relu(n1)
        if train and rng is not None and hp.dropout > 0:
            mask = (rng.random(r1.shape) >= hp.dropout) / (1.0 - hp.dropout)
        else:
            mask = None
        d1 = r1 * mask if mask is not None else r1
        y2 = linear(d1, p[f"block{k}.fc2.W"], p[f"block{k}.fc2.b"])
        n2 = _batch_norm(y2, p, model.buffers, f"block{k}.bn2", hp, train, update_stats, c)
        pre = n2 + t
        block_cache.append((t, y1, n1, mask, d1, pre))
        t = relu(pre)
    z = linear(t, p["head.out.W"], p["head.out.b"])[..., 0]
    sig = sigmoid(z)
    out = np.clip(sig, model.prep.min_val, model.prep.max_val)
    if c is not None:
        c.update(
            batch=batch, a_id=a_id, z_id=z_id, a_e=a_e, z_e=z_e, e0=e0,
            gine=gine_cache, h2=h, g=g, a_in=a_in, blocks=block_cache, t_final=t,
            sig=sig,
        )
    return out


def backward(model: RegressorModel, cache: dict, dout: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of a scalar loss given ``dout = dloss/dprediction``."""
    p, w, hp = model.params, model.widths, model.hyper
    batch: GraphBatch = cache["batch"]
    src, dst = batch.edge_index
    n_nodes = batch.x.shape[0]
    grads: dict[str, np.ndarray] = {}

    def dense_back(dy, x, name):
        dx, grads[f"{name}.W"], grads[f"{name}.b"] = linear_backward(dy, x, p[f"{name}.W"])
        return dx

    sig = cache["sig"]
    inside = (sig >= model.prep.min_val) & (sig <= model.prep.max_val)
    dz = (dout * inside * sig * (1.0 - sig))[:, None]
    dt = dense_back(dz, cache["t_final"], "head.out")
    for k in reversed(range(w.blocks)):
        t_in, y1, n1, mask, d1, pre = cache["blocks"][k]
        dpre = dt * (pre > 0)
        dn2 = dpre
        dy2 = _batch_norm_backward(dn2, p, f"block{k}.bn2", cache, grads)
        dd1 = dense_back(dy2, d1, f"block{k}.fc2")
        dr1 = dd1 * mask if mask is not None else dd1
        dn1 = dr1 * (n1 > 0)
        dy1 = _batch_norm_backward(dn1, p, f"block{k}.bn1", cache, grads)
        dt = dense_back(dy1, t_in, f"block{k}.fc1") + dpre
    da_in = dt * (cache["a_in"] > 0)
    dg = dense_back(da_in, cache["g"], "head.in")

    counts = np.bincount(batch.assignment, minlength=batch.n_graphs).astype(np.float64)
    dh = (dg / counts[:, None])[batch.assignment]

    de0 = np.zeros_like(cache["e0"])
    for layer, (h_in, pe, pre_msg, msg, s, a1, z1, o) in zip(
        ("gine2", "gine1"), reversed(cache["gine"])
    ):
        do = dh * (o > 0)
        dz1 = dense_back(do, z1, f"{layer}.mlp.1")
        da1 = dz1 * (a1 > 0)
        ds = dense_back(da1, s, f"{layer}.mlp.0")
        dmsg = gather(ds, dst)
        dpre = dmsg * (pre_msg > 0)
        dh = (1.0 + hp.gine_eps) * ds + scatter_sum(dpre, src, n_nodes)
        de0 += dense_back(dpre, cache["e0"], f"{layer}.proj")

    dz_e = dense_back(de0, cache["z_e"], "edge.1")
    dense_back(dz_e * (cache["a_e"] > 0), batch.edge_attr, "edge.0")
    dz_id = dense_back(dh, cache["z_id"], "id.1")
    dense_back(dz_id * (cache["a_id"] > 0), batch.x, "id.0")
    return {name: grads[name] for name in p}


def loss_and_grads(model, batch, targets, *, train=False, rng=None, update_stats=True):
    """MSE loss and its parameter gradients for one batch."""
    cache: dict = {}
    pred = forward(model, batch, train=train, rng=rng, cache=cache, update_stats=update_stats)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != pred.shape:
        raise ValueError("targets do not match the batch")
    diff = pred - targets
    loss = float(np.mean(diff**2))
    return loss, backward(model, cache, 2.0 * diff / diff.size), pred
