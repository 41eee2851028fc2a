"""Target normalization and class-balanced dataset preparation."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass
from math import ceil
from typing import Any, Sequence

import numpy as np


class EmptyDatasetError(ValueError):
    pass


@dataclass(frozen=True)
class PrepConfig:
    d_max: int = 50
    min_val: float = 1e-3
    max_val: float = 1 - 1e-3
    p_max: float = 0.5  # largest share any single distance class may hold
    dead_end_distance: int | None = None  # label for goal-less states; None drops them

    def __post_init__(self):
        if not 0.0 <= self.min_val < self.max_val <= 1.0:
            raise ValueError("need 0 <= min_val < max_val <= 1")
        if not 0.0 < self.p_max <= 1.0:
            raise ValueError("p_max must lie in (0, 1]")
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if self.dead_end_distance is not None and not 0 <= self.dead_end_distance <= self.d_max:
            raise ValueError("dead_end_distance must lie in [0, d_max]")

    @property
    def alpha(self) -> float:
        return (self.max_val - self.min_val) / self.d_max

    @property
    def beta(self) -> float:
        return self.min_val

    def to_dict(self) -> dict:
        return asdict(self)


def normalize_distance(d, cfg: PrepConfig = PrepConfig()) -> float:
    if not 0 <= d <= cfg.d_max:
        raise ValueError(f"distance {d} outside [0, {cfg.d_max}]")
    return cfg.alpha * d + cfg.beta


def denormalize_distance(y, cfg: PrepConfig = PrepConfig()):
    return (y - cfg.beta) / cfg.alpha


def class_cap(counts: Sequence[int], p_max: float) -> int:
    """Largest per-class cap ``c`` with ``max min(n, c) <= p_max * sum min(n, c)``.

    Feasibility is monotone in ``c``.  When no cap satisfies the bound
    exactly (e.g. a single class) the bound is relaxed to
    ``ceil(p_max * total)``.
    """
    counts = [n for n in counts if n > 0]
    if not counts:
        return 0

    def largest(ok) -> int:
        best = 0
        for c in range(1, max(counts) + 1):
            if ok(c):
                best = c
            else:
                break
        return best

    def strict(c):
        return min(max(counts), c) <= p_max * sum(min(n, c) for n in counts) + 1e-12

    def rounded(c):
        return min(max(counts), c) <= ceil(p_max * sum(min(n, c) for n in counts) - 1e-12)

    return largest(strict) or largest(rounded)


@dataclass
class PreparedData:
    items: list
    distances: list[int]
    targets: np.ndarray


def prepare_dataset(
    samples: Sequence[tuple[Any, int | None]],
    cfg: PrepConfig = PrepConfig(),
    seed: int = 0,
) -> PreparedData:
    """Drop unreachable samples, cap every distance class, normalize targets.

    Distances above ``d_max`` are clipped to ``d_max``.  With
    ``cfg.dead_end_distance`` set, unreachable samples are kept with that
    label instead of being dropped.  Surviving samples keep their input order.
    """
    dead = cfg.dead_end_distance
    kept = [
        (item, min(int(d), cfg.d_max) if d is not None and d >= 0 else dead)
        for item, d in samples
    ]
    kept = [(item, d) for item, d in kept if d is not None]
    if not kept:
        raise EmptyDatasetError("no reachable samples left")
    bins: dict[int, list[int]] = defaultdict(list)
    for k, (_, d) in enumerate(kept):
        bins[d].append(k)
    cap = class_cap([len(v) for v in bins.values()], cfg.p_max)
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for d in sorted(bins):
        idx = bins[d]
        if len(idx) > cap:
            idx = sorted(rng.choice(idx, size=cap, replace=False).tolist())
        chosen += idx
    chosen.sort()
    items = [kept[k][0] for k in chosen]
    dists = [kept[k][1] for k in chosen]
    targets = np.array([normalize_distance(d, cfg) for d in dists], dtype=np.float64)
    return PreparedData(items, dists, targets)
