"""Parametric stochastic detector profiles and confidence-gated routing.

A profile stands in for a real detector: per-class recall, Poisson false
positives, Gaussian corner jitter, and Beta-distributed confidence scores
for true and false positives. The (alpha, beta) score parameters use the
convention beta == 0 -> point mass at 1, alpha == 0 -> point mass at 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .imaging import Tile

ROUTE_RESULTS = "results"
ROUTE_IMAGE = "image"


@dataclass(frozen=True)
class DetectorProfile:
    name: str
    recall: float | tuple[float, ...]
    fp_rate: float
    loc_noise_px: float
    conf_tp: tuple[float, float]
    conf_fp: tuple[float, float]
    latency_s_per_tile: float = 0.5
    energy_j_per_tile: float = 0.0
    num_classes: int = 8

    def __post_init__(self):
        recalls = self.recall if isinstance(self.recall, (tuple, list)) else (self.recall,)
        if isinstance(self.recall, list):
            object.__setattr__(self, "recall", tuple(self.recall))
        for r in recalls:
            if not 0.0 <= r <= 1.0:
                raise ValueError("recall values must be in [0, 1]")
        if self.fp_rate < 0 or self.loc_noise_px < 0:
            raise ValueError("fp_rate and loc_noise_px must be >= 0")
        if self.latency_s_per_tile < 0 or self.energy_j_per_tile < 0:
            raise ValueError("latency and energy must be >= 0")
        for a, b in (self.conf_tp, self.conf_fp):
            if a < 0 or b < 0:
                raise ValueError("score distribution parameters must be >= 0")
        if self.num_classes <= 0:
            raise ValueError("num_classes must be > 0")

    def recall_for(self, class_id: int) -> float:
        if isinstance(self.recall, tuple):
            if class_id >= len(self.recall):
                raise ValueError(f"no recall entry for class {class_id}")
            return self.recall[class_id]
        return self.recall


@dataclass(frozen=True)
class Detection:
    box: tuple[float, float, float, float]
    class_id: int
    score: float

    def __post_init__(self):
        x0, y0, x1, y1 = self.box
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"degenerate detection box {self.box}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score must be in [0, 1]")


@dataclass(frozen=True)
class RoutingPolicy:
    confidence_threshold: float
    aggregation: str = "max"
    result_bytes_per_det: int = 64
    result_header_bytes: int = 256
    result_cap_bytes: int = 65536

    def __post_init__(self):
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold must be in [0, 1]")
        if self.aggregation not in ("max", "mean"):
            raise ValueError("aggregation must be 'max' or 'mean'")
        if min(self.result_bytes_per_det, self.result_header_bytes,
               self.result_cap_bytes) < 0:
            raise ValueError("result message sizes must be >= 0")


@dataclass(frozen=True)
class RouteDecision:
    kind: str  # ROUTE_RESULTS or ROUTE_IMAGE
    payload_bytes: int
    n_detections: int

    @property
    def send_results(self) -> bool:
        return self.kind == ROUTE_RESULTS


def _draw_score(rng: np.random.Generator, params: tuple[float, float]) -> float:
    a, b = params
    if b == 0:
        return 1.0
    if a == 0:
        return 0.0
    return float(rng.beta(a, b))


def _jitter_box(rng: np.random.Generator, box, noise: float,
                w: float, h: float) -> tuple[float, float, float, float]:
    x0, y0, x1, y1 = box
    if noise > 0:
        dx0, dy0, dx1, dy1 = rng.normal(0.0, noise, 4)
        x0, y0, x1, y1 = x0 + dx0, y0 + dy0, x1 + dx1, y1 + dy1
    x0, x1 = max(0.0, min(x0, w)), max(0.0, min(x1, w))
    y0, y1 = max(0.0, min(y0, h)), max(0.0, min(y1, h))
    # Keep the box valid after clamping.
    if x1 - x0 < 0.5:
        mid = 0.5 * (x0 + x1)
        x0, x1 = max(0.0, mid - 0.25), min(w, mid + 0.25)
        if x1 - x0 < 0.5:
            x0, x1 = (0.0, 0.5) if x0 < 0.25 else (w - 0.5, w)
    if y1 - y0 < 0.5:
        mid = 0.5 * (y0 + y1)
        y0, y1 = max(0.0, mid - 0.25), min(h, mid + 0.25)
        if y1 - y0 < 0.5:
            y0, y1 = (0.0, 0.5) if y0 < 0.25 else (h - 0.5, h)
    return (x0, y0, x1, y1)


def detect(profile: DetectorProfile, tile: Tile,
           rng: np.random.Generator) -> list[Detection]:
    """Simulate one detector pass over one tile.

    Each ground-truth object is found independently with probability
    recall[class]; found boxes are jittered and scored from conf_tp. Then
    Poisson(fp_rate) false positives with uniform boxes and conf_fp scores
    are appended. Deterministic given the generator state.

    The detection coins are drawn up front, one per object, so two profiles
    evaluated on the same substream share them (common random numbers): a
    strictly higher recall detects a superset of objects, and an identical
    profile reproduces the identical output.
    """
    w, h = float(tile.width_px), float(tile.height_px)
    coins = rng.random(len(tile.objects))
    dets: list[Detection] = []
    for obj, coin in zip(tile.objects, coins):
        if coin >= profile.recall_for(obj.class_id):
            continue
        box = _jitter_box(rng, obj.box, profile.loc_noise_px, w, h)
        dets.append(Detection(box, obj.class_id, _draw_score(rng, profile.conf_tp)))
    n_fp = int(rng.poisson(profile.fp_rate)) if profile.fp_rate > 0 else 0
    for _ in range(n_fp):
        bw = max(1.0, min(rng.uniform(6.0, 48.0), w - 1.0))
        bh = max(1.0, min(rng.uniform(6.0, 48.0), h - 1.0))
        bx = rng.uniform(0.0, w - bw)
        by = rng.uniform(0.0, h - bh)
        cls = int(rng.integers(profile.num_classes))
        dets.append(Detection((bx, by, bx + bw, by + bh), cls,
                              _draw_score(rng, profile.conf_fp)))
    return dets


def tile_confidence(dets: Sequence[Detection], policy: RoutingPolicy) -> float:
    """Aggregate a tile's detection scores; an empty tile aggregates to 0."""
    if not dets:
        return 0.0
    scores = [d.score for d in dets]
    return max(scores) if policy.aggregation == "max" else sum(scores) / len(scores)


def route(tile: Tile, dets: Sequence[Detection], policy: RoutingPolicy,
          result_bytes_per_det: int | None = None) -> RouteDecision:
    """Send compact results when confidence clears the threshold, else the tile."""
    per_det = policy.result_bytes_per_det if result_bytes_per_det is None else result_bytes_per_det
    if tile_confidence(dets, policy) >= policy.confidence_threshold:
        payload = policy.result_header_bytes + per_det * len(dets)
        return RouteDecision(ROUTE_RESULTS, min(payload, policy.result_cap_bytes), len(dets))
    return RouteDecision(ROUTE_IMAGE, tile.payload_bytes, len(dets))
