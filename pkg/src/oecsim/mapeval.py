"""IoU matching and mean-average-precision evaluation.

Per class, predictions are sorted by descending score (ties broken by the
stable total order (tile id, box)), greedily matched to the highest-IoU
unmatched ground truth in the same tile, and scored with all-point
interpolated average precision. mAP is the unweighted mean over classes
with at least one ground-truth instance.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

Box = tuple[float, float, float, float]
# gt: tile_id -> [(class_id, box)], preds: tile_id -> [(class_id, box, score)]
GroundTruthMap = Mapping[str, Sequence[tuple[int, Box]]]
PredictionMap = Mapping[str, Sequence[tuple[int, Box, float]]]

DEFAULT_IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class MapResult:
    map: float
    per_class_ap: dict[int, float]


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint."""
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def _all_point_ap(tp_flags: list[bool], n_gt: int) -> float:
    tp = np.cumsum([1 if f else 0 for f in tp_flags])
    fp = np.cumsum([0 if f else 1 for f in tp_flags])
    recall = tp / n_gt
    precision = tp / np.maximum(tp + fp, 1)
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    # Precision envelope: best precision achievable at recall >= r.
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def evaluate_map(gt: GroundTruthMap, preds: PredictionMap,
                 iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> MapResult:
    """Greedy-matched mAP over per-tile ground truth and predictions.

    Raises ValueError when there is no ground truth at all (undefined).
    """
    gt_by_class: dict[int, dict[str, list[Box]]] = defaultdict(lambda: defaultdict(list))
    n_gt: dict[int, int] = defaultdict(int)
    for tile_id, items in gt.items():
        for class_id, box in items:
            gt_by_class[class_id][tile_id].append(box)
            n_gt[class_id] += 1
    if not n_gt:
        raise ValueError("mAP is undefined without ground truth")

    preds_by_class: dict[int, list[tuple[float, str, Box]]] = defaultdict(list)
    for tile_id, items in preds.items():
        for class_id, box, score in items:
            preds_by_class[class_id].append((score, tile_id, box))

    per_class_ap: dict[int, float] = {}
    for class_id in sorted(n_gt):
        candidates = preds_by_class.get(class_id, [])
        if not candidates:
            per_class_ap[class_id] = 0.0
            continue
        candidates.sort(key=lambda p: (-p[0], p[1], p[2]))
        matched: dict[str, set[int]] = defaultdict(set)
        tp_flags: list[bool] = []
        tiles = gt_by_class[class_id]
        for score, tile_id, box in candidates:
            best_iou, best_idx = 0.0, -1
            for idx, gt_box in enumerate(tiles.get(tile_id, ())):
                if idx in matched[tile_id]:
                    continue
                overlap = iou(box, gt_box)
                if overlap >= iou_threshold and overlap > best_iou:
                    best_iou, best_idx = overlap, idx
            if best_idx >= 0:
                matched[tile_id].add(best_idx)
                tp_flags.append(True)
            else:
                tp_flags.append(False)
        per_class_ap[class_id] = _all_point_ap(tp_flags, n_gt[class_id])

    mean_ap = float(np.mean([per_class_ap[c] for c in per_class_ap]))
    return MapResult(mean_ap, per_class_ap)


def gt_from_tiles(tiles) -> dict[str, list[tuple[int, Box]]]:
    """Ground-truth map keyed by tile uid, from Tile objects."""
    out: dict[str, list[tuple[int, Box]]] = {}
    for tile in tiles:
        out[tile.uid] = [(o.class_id, o.box) for o in tile.objects]
    return out


def preds_from_detections(dets_by_tile) -> dict[str, list[tuple[int, Box, float]]]:
    """Prediction map keyed by tile uid, from {uid: [Detection]}."""
    return {uid: [(d.class_id, d.box, d.score) for d in dets]
            for uid, dets in dets_by_tile.items()}


# ---------------------------------------------------------------------------
# Line-delimited interchange files: one record per line,
#   ground truth:  tile_id class_id x_min y_min x_max y_max
#   predictions:   tile_id class_id x_min y_min x_max y_max score
# Tile ids must not contain whitespace.


def save_ground_truth(gt: GroundTruthMap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tile_id in sorted(gt):
            for class_id, box in gt[tile_id]:
                fh.write(f"{tile_id} {class_id} {box[0]!r} {box[1]!r} {box[2]!r} {box[3]!r}\n")


def load_ground_truth(path) -> dict[str, list[tuple[int, Box]]]:
    out: dict[str, list[tuple[int, Box]]] = defaultdict(list)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
            tile_id, class_id, *coords = parts
            out[tile_id].append((int(class_id), tuple(float(c) for c in coords)))
    return dict(out)


def save_predictions(preds: PredictionMap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tile_id in sorted(preds):
            for class_id, box, score in preds[tile_id]:
                fh.write(f"{tile_id} {class_id} {box[0]!r} {box[1]!r} "
                         f"{box[2]!r} {box[3]!r} {score!r}\n")


def load_predictions(path) -> dict[str, list[tuple[int, Box, float]]]:
    out: dict[str, list[tuple[int, Box, float]]] = defaultdict(list)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 7:
                raise ValueError(f"{path}:{lineno}: expected 7 fields, got {len(parts)}")
            tile_id, class_id, x0, y0, x1, y1, score = parts
            out[tile_id].append((int(class_id),
                                 (float(x0), float(y0), float(x1), float(y1)),
                                 float(score)))
    return dict(out)
