"""Overlap ratio (VOR) and centre location error (CLE), plus CSV I/O for
trajectories and per-frame reports."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .seqio import BoundingBox

TRAJ_HEADER = ["frame", "x", "y", "w", "h", "score"]
REPORT_HEADER = ["frame", "vor", "cle"]


def vor(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area of two real-valued rectangles."""
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = float(iw * ih)
    return inter / (a.w * a.h + b.w * b.h - inter)


def cle(a: BoundingBox, b: BoundingBox) -> float:
    (ax, ay), (bx, by) = a.center, b.center
    return math.hypot(ax - bx, ay - by)


@dataclass
class EvalReport:
    per_frame: list[tuple[int, float, float]]
    mean_vor: float
    mean_cle: float


def evaluate(trajectory, truth) -> EvalReport:
    if len(trajectory) != len(truth):
        raise ValueError(f"trajectory has {len(trajectory)} frames but truth has {len(truth)}")
    if not trajectory:
        raise ValueError("empty trajectory")
    rows = [(i, vor(t, g), cle(t, g)) for i, (t, g) in enumerate(zip(trajectory, truth), 1)]
    n = len(rows)
    return EvalReport(rows, math.fsum(r[1] for r in rows) / n, math.fsum(r[2] for r in rows) / n)


def write_trajectory(path, boxes, scores) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(TRAJ_HEADER)
        for i, (box, score) in enumerate(zip(boxes, scores), 1):
            out.writerow([i, box.x, box.y, box.w, box.h, f"{score:.6f}"])


def read_trajectory(path) -> tuple[list[BoundingBox], list[float]]:
    boxes, scores = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRAJ_HEADER:
            raise ValueError(f"{path}: expected header {','.join(TRAJ_HEADER)}")
        for row in reader:
            boxes.append(BoundingBox(int(row["x"]), int(row["y"]), int(row["w"]), int(row["h"])))
            scores.append(float(row["score"]))
    return boxes, scores


def write_report(path, report: EvalReport) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(REPORT_HEADER)
        for frame, v, c in report.per_frame:
            out.writerow([frame, f"{v:.6f}", f"{c:.6f}"])


def read_report(path) -> list[tuple[int, float, float]]:
    with open(path, newline="") as fh:
        return [(int(r["frame"]), float(r["vor"]), float(r["cle"])) for r in csv.DictReader(fh)]
