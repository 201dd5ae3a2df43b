"""3D-perception integration: box projection, asymmetric IoU, greedy matching.

3D detections are projected into each camera through a pinhole model
(with near-plane clipping for geometry that straddles the image plane),
then compared against annotated critical-object boxes with an asymmetric
overlap ratio: intersection area divided by the projected detection's
area. Pairs above a threshold with equal category are matched greedily,
one-to-one, by descending overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import BBox2D, CameraModel, CriticalObject, Detection3D

NEAR_PLANE = 0.01  # meters; clip depth for geometry behind the camera

# 12 edges of a box, as corner index pairs
_BOX_EDGES = (
    (0, 1), (1, 3), (3, 2), (2, 0),
    (4, 5), (5, 7), (7, 6), (6, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
)


@dataclass(frozen=True)
class MatchConfig:
    tau: float = 0.5
    require_category_equality: bool = True

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")


@dataclass(frozen=True)
class MatchOutcome:
    matched: tuple[tuple[int, int, float], ...]  # (critical idx, det idx, aIoU)
    unmatched_critical: tuple[int, ...]
    unmatched_detections: tuple[int, ...]


def box_corners(det: Detection3D) -> np.ndarray:
    """The 8 corners of an oriented box in the ego frame, shape (8, 3)."""
    l, w, h = det.size
    cy_, sy = np.cos(det.yaw), np.sin(det.yaw)
    R = np.array([[cy_, -sy, 0.0], [sy, cy_, 0.0], [0.0, 0.0, 1.0]])
    signs = np.array([[sx, sy_, sz]
                      for sx in (-0.5, 0.5) for sy_ in (-0.5, 0.5) for sz in (-0.5, 0.5)])
    local = signs * np.array([l, w, h])
    return np.asarray(det.center) + local @ R.T


def project_box(det: Detection3D, cam: CameraModel,
                near: float = NEAR_PLANE) -> BBox2D | None:
    """Project a 3D detection into a camera; None if nothing is visible.

    Corners are moved into the camera frame; edges crossing the near
    plane are clipped at depth ``near``; surviving points go through the
    pinhole projection and their axis-aligned hull is intersected with
    the image rectangle.
    """
    R = cam.rotation_matrix()
    t = np.asarray(cam.translation)
    pts = box_corners(det) @ R.T + t

    depths = pts[:, 2]
    if np.all(depths <= near):
        return None
    visible = [p for p in pts if p[2] > near]
    for i, j in _BOX_EDGES:
        zi, zj = depths[i], depths[j]
        if (zi > near) != (zj > near):
            a = (near - zi) / (zj - zi)
            visible.append(pts[i] + a * (pts[j] - pts[i]))
    visible = np.asarray(visible)

    u = cam.fx * visible[:, 0] / visible[:, 2] + cam.cx
    v = cam.fy * visible[:, 1] / visible[:, 2] + cam.cy
    x1 = max(float(u.min()), 0.0)
    y1 = max(float(v.min()), 0.0)
    x2 = min(float(u.max()), float(cam.width))
    y2 = min(float(v.max()), float(cam.height))
    if x1 >= x2 or y1 >= y2:
        return None
    return BBox2D(x1, y1, x2, y2)


def a_iou(b_c: BBox2D, b_2d: BBox2D) -> float:
    """Intersection area over the area of ``b_2d`` (asymmetric on purpose)."""
    if b_2d.area <= 0:
        raise ValueError("projected box has zero area")
    ix = min(b_c.x2, b_2d.x2) - max(b_c.x1, b_2d.x1)
    iy = min(b_c.y2, b_2d.y2) - max(b_c.y1, b_2d.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    return (ix * iy) / b_2d.area


def match_objects(critical: list[CriticalObject], dets: list[Detection3D],
                  cams: list[CameraModel],
                  cfg: MatchConfig = MatchConfig()) -> MatchOutcome:
    """Greedy one-to-one pairing of critical objects and detections.

    For each detection the best projection across all cameras (highest
    overlap against the candidate critical box) is used. Only pairs with
    aIoU strictly above the threshold, and equal category when required,
    are candidates.
    """
    projections: list[list[BBox2D]] = []
    for det in dets:
        projections.append([p for p in (project_box(det, cam) for cam in cams)
                            if p is not None])

    candidates = []
    for ci, obj in enumerate(critical):
        for di, det in enumerate(dets):
            if cfg.require_category_equality and obj.category != det.category:
                continue
            best = max((a_iou(obj.box, proj) for proj in projections[di]),
                       default=0.0)
            if best > cfg.tau:
                candidates.append((best, ci, di))
    candidates.sort(key=lambda t: (-t[0], t[1], t[2]))

    used_c: set[int] = set()
    used_d: set[int] = set()
    matched = []
    for score, ci, di in candidates:
        if ci in used_c or di in used_d:
            continue
        used_c.add(ci)
        used_d.add(di)
        matched.append((ci, di, score))

    return MatchOutcome(
        matched=tuple(matched),
        unmatched_critical=tuple(i for i in range(len(critical)) if i not in used_c),
        unmatched_detections=tuple(i for i in range(len(dets)) if i not in used_d),
    )
