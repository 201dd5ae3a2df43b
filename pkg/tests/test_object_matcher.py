import itertools
import math

import numpy as np
import pytest

from supeval.object_matcher import (
    MatchConfig,
    a_iou,
    box_corners,
    match_objects,
    project_box,
)
from supeval.scenario import BBox2D, CameraModel, CriticalObject, Detection3D

CAM = CameraModel.identity(fx=500, fy=500, cx=320, cy=320, width=640, height=640)


def test_projection_centered_on_optical_axis():
    det = Detection3D(category="car", center=(0, 0, 10), size=(1, 1, 1), yaw=0.0)
    box = project_box(det, CAM)
    assert box is not None
    assert (box.x1 + box.x2) / 2 == pytest.approx(320.0)
    assert (box.y1 + box.y2) / 2 == pytest.approx(320.0)


def test_box_behind_camera_is_absent():
    det = Detection3D(category="car", center=(0, 0, -10), size=(1, 1, 1), yaw=0.0)
    assert project_box(det, CAM) is None


def test_projection_hand_arithmetic():
    # cube of side 2 at camera-frame depth 10: near-face corners at Z=9
    # dominate the hull: 320 +/- 500/9
    det = Detection3D(category="car", center=(0, 0, 10), size=(2, 2, 2), yaw=0.0)
    box = project_box(det, CAM)
    assert box.x1 == pytest.approx(320 - 500 / 9, abs=1e-9)
    assert box.x2 == pytest.approx(320 + 500 / 9, abs=1e-9)
    assert box.y1 == pytest.approx(320 - 500 / 9, abs=1e-9)
    assert box.y2 == pytest.approx(320 + 500 / 9, abs=1e-9)


def test_projection_straddling_near_plane_is_clipped_to_image():
    det = Detection3D(category="car", center=(0, 0, 0.5), size=(2, 2, 2), yaw=0.0)
    box = project_box(det, CAM)
    assert box is not None
    assert box.x1 >= 0 and box.y1 >= 0
    assert box.x2 <= CAM.width and box.y2 <= CAM.height


def test_visible_corner_projections_lie_in_unclipped_hull():
    rng = np.random.default_rng(7)
    for _ in range(200):
        det = Detection3D(
            category="car",
            center=tuple(rng.uniform([-5, -5, 2], [5, 5, 30])),
            size=tuple(rng.uniform(0.5, 4.0, 3)),
            yaw=float(rng.uniform(-math.pi, math.pi)),
        )
        corners = box_corners(det)
        front = corners[corners[:, 2] > 0.01]
        if len(front) < 8:
            continue  # hull clipping applies; containment stated pre-clip only
        u = CAM.fx * front[:, 0] / front[:, 2] + CAM.cx
        v = CAM.fy * front[:, 1] / front[:, 2] + CAM.cy
        box = project_box(det, CAM)
        if box is None:
            # fully outside the image rectangle
            assert u.max() <= 0 or u.min() >= CAM.width \
                or v.max() <= 0 or v.min() >= CAM.height
            continue
        lo_u, hi_u = max(u.min(), 0), min(u.max(), CAM.width)
        lo_v, hi_v = max(v.min(), 0), min(v.max(), CAM.height)
        assert box.x1 == pytest.approx(lo_u) and box.x2 == pytest.approx(hi_u)
        assert box.y1 == pytest.approx(lo_v) and box.y2 == pytest.approx(hi_v)


def test_a_iou_identical_boxes():
    b = BBox2D(10, 10, 50, 60)
    assert a_iou(b, b) == 1.0


def test_a_iou_disjoint_boxes():
    assert a_iou(BBox2D(0, 0, 10, 10), BBox2D(20, 20, 30, 30)) == 0.0


def test_a_iou_half_overlap():
    assert a_iou(BBox2D(5, 0, 15, 10), BBox2D(0, 0, 10, 10)) == pytest.approx(0.5)


def test_a_iou_asymmetry_witness():
    inner = BBox2D(10, 10, 20, 20)
    outer = BBox2D(0, 0, 40, 40)
    assert a_iou(outer, inner) == 1.0
    assert a_iou(inner, outer) < 1.0


def test_a_iou_scale_covariance():
    rng = np.random.default_rng(3)
    for _ in range(100):
        x1, y1 = rng.uniform(0, 50, 2)
        w, h = rng.uniform(1, 50, 2)
        a = BBox2D(x1, y1, x1 + w, y1 + h)
        x1b, y1b = rng.uniform(0, 50, 2)
        wb, hb = rng.uniform(1, 50, 2)
        b = BBox2D(x1b, y1b, x1b + wb, y1b + hb)
        k = rng.uniform(0.5, 3.0)
        a2 = BBox2D(k * a.x1, k * a.y1, k * a.x2, k * a.y2)
        b2 = BBox2D(k * b.x1, k * b.y1, k * b.x2, k * b.y2)
        v, v2 = a_iou(a, b), a_iou(a2, b2)
        assert 0.0 <= v <= 1.0
        assert v2 == pytest.approx(v)


def _critical(box, category="car"):
    return CriticalObject(category=category, box=box)


def _detection_projecting_to(box: BBox2D, category="car", depth=20.0):
    """A thin 3D slab whose projection through CAM equals ``box`` exactly."""
    x1 = (box.x1 - CAM.cx) * depth / CAM.fx
    x2 = (box.x2 - CAM.cx) * depth / CAM.fx
    y1 = (box.y1 - CAM.cy) * depth / CAM.fy
    y2 = (box.y2 - CAM.cy) * depth / CAM.fy
    return Detection3D(category=category,
                       center=((x1 + x2) / 2, (y1 + y2) / 2, depth),
                       size=(x2 - x1, y2 - y1, 1e-6), yaw=0.0)


def test_empty_detections_leave_all_critical_unmatched():
    crit = [_critical(BBox2D(0, 0, 10, 10))]
    out = match_objects(crit, [], [CAM])
    assert out.matched == ()
    assert out.unmatched_critical == (0,)
    assert out.unmatched_detections == ()


def test_exact_projection_matches_with_aiou_one():
    box = BBox2D(100, 100, 200, 180)
    out = match_objects([_critical(box)], [_detection_projecting_to(box)], [CAM])
    assert len(out.matched) == 1
    ci, di, v = out.matched[0]
    assert (ci, di) == (0, 0)
    assert v == pytest.approx(1.0, abs=1e-6)


def test_category_mismatch_blocks_matching():
    box = BBox2D(100, 100, 200, 180)
    out = match_objects([_critical(box, "pedestrian")],
                        [_detection_projecting_to(box, "car")], [CAM])
    assert out.matched == ()
    out2 = match_objects([_critical(box, "pedestrian")],
                         [_detection_projecting_to(box, "car")], [CAM],
                         MatchConfig(require_category_equality=False))
    assert len(out2.matched) == 1


def test_greedy_prefers_higher_overlap():
    det_box = BBox2D(100, 100, 200, 200)
    det = _detection_projecting_to(det_box)
    # overlaps of 0.9 and 0.6 against the single detection
    c_high = _critical(BBox2D(100, 100, 200, 190))
    c_low = _critical(BBox2D(100, 140, 200, 200))
    out = match_objects([c_low, c_high], [det], [CAM], MatchConfig(tau=0.5))
    assert len(out.matched) == 1
    assert out.matched[0][0] == 1  # the 0.9-overlap critical object wins
    assert out.unmatched_critical == (0,)


def _oracle_best_assignment(scores, tau):
    """Best one-to-one assignment by total aIoU over pairs above tau."""
    n_c, n_d = scores.shape
    best = (0, 0.0)
    dets = list(range(n_d))
    for k in range(min(n_c, n_d) + 1):
        for crit_sel in itertools.combinations(range(n_c), k):
            for det_sel in itertools.permutations(dets, k):
                vals = [scores[c, d] for c, d in zip(crit_sel, det_sel)]
                if all(v > tau for v in vals):
                    cand = (k, sum(vals))
                    best = max(best, cand)
    return best


def test_partition_and_oracle_agreement_on_random_instances():
    rng = np.random.default_rng(11)
    divergences = 0
    for _ in range(300):
        n_c, n_d = rng.integers(0, 5, 2)
        crit = []
        dets = []
        for _ in range(n_c):
            x, y = rng.uniform(0, 500, 2)
            w, h = rng.uniform(20, 140, 2)
            crit.append(_critical(BBox2D(x, y, x + w, y + h)))
        for _ in range(n_d):
            x, y = rng.uniform(0, 400, 2)
            w, h = rng.uniform(20, 140, 2)
            dets.append(_detection_projecting_to(
                BBox2D(min(x, 600), min(y, 600), min(x + w, 639), min(y + h, 639))))
        out = match_objects(crit, dets, [CAM], MatchConfig(tau=0.5))
        # partition property
        assert len(out.matched) + len(out.unmatched_critical) == n_c
        assert len(out.matched) + len(out.unmatched_detections) == n_d
        matched_c = {c for c, _, _ in out.matched}
        matched_d = {d for _, d, _ in out.matched}
        assert len(matched_c) == len(matched_d) == len(out.matched)
        # compare cardinality against the exhaustive assignment oracle;
        # greedy is the specified algorithm, divergences are recorded
        scores = np.zeros((n_c, n_d))
        for ci, c in enumerate(crit):
            for di, d in enumerate(dets):
                proj = project_box(d, CAM)
                scores[ci, di] = a_iou(c.box, proj) if proj else 0.0
        oracle_k, _ = _oracle_best_assignment(scores, 0.5)
        if len(out.matched) != oracle_k:
            divergences += 1
    # greedy matches the optimum on the vast majority of small instances
    assert divergences <= 15
