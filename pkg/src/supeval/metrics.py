"""Open-loop planning metrics: displacement error and collision rate.

Displacement error compares predicted and ground-truth ego waypoints at
fixed horizons, in both reporting conventions found in the literature
(error at the horizon waypoint vs the running mean up to it); reports
always carry the mode label. Collision checking runs a separating-axis
test between the ego footprint, oriented along the predicted path, and
per-step agent rectangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .planner import ObstacleTrack
from .scenario import Trajectory

AT_HORIZON = "at-horizon"
CUMULATIVE_MEAN = "cumulative-mean"
DEFAULT_HORIZONS = (1.0, 2.0, 3.0)


@dataclass(frozen=True)
class MetricsReport:
    de_per_horizon: dict[float, float]
    de_avg: float
    collision_per_horizon: dict[float, float]
    collision_avg: float
    mode: str


def _horizon_index(h: float, traj: Trajectory) -> int:
    idx = h / traj.dt
    k = round(idx)
    if abs(idx - k) > 1e-9:
        raise ValueError(f"horizon {h}s is not a multiple of dt={traj.dt}s")
    if k < 1 or k >= len(traj.waypoints):
        raise ValueError(f"horizon {h}s beyond trajectory coverage")
    return k


def displacement_error(pred: Trajectory, gt: Trajectory,
                       horizons=DEFAULT_HORIZONS,
                       mode: str = AT_HORIZON) -> tuple[dict[float, float], float]:
    """Per-horizon L2 error and the mean across horizons.

    ``at-horizon`` takes the error at the waypoint whose time equals the
    horizon; ``cumulative-mean`` averages over all waypoints after t=0
    up to and including it.
    """
    if mode not in (AT_HORIZON, CUMULATIVE_MEAN):
        raise ValueError(f"unknown mode: {mode!r}")
    if pred.dt != gt.dt:
        raise ValueError("prediction and ground truth must share dt")
    p, g = pred.as_array(), gt.as_array()
    n = min(len(p), len(g))
    dists = np.linalg.norm(p[:n] - g[:n], axis=1)
    per_horizon = {}
    for h in horizons:
        k = _horizon_index(h, pred)
        if k >= n:
            raise ValueError(f"horizon {h}s beyond trajectory coverage")
        if mode == AT_HORIZON:
            per_horizon[h] = float(dists[k])
        else:
            per_horizon[h] = float(dists[1:k + 1].mean())
    return per_horizon, float(np.mean(list(per_horizon.values())))


def _rect_corners(center, size, yaw) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    R = np.array([[c, -s], [s, c]])
    half = np.array(size) / 2.0
    signs = np.array([[1, 1], [1, -1], [-1, -1], [-1, 1]], dtype=float)
    return np.asarray(center) + (signs * half) @ R.T


def rects_overlap(c1, s1, y1, c2, s2, y2) -> bool:
    """Separating-axis overlap test for two oriented rectangles.

    Touching boxes (zero-area intersection) do not count as overlapping.
    """
    p1 = _rect_corners(c1, s1, y1)
    p2 = _rect_corners(c2, s2, y2)
    for yaw in (y1, y2):
        c, s = math.cos(yaw), math.sin(yaw)
        for axis in (np.array([c, s]), np.array([-s, c])):
            a1, a2 = p1 @ axis, p2 @ axis
            if a1.max() <= a2.min() or a2.max() <= a1.min():
                return False
    return True


def _ego_headings(W: np.ndarray) -> np.ndarray:
    headings = np.zeros(len(W))
    prev = 0.0
    for i in range(len(W)):
        j = i if i < len(W) - 1 else len(W) - 2
        d = W[j + 1] - W[j]
        if np.hypot(d[0], d[1]) > 1e-12:
            prev = math.atan2(d[1], d[0])
        headings[i] = prev  # degenerate segment keeps the previous heading
    return headings


def collision_flags(pred: Trajectory, agents: tuple[ObstacleTrack, ...],
                    ego_dims: tuple[float, float],
                    horizons=DEFAULT_HORIZONS) -> dict[float, bool]:
    """Whether the ego footprint hits any agent at any step up to each horizon."""
    W = pred.as_array()
    headings = _ego_headings(W)
    first_hit: float | None = None
    for i in range(len(W)):
        t = i * pred.dt
        for agent in agents:
            if i >= len(agent.centers):
                raise ValueError("agent steps must cover the prediction")
            if rects_overlap(W[i], ego_dims, headings[i],
                             agent.centers[i], agent.size, agent.yaws[i]):
                first_hit = t
                break
        if first_hit is not None:
            break
    return {h: first_hit is not None and first_hit <= h for h in horizons}


def corpus_collision_rate(scenarios, ego_dims: tuple[float, float],
                          horizons=DEFAULT_HORIZONS) -> tuple[dict[float, float], float]:
    """Fraction of scenarios colliding per horizon; ``scenarios`` is a list
    of (predicted trajectory, agent tracks) pairs."""
    if not scenarios:
        raise ValueError("empty corpus")
    counts = {h: 0 for h in horizons}
    for pred, agents in scenarios:
        flags = collision_flags(pred, tuple(agents), ego_dims, horizons)
        for h in horizons:
            counts[h] += flags[h]
    rates = {h: counts[h] / len(scenarios) for h in horizons}
    return rates, float(np.mean(list(rates.values())))


def evaluate(pairs, ego_dims=(4.5, 2.0), horizons=DEFAULT_HORIZONS,
             mode: str = AT_HORIZON) -> MetricsReport:
    """Corpus-level report; ``pairs`` is a list of
    (predicted, ground-truth, agent tracks) triples."""
    if not pairs:
        raise ValueError("empty corpus")
    de_acc = {h: 0.0 for h in horizons}
    for pred, gt, _ in pairs:
        per_h, _avg = displacement_error(pred, gt, horizons, mode)
        for h in horizons:
            de_acc[h] += per_h[h]
    de = {h: de_acc[h] / len(pairs) for h in horizons}
    rates, coll_avg = corpus_collision_rate(
        [(pred, agents) for pred, _, agents in pairs], ego_dims, horizons)
    return MetricsReport(
        de_per_horizon=de,
        de_avg=float(np.mean(list(de.values()))),
        collision_per_horizon=rates,
        collision_avg=coll_avg,
        mode=mode,
    )
