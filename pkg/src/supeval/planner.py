"""High-frequency trajectory refinement seeded by a slow reference.

The refiner minimizes a quadratic tracking + smoothness + obstacle
clearance objective by gradient descent with backtracking line search,
starting from the slow-branch reference trajectory. A deterministic
discrete-event simulation of the asynchronous slow/fast loop is also
provided: the fast loop ticks at a fixed rate and always consumes the
latest completed slow result without ever blocking on the slow branch.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .scenario import Detection3D, EgoState, Trajectory


@dataclass(frozen=True)
class ObstacleTrack:
    """Per-timestep oriented rectangle; one pose per trajectory waypoint."""

    centers: tuple[tuple[float, float], ...]
    size: tuple[float, float]  # length, width
    yaws: tuple[float, ...]

    def __post_init__(self):
        if len(self.centers) != len(self.yaws):
            raise ValueError("centers and yaws must have equal length")
        if min(self.size) <= 0:
            raise ValueError("obstacle size components must be > 0")


def obstacle_from_detection(det: Detection3D, n_steps: int, dt: float) -> ObstacleTrack:
    """Constant-velocity extrapolation of a detection's history."""
    cx, cy = det.center[0], det.center[1]
    if len(det.history) >= 2:
        (x0, y0, *_), (x1, y1, *_) = det.history[-2], det.history[-1]
        vx, vy = (x1 - x0) / dt, (y1 - y0) / dt
    else:
        vx = vy = 0.0
    centers = tuple((cx + vx * i * dt, cy + vy * i * dt) for i in range(n_steps))
    return ObstacleTrack(centers=centers, size=(det.size[0], det.size[1]),
                         yaws=(det.yaw,) * n_steps)


@dataclass(frozen=True)
class PlannerInputs:
    w_slow: Trajectory
    ego: EgoState
    obstacles: tuple[ObstacleTrack, ...] = ()
    speed_limit: float | None = None
    lateral_bound: float | None = None

    def __post_init__(self):
        n = len(self.w_slow.waypoints)
        for obs in self.obstacles:
            if len(obs.centers) != n:
                raise ValueError("obstacle timesteps must align with trajectory")


@dataclass(frozen=True)
class PlannerConfig:
    w_ref: float = 1.0
    w_smooth: float = 1.0
    w_obs: float = 10.0
    clearance: float = 1.0  # hinge activation distance, meters
    max_iters: int = 200
    init_step: float = 1.0
    armijo_c: float = 1e-4
    shrink: float = 0.5
    tol: float = 1e-8  # on gradient norm

    def __post_init__(self):
        if min(self.w_ref, self.w_smooth, self.w_obs) < 0:
            raise ValueError("weights must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tolerance must be > 0")


def _rect_distance_and_grad(p: np.ndarray, center, size, yaw):
    """Distance from a point to an oriented rectangle, with gradient wrt p.

    Zero inside the rectangle (gradient zero there and on the boundary).
    """
    c, s = math.cos(yaw), math.sin(yaw)
    d = p - np.asarray(center)
    # into rectangle frame
    lx = c * d[0] + s * d[1]
    ly = -s * d[0] + c * d[1]
    ex = max(abs(lx) - size[0] / 2.0, 0.0)
    ey = max(abs(ly) - size[1] / 2.0, 0.0)
    dist = math.hypot(ex, ey)
    if dist == 0.0:
        return 0.0, np.zeros(2)
    gx = math.copysign(ex, lx) / dist
    gy = math.copysign(ey, ly) / dist
    return dist, np.array([c * gx - s * gy, s * gx + c * gy])


def rect_distance(p, center, size, yaw) -> float:
    return _rect_distance_and_grad(np.asarray(p, dtype=float), center, size, yaw)[0]


def _check_lengths(W: np.ndarray, inputs: PlannerInputs) -> np.ndarray:
    ref = inputs.w_slow.as_array()
    if W.shape != ref.shape:
        raise ValueError("trajectory length mismatch with reference")
    return ref


def objective(W, inputs: PlannerInputs, cfg: PlannerConfig = PlannerConfig()) -> float:
    """Tracking + second-difference smoothness + hinge-squared clearance."""
    W = np.asarray(W, dtype=float)
    ref = _check_lengths(W, inputs)
    J = cfg.w_ref * float(np.sum((W - ref) ** 2))
    if len(W) >= 3:
        dd = W[2:] - 2 * W[1:-1] + W[:-2]
        J += cfg.w_smooth * float(np.sum(dd ** 2))
    for obs in inputs.obstacles:
        for i in range(len(W)):
            dist, _ = _rect_distance_and_grad(W[i], obs.centers[i], obs.size,
                                              obs.yaws[i])
            gap = cfg.clearance - dist
            if gap > 0:
                J += cfg.w_obs * gap * gap
    if not math.isfinite(J):
        raise ValueError("non-finite objective (bad input geometry)")
    return J


def gradient(W, inputs: PlannerInputs, cfg: PlannerConfig = PlannerConfig()) -> np.ndarray:
    """Analytic gradient of :func:`objective`, shape (n, 2)."""
    W = np.asarray(W, dtype=float)
    ref = _check_lengths(W, inputs)
    g = 2.0 * cfg.w_ref * (W - ref)
    if len(W) >= 3:
        dd = W[2:] - 2 * W[1:-1] + W[:-2]
        g[2:] += 2.0 * cfg.w_smooth * dd
        g[1:-1] += -4.0 * cfg.w_smooth * dd
        g[:-2] += 2.0 * cfg.w_smooth * dd
    for obs in inputs.obstacles:
        for i in range(len(W)):
            dist, ddist = _rect_distance_and_grad(W[i], obs.centers[i], obs.size,
                                                  obs.yaws[i])
            gap = cfg.clearance - dist
            if gap > 0:
                g[i] += -2.0 * cfg.w_obs * gap * ddist
    return g


def min_clearance(traj: Trajectory, obstacles) -> float:
    """Smallest waypoint-to-obstacle distance over the whole horizon."""
    W = traj.as_array()
    best = math.inf
    for obs in obstacles:
        for i in range(len(W)):
            best = min(best, rect_distance(W[i], obs.centers[i], obs.size,
                                           obs.yaws[i]))
    return best


def refine(inputs: PlannerInputs, cfg: PlannerConfig = PlannerConfig()) -> Trajectory:
    """Gradient descent from the slow reference; first waypoint pinned to ego.

    Line-search steps are only accepted on Armijo decrease, so the
    returned trajectory never scores worse than the (pinned) seed. A
    seed that is already stationary is returned unchanged.
    """
    W = inputs.w_slow.as_array().copy()
    W[0] = inputs.ego.position
    J = objective(W, inputs, cfg)

    for _ in range(cfg.max_iters):
        g = gradient(W, inputs, cfg)
        g[0] = 0.0  # keep the start pinned
        gnorm2 = float(np.sum(g ** 2))
        if math.sqrt(gnorm2) <= cfg.tol:
            break
        alpha = cfg.init_step
        while alpha > 1e-16:
            W_new = W - alpha * g
            J_new = objective(W_new, inputs, cfg)
            if J_new <= J - cfg.armijo_c * alpha * gnorm2:
                break
            alpha *= cfg.shrink
        else:
            break  # no acceptable step; stop at the current point
        W, J = W_new, J_new

    return Trajectory(waypoints=tuple(map(tuple, W)), dt=inputs.w_slow.dt)


# --- asynchronous slow/fast simulation ---------------------------------------

@dataclass(frozen=True)
class TickTrace:
    index: int
    time: float
    slow_seq: int | None  # sequence number of the consumed slow result
    slow_age: float | None  # seconds since that result completed
    bootstrap: bool  # True when no slow result has ever arrived
    trajectory: Trajectory


def _bootstrap_trajectory(ego: EgoState, n_steps: int = 7, dt: float = 0.5) -> Trajectory:
    """Straight-line extrapolation of the ego state."""
    c, s = math.cos(ego.heading), math.sin(ego.heading)
    pts = tuple(
        (ego.position[0] + ego.speed * c * i * dt,
         ego.position[1] + ego.speed * s * i * dt)
        for i in range(n_steps)
    )
    return Trajectory(waypoints=pts, dt=dt)


def dual_loop(slow_source, fast_tick_hz: float, sim_duration: float,
              latency_model, ego: EgoState,
              cfg: PlannerConfig = PlannerConfig()) -> list[TickTrace]:
    """Deterministic discrete-event simulation of the slow/fast dual system.

    The slow branch issues requests back-to-back; request ``n`` completes
    ``latency_model(n)`` (or a constant latency) after the previous one.
    The fast loop ticks at ``fast_tick_hz`` and each tick refines against
    the newest completed slow reference through a latest-value mailbox;
    it never waits. Until the first slow result lands it refines against
    its own previous output, seeded by straight-line extrapolation of the
    ego state, and the trace flags those ticks as bootstrap.

    ``slow_source`` maps a slow sequence number to PlannerInputs; pass
    None to disable the slow branch entirely.
    """
    if fast_tick_hz <= 0:
        raise ValueError("fast_tick_hz must be > 0")
    latency = latency_model if callable(latency_model) else (lambda _n, L=latency_model: L)

    n_ticks = math.floor(sim_duration * fast_tick_hz + 1e-9)
    tick_times = [k / fast_tick_hz for k in range(n_ticks)]

    completions: list[float] = []
    if slow_source is not None:
        t = 0.0
        seq = 0
        while t <= sim_duration:
            L = float(latency(seq))
            if L <= 0.0:
                # zero-latency degenerate case: a fresh result at every instant
                completions = list(tick_times)
                break
            t += L
            if t > sim_duration:
                break
            completions.append(t)
            seq += 1

    trace: list[TickTrace] = []
    prev_fast: Trajectory | None = None
    for k, now in enumerate(tick_times):
        idx = bisect_right(completions, now) - 1
        if slow_source is not None and idx >= 0:
            inputs = slow_source(idx)
            result = refine(inputs, cfg)
            trace.append(TickTrace(k, now, idx, now - completions[idx], False, result))
        else:
            seed = prev_fast if prev_fast is not None else _bootstrap_trajectory(ego)
            inputs = PlannerInputs(w_slow=seed, ego=ego)
            result = refine(inputs, cfg)
            trace.append(TickTrace(k, now, None, None, True, result))
        prev_fast = result
    return trace
