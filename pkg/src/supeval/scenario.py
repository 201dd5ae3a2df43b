"""Domain types for annotated driving scenarios, plus JSON (de)serialization.

A scenario record bundles everything one annotated keyframe carries:
environment labels, critical objects with analyses, the meta-action
sequence, a decision description, the ground-truth trajectory, and the
ego state. All types are immutable after construction and validated on
construction. The file format is JSON with schema version ``sup/1``;
corpora use one record per line (JSON Lines).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .vocabulary import DEFAULT_VOCABULARY, UnknownTokenError, Vocabulary

SCHEMA_VERSION = "sup/1"

DEFAULT_WEATHER_LABELS = frozenset(
    {"sunny", "cloudy", "overcast", "rainy", "snowy", "foggy"}
)
DEFAULT_TIME_LABELS = frozenset({"day", "night"})
DEFAULT_ROAD_LABELS = frozenset({"urban", "highway", "rural", "suburban", "tunnel"})


class ScenarioError(Exception):
    """Base class for scenario file problems."""


class ScenarioSyntaxError(ScenarioError):
    """The document is not well-formed JSON."""


class SchemaError(ScenarioError):
    """The document is valid JSON but violates the record schema."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class EnvironmentDescription:
    weather: str
    time: str
    road: str
    lane: str
    weather_labels: frozenset = field(default=DEFAULT_WEATHER_LABELS, compare=False)
    time_labels: frozenset = field(default=DEFAULT_TIME_LABELS, compare=False)
    road_labels: frozenset = field(default=DEFAULT_ROAD_LABELS, compare=False)

    def __post_init__(self):
        _require(self.weather.lower() in self.weather_labels,
                 f"unknown weather label: {self.weather!r}")
        _require(self.time.lower() in self.time_labels,
                 f"unknown time label: {self.time!r}")
        _require(self.road.lower() in self.road_labels,
                 f"unknown road label: {self.road!r}")
        _require(bool(self.lane), "lane description must be non-empty")


@dataclass(frozen=True)
class BBox2D:
    """Axis-aligned pixel box with x1 < x2 and y1 < y2."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        _require(_finite(self.x1, self.y1, self.x2, self.y2),
                 "box coordinates must be finite")
        _require(min(self.x1, self.y1) >= 0, "box coordinates must be >= 0")
        _require(self.x1 < self.x2 and self.y1 < self.y2,
                 f"degenerate box ({self.x1}, {self.y1}, {self.x2}, {self.y2})")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


@dataclass(frozen=True)
class CriticalObject:
    category: str
    box: BBox2D
    free_text: str | None = None

    def __post_init__(self):
        _require(bool(self.category), "critical object category must be non-empty")


@dataclass(frozen=True)
class ObjectAnalysis:
    """Per-object characteristics and the object's influence on the ego car."""

    influence: str
    static_attributes: str | None = None
    motion_state: str | None = None
    particular_behavior: str | None = None

    def __post_init__(self):
        _require(bool(self.influence), "influence must be present")
        _require(
            any((self.static_attributes, self.motion_state, self.particular_behavior)),
            "at least one characteristic field must be present",
        )


@dataclass(frozen=True)
class MetaAction:
    token: str
    conservative: bool

    @classmethod
    def from_token(cls, token: str, vocab: Vocabulary = DEFAULT_VOCABULARY) -> "MetaAction":
        canon = vocab.canonical(token)
        return cls(token=canon, conservative=vocab.is_conservative(canon))


def action_sequence(tokens, vocab: Vocabulary = DEFAULT_VOCABULARY) -> tuple[MetaAction, ...]:
    """Build a validated meta-action sequence from token strings."""
    return tuple(MetaAction.from_token(t, vocab) for t in tokens)


@dataclass(frozen=True)
class DecisionDescription:
    action: str
    subject: str
    duration: str

    def validate_action(self, vocab: Vocabulary) -> None:
        vocab.canonical(self.action)


@dataclass(frozen=True)
class Trajectory:
    """Timestamped 2D waypoints in the ego frame (x forward, y left, meters)."""

    waypoints: tuple[tuple[float, float], ...]
    dt: float

    def __post_init__(self):
        _require(len(self.waypoints) >= 2, "trajectory needs at least 2 waypoints")
        _require(self.dt > 0 and math.isfinite(self.dt), "dt must be positive")
        for w in self.waypoints:
            _require(_finite(*w), "waypoint coordinates must be finite")
        object.__setattr__(
            self, "waypoints", tuple((float(x), float(y)) for x, y in self.waypoints)
        )

    def as_array(self) -> np.ndarray:
        return np.asarray(self.waypoints, dtype=float)

    @property
    def duration(self) -> float:
        return (len(self.waypoints) - 1) * self.dt


@dataclass(frozen=True)
class EgoState:
    position: tuple[float, float]
    heading: float
    speed: float
    history: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        _require(_finite(*self.position, self.heading, self.speed),
                 "ego state values must be finite")
        _require(self.speed >= 0, "speed must be >= 0")
        # normalize heading to (-pi, pi]
        h = -((-self.heading + math.pi) % (2 * math.pi) - math.pi)
        object.__setattr__(self, "heading", h)
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))


@dataclass(frozen=True)
class Detection3D:
    category: str
    center: tuple[float, float, float]
    size: tuple[float, float, float]  # length, width, height
    yaw: float
    history: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        _require(all(s > 0 for s in self.size), "detection size components must be > 0")
        _require(_finite(*self.center, *self.size, self.yaw),
                 "detection values must be finite")


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: intrinsics in pixels, ego-to-camera extrinsics."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: tuple[tuple[float, float, float], ...]
    translation: tuple[float, float, float]
    width: int
    height: int

    def __post_init__(self):
        _require(self.fx > 0 and self.fy > 0, "focal lengths must be > 0")
        _require(self.width > 0 and self.height > 0, "image dims must be > 0")
        R = np.asarray(self.rotation, dtype=float)
        _require(R.shape == (3, 3), "rotation must be 3x3")
        _require(np.abs(R @ R.T - np.eye(3)).max() < 1e-9,
                 "rotation must be orthonormal")
        object.__setattr__(
            self, "rotation", tuple(tuple(float(v) for v in row) for row in R)
        )

    def rotation_matrix(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=float)

    @classmethod
    def identity(cls, fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480):
        return cls(fx, fy, cx, cy,
                   ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
                   (0.0, 0.0, 0.0), width, height)


@dataclass(frozen=True)
class ScenarioRecord:
    id: str
    frames: tuple[str, ...]
    environment: EnvironmentDescription
    critical_objects: tuple[CriticalObject, ...]
    analyses: tuple[tuple[int, ObjectAnalysis], ...]
    scene_summary: str
    meta_actions: tuple[MetaAction, ...]
    decision: DecisionDescription
    trajectory: Trajectory
    ego: EgoState
    detections: tuple[Detection3D, ...] = ()

    def __post_init__(self):
        _require(bool(self.id), "record id must be non-empty")
        _require(len(self.meta_actions) >= 1, "meta-action sequence must be non-empty")
        for idx, _ in self.analyses:
            _require(0 <= idx < len(self.critical_objects),
                     f"analysis references missing critical object {idx}")

    @property
    def action_tokens(self) -> tuple[str, ...]:
        return tuple(a.token for a in self.meta_actions)


# --- serialization -----------------------------------------------------------

def _env_to_dict(e: EnvironmentDescription) -> dict:
    return {"weather": e.weather, "time": e.time, "road": e.road, "lane": e.lane}


def _record_to_dict(r: ScenarioRecord) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "id": r.id,
        "frames": list(r.frames),
        "environment": _env_to_dict(r.environment),
        "critical_objects": [
            {
                "category": o.category,
                "box": [o.box.x1, o.box.y1, o.box.x2, o.box.y2],
                **({"free_text": o.free_text} if o.free_text is not None else {}),
            }
            for o in r.critical_objects
        ],
        "analyses": [
            {
                "object_index": idx,
                **{
                    f.name: getattr(a, f.name)
                    for f in fields(ObjectAnalysis)
                    if getattr(a, f.name) is not None
                },
            }
            for idx, a in r.analyses
        ],
        "scene_summary": r.scene_summary,
        "meta_actions": [a.token for a in r.meta_actions],
        "decision": {
            "action": r.decision.action,
            "subject": r.decision.subject,
            "duration": r.decision.duration,
        },
        "trajectory": {"waypoints": [list(w) for w in r.trajectory.waypoints],
                       "dt": r.trajectory.dt},
        "ego": {
            "position": list(r.ego.position),
            "heading": r.ego.heading,
            "speed": r.ego.speed,
            **({"history": [list(h) for h in r.ego.history]} if r.ego.history else {}),
        },
        "detections": [
            {
                "category": d.category,
                "center": list(d.center),
                "size": list(d.size),
                "yaw": d.yaw,
                **({"history": [list(h) for h in d.history]} if d.history else {}),
            }
            for d in r.detections
        ],
    }


def serialize_scenario(record: ScenarioRecord) -> str:
    """Serialize a record to canonical JSON (fixed field order, exact floats)."""
    return json.dumps(_record_to_dict(record), separators=(", ", ": "))


def _get(doc: dict, key: str, ctx: str = "record"):
    try:
        return doc[key]
    except KeyError:
        raise SchemaError(f"missing field {key!r} in {ctx}") from None


def parse_scenario(document: str, vocab: Vocabulary = DEFAULT_VOCABULARY) -> ScenarioRecord:
    """Parse one scenario document; raises ScenarioSyntaxError or SchemaError."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as e:
        raise ScenarioSyntaxError(f"malformed scenario document: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError("scenario document must be a JSON object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version: {doc.get('schema')!r}")
    return record_from_dict(doc, vocab)


def record_from_dict(doc: dict, vocab: Vocabulary = DEFAULT_VOCABULARY) -> ScenarioRecord:
    env = _get(doc, "environment")
    traj = _get(doc, "trajectory")
    ego = _get(doc, "ego")
    dec = _get(doc, "decision")
    try:
        actions = action_sequence(_get(doc, "meta_actions"), vocab)
    except UnknownTokenError as e:
        raise SchemaError(str(e)) from e
    try:
        return ScenarioRecord(
            id=_get(doc, "id"),
            frames=tuple(doc.get("frames", ())),
            environment=EnvironmentDescription(
                weather=_get(env, "weather", "environment"),
                time=_get(env, "time", "environment"),
                road=_get(env, "road", "environment"),
                lane=_get(env, "lane", "environment"),
            ),
            critical_objects=tuple(
                CriticalObject(
                    category=_get(o, "category", "critical_object"),
                    box=BBox2D(*_get(o, "box", "critical_object")),
                    free_text=o.get("free_text"),
                )
                for o in doc.get("critical_objects", ())
            ),
            analyses=tuple(
                (
                    _get(a, "object_index", "analysis"),
                    ObjectAnalysis(
                        influence=_get(a, "influence", "analysis"),
                        static_attributes=a.get("static_attributes"),
                        motion_state=a.get("motion_state"),
                        particular_behavior=a.get("particular_behavior"),
                    ),
                )
                for a in doc.get("analyses", ())
            ),
            scene_summary=doc.get("scene_summary", ""),
            meta_actions=actions,
            decision=DecisionDescription(
                action=vocab.canonical(_get(dec, "action", "decision")),
                subject=_get(dec, "subject", "decision"),
                duration=_get(dec, "duration", "decision"),
            ),
            trajectory=Trajectory(
                waypoints=tuple(tuple(w) for w in _get(traj, "waypoints", "trajectory")),
                dt=_get(traj, "dt", "trajectory"),
            ),
            ego=EgoState(
                position=tuple(_get(ego, "position", "ego")),
                heading=_get(ego, "heading", "ego"),
                speed=_get(ego, "speed", "ego"),
                history=tuple(tuple(h) for h in ego.get("history", ())),
            ),
            detections=tuple(
                Detection3D(
                    category=_get(d, "category", "detection"),
                    center=tuple(_get(d, "center", "detection")),
                    size=tuple(_get(d, "size", "detection")),
                    yaw=_get(d, "yaw", "detection"),
                    history=tuple(tuple(h) for h in d.get("history", ())),
                )
                for d in doc.get("detections", ())
            ),
        )
    except UnknownTokenError as e:
        raise SchemaError(str(e)) from e
    except (TypeError, ValueError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f"bad field value: {e}") from e


def load_corpus(path, vocab: Vocabulary = DEFAULT_VOCABULARY) -> list[ScenarioRecord]:
    """Load a JSON Lines corpus (one record per line, blank lines skipped)."""
    records = []
    with open(path) as f:
        for n, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(parse_scenario(line, vocab))
            except ScenarioError as e:
                raise type(e)(f"{path}:{n}: {e}") from e
    return records


def dump_corpus(records, path) -> None:
    with open(path, "w") as f:
        for r in records:
            f.write(serialize_scenario(r) + "\n")
