"""Dataset construction: scenario mining, keyframe selection, QA, statistics.

Challenging intervals are mined from drive logs by rolling-window
variance of speed and yaw rate. Within an interval, the maneuver onset
is the first threshold crossing of acceleration or yaw rate, and the
keyframe is placed a configured 0.5-1.0 s lead before it. Corpus-level
helpers validate annotated records, tabulate meta-action statistics, and
assign reproducible train/val/test splits.

Long-tail object mining by embedding search is defined only as an
abstract interface; it needs an external vision model.
"""

from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .scenario import ScenarioRecord
from .vocabulary import DEFAULT_VOCABULARY, Vocabulary


@dataclass(frozen=True)
class DriveLog:
    """Uniformly sampled maneuver signals from one drive."""

    timestamps: tuple[float, ...]  # seconds
    speed: tuple[float, ...]  # m/s
    yaw_rate: tuple[float, ...]  # rad/s
    steering: tuple[float, ...]
    acceleration: tuple[float, ...]  # m/s^2

    def __post_init__(self):
        n = len(self.timestamps)
        if n < 2:
            raise ValueError("drive log needs at least 2 samples")
        for name in ("speed", "yaw_rate", "steering", "acceleration"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length mismatch")
        t = np.asarray(self.timestamps)
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if np.abs(dt - dt[0]).max() > 1e-9:
            raise ValueError("sampling rate must be uniform")

    @property
    def rate_hz(self) -> float:
        return 1.0 / (self.timestamps[1] - self.timestamps[0])


@dataclass(frozen=True)
class MiningConfig:
    window: float = 2.0  # seconds
    speed_var_threshold: float = 1.0  # (m/s)^2
    yaw_rate_var_threshold: float = 0.01  # (rad/s)^2
    accel_threshold: float = 2.0  # m/s^2, onset detection
    yaw_rate_threshold: float = 0.2  # rad/s, onset detection
    keyframe_lead: float = 0.75  # seconds before onset

    def __post_init__(self):
        if self.window <= 0:
            raise ValueError("window must be > 0")
        if not 0.5 <= self.keyframe_lead <= 1.0:
            raise ValueError("keyframe lead must be within [0.5, 1.0] s")


def _rolling_variance(x: np.ndarray, n: int) -> np.ndarray:
    """Population variance over a trailing window of n samples."""
    out = np.full(len(x), np.nan)
    for i in range(n - 1, len(x)):
        out[i] = np.var(x[i - n + 1:i + 1])
    return out


def mine_challenging(log: DriveLog, cfg: MiningConfig = MiningConfig()) -> list[tuple[float, float]]:
    """Time intervals where speed or yaw-rate variance exceeds its threshold.

    Each flagged sample contributes the trailing window that produced
    it; overlapping or adjacent intervals are merged.
    """
    t = np.asarray(log.timestamps)
    n = int(round(cfg.window * log.rate_hz))
    if n < 2 or n > len(t):
        raise ValueError("window must span at least 2 samples and fit the log")
    var_speed = _rolling_variance(np.asarray(log.speed), n)
    var_yaw = _rolling_variance(np.asarray(log.yaw_rate), n)
    flagged = (var_speed > cfg.speed_var_threshold) | (var_yaw > cfg.yaw_rate_var_threshold)

    intervals: list[tuple[float, float]] = []
    for i in np.flatnonzero(flagged):
        lo, hi = float(t[i - n + 1]), float(t[i])
        if intervals and lo <= intervals[-1][1]:
            intervals[-1] = (intervals[-1][0], hi)
        else:
            intervals.append((lo, hi))
    return intervals


@dataclass(frozen=True)
class KeyframeResult:
    timestamp: float
    onset: float | None
    clamped: bool
    fallback: bool  # no threshold crossing; interval start used


def select_keyframe(log: DriveLog, interval: tuple[float, float],
                    cfg: MiningConfig = MiningConfig()) -> KeyframeResult:
    """Keyframe = maneuver onset minus the configured lead, clamped to log start.

    Onset is the first sample in the interval where |acceleration| or
    |yaw rate| crosses its threshold; the earlier crossing wins. Without
    a crossing the interval start is used and the result is flagged.
    """
    t = np.asarray(log.timestamps)
    lo, hi = interval
    if lo < t[0] - 1e-9 or hi > t[-1] + 1e-9:
        raise ValueError("interval outside the log")
    mask = (t >= lo - 1e-9) & (t <= hi + 1e-9)
    accel = np.abs(np.asarray(log.acceleration)[mask])
    yaw = np.abs(np.asarray(log.yaw_rate)[mask])
    crossing = (accel > cfg.accel_threshold) | (yaw > cfg.yaw_rate_threshold)
    hits = np.flatnonzero(crossing)
    if len(hits) == 0:
        onset, fallback = None, True
        key = lo
    else:
        onset = float(t[mask][hits[0]])
        fallback = False
        key = onset - cfg.keyframe_lead
    clamped = bool(key < t[0])
    return KeyframeResult(timestamp=max(key, float(t[0])), onset=onset,
                          clamped=clamped, fallback=fallback)


# --- corpus QA and statistics ------------------------------------------------

@dataclass(frozen=True)
class Violation:
    record_id: str
    check: str
    detail: str


def validate_corpus(records, vocab: Vocabulary = DEFAULT_VOCABULARY,
                    speed_tolerance: float = 2.0) -> list[Violation]:
    """Automated annotation QA; returns all violations, raises nothing.

    Schema validity and vocabulary closure are enforced at parse time
    already; here they are re-checked defensively, together with a
    plausibility check that the first trajectory segment's implied speed
    agrees with the annotated ego speed.
    """
    out: list[Violation] = []
    for r in records:
        for a in r.meta_actions:
            if a.token not in vocab:
                out.append(Violation(r.id, "vocabulary", f"unknown token {a.token!r}"))
        for idx, _ in r.analyses:
            if not 0 <= idx < len(r.critical_objects):
                out.append(Violation(r.id, "analysis-reference",
                                     f"analysis references missing object {idx}"))
        w = r.trajectory.as_array()
        seg_speed = float(np.linalg.norm(w[1] - w[0]) / r.trajectory.dt)
        if abs(seg_speed - r.ego.speed) > speed_tolerance:
            out.append(Violation(
                r.id, "speed-consistency",
                f"first segment implies {seg_speed:.2f} m/s vs ego speed "
                f"{r.ego.speed:.2f} m/s"))
    return out


@dataclass(frozen=True)
class CorpusStats:
    position_frequencies: tuple[dict[str, float], ...]  # positions 1..3
    length_histogram: dict[int, int]
    n_records: int


def corpus_stats(records) -> CorpusStats:
    """Token frequency per sequence position (1-3) and length histogram."""
    records = list(records)
    if not records:
        raise ValueError("empty corpus")
    position_counts = [Counter(), Counter(), Counter()]
    lengths = Counter()
    for r in records:
        tokens = r.action_tokens
        lengths[len(tokens)] += 1
        for pos in range(min(3, len(tokens))):
            position_counts[pos][tokens[pos]] += 1
    freqs = tuple(
        {tok: cnt / total for tok, cnt in sorted(counter.items())}
        if (total := sum(counter.values())) else {}
        for counter in position_counts
    )
    return CorpusStats(position_frequencies=freqs,
                       length_histogram=dict(sorted(lengths.items())),
                       n_records=len(records))


DEFAULT_SPLIT_RATIO = (7.5, 1.0, 1.5)  # train : val : test


def split_corpus(records, ratio=DEFAULT_SPLIT_RATIO,
                 salt: str = "sup-split") -> dict[str, list[ScenarioRecord]]:
    """Deterministic train/val/test split with exact ratio counts.

    Records are ordered by a salted hash of their id (so the split is
    reproducible and independent of input order) and sliced at the exact
    ratio boundaries.
    """
    records = list(records)
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("record ids must be unique for splitting")
    order = sorted(
        records,
        key=lambda r: hashlib.sha256(f"{salt}:{r.id}".encode()).hexdigest(),
    )
    total = sum(ratio)
    n = len(records)
    n_train = round(n * ratio[0] / total)
    n_val = round(n * ratio[1] / total)
    return {
        "train": order[:n_train],
        "val": order[n_train:n_train + n_val],
        "test": order[n_train + n_val:],
    }


class EmbeddingSearch(ABC):
    """Interface for long-tail object mining against an embedding index.

    No implementation is bundled: realizing it requires an external
    vision-language embedding model.
    """

    @abstractmethod
    def query(self, text: str, top_k: int) -> list[str]:
        """Return ids of the top-k frames matching a text query."""
