"""Scene-description scoring: key-information extraction, matching, aggregation.

A description is decomposed into discrete key-information items, split
into environmental conditions and critical events. Output items are
matched one-to-one against reference items; full matches score 1.0,
partial matches 0.5, and each hallucinated output item costs 0.25. The
total is divided by the number of reference items.

Matching judgment is pluggable: a deterministic structured matcher keeps
CI reproducible, while an HTTP judge gateway (or its replay stub) can
delegate extraction and match labels to an external LLM evaluator.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, asdict

from .scenario import ScenarioRecord

ENVIRONMENT = "environment"
CRITICAL_EVENT = "critical_event"


@dataclass(frozen=True)
class KeyInfo:
    kind: str
    content: str
    field_name: str | None = None

    def __post_init__(self):
        if self.kind not in (ENVIRONMENT, CRITICAL_EVENT):
            raise ValueError(f"unknown key-info kind: {self.kind!r}")
        if self.kind == ENVIRONMENT and not self.field_name:
            raise ValueError("environment key info requires a field name")
        if not self.content:
            raise ValueError("key info content must be non-empty")


@dataclass(frozen=True)
class ScoreBreakdown:
    n_matched: int
    n_partial: int
    n_hallucination: int
    n_gt: int
    score: float


def aggregate_score(n_matched: int, n_partial: int, n_hallucination: int,
                    n_gt: int) -> float:
    """(1.0 * matched + 0.5 * partial - 0.25 * hallucinated) / n_gt."""
    if n_gt < 1:
        raise ValueError("n_gt must be >= 1")
    if min(n_matched, n_partial, n_hallucination) < 0:
        raise ValueError("counts must be >= 0")
    return (1.0 * n_matched + 0.5 * n_partial - 0.25 * n_hallucination) / n_gt


def _norm_text(s: str) -> str:
    return re.sub(r"\s+", " ", s.strip().strip(".").lower())


def _field_name(label: str) -> str:
    return re.sub(r"\s+", "_", label.strip().lower())


_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


def _split_sentences(text: str) -> list[str]:
    return [s.strip().rstrip(".") for s in _SENTENCE_SPLIT.split(text.strip())
            if s.strip()]


def extract_key_info_from_text(description: str) -> list[KeyInfo]:
    """Deterministic extractor for pipe-delimited structured descriptions.

    ``Label: value`` segments separated by ``||`` become environment
    items; everything else is split into sentences, one critical event
    each. A leading ``Critical Events:`` label is stripped.
    """
    if not description.strip():
        raise ValueError("empty description")
    items: list[KeyInfo] = []
    event_text: list[str] = []
    for line in description.splitlines():
        line = line.strip()
        if not line:
            continue
        if re.sub(r"^critical events?:\s*", "", line, flags=re.I) != line:
            event_text.append(re.sub(r"^critical events?:\s*", "", line, flags=re.I))
            continue
        if "||" in line or re.match(r"^[A-Za-z][A-Za-z ]{0,30}:\s+\S", line):
            for seg in line.split("||"):
                seg = seg.strip()
                if not seg:
                    continue
                m = re.match(r"^([A-Za-z][A-Za-z ]{0,30}):\s*(.+)$", seg)
                if m:
                    items.append(KeyInfo(ENVIRONMENT, _norm_text(m.group(2)),
                                         _field_name(m.group(1))))
                else:
                    event_text.append(seg)
        else:
            event_text.append(line)
    for sentence in _split_sentences(" ".join(event_text)):
        items.append(KeyInfo(CRITICAL_EVENT, _norm_text(sentence)))
    return items


def extract_key_info(description) -> list[KeyInfo]:
    """Extract key info from a scenario record or a free-text description."""
    if isinstance(description, ScenarioRecord):
        env = description.environment
        items = [
            KeyInfo(ENVIRONMENT, _norm_text(env.weather), "weather"),
            KeyInfo(ENVIRONMENT, _norm_text(env.time), "time"),
            KeyInfo(ENVIRONMENT, _norm_text(env.road), "road"),
            KeyInfo(ENVIRONMENT, _norm_text(env.lane), "lane"),
        ]
        for _, analysis in description.analyses:
            items.append(KeyInfo(CRITICAL_EVENT, _norm_text(analysis.influence)))
        return items
    return extract_key_info_from_text(description)


@dataclass(frozen=True)
class MatchThresholds:
    match: float = 0.6
    partial: float = 0.3


def token_jaccard(a: str, b: str) -> float:
    ta, tb = set(_norm_text(a).split()), set(_norm_text(b).split())
    if not ta or not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)


def default_similarity(gt: KeyInfo, out: KeyInfo) -> float:
    if gt.kind != out.kind:
        return 0.0
    if gt.kind == ENVIRONMENT:
        if gt.field_name != out.field_name:
            return 0.0
        return 1.0 if gt.content == out.content else 0.5
    return token_jaccard(gt.content, out.content)


def classify_matches(gt: list[KeyInfo], out: list[KeyInfo], matcher=None,
                     thresholds: MatchThresholds = MatchThresholds()) -> ScoreBreakdown:
    """Greedy one-to-one matching by descending similarity.

    Pairs at or above the partial threshold are assigned greedily; each
    assigned pair counts as matched or partial by the match threshold.
    Output items left unpaired count as hallucinations.
    """
    if len(gt) < 1:
        raise ValueError("reference key-info list must be non-empty")
    if matcher is None:
        matcher = default_similarity
    pairs = sorted(
        ((matcher(g, o), gi, oi) for gi, g in enumerate(gt) for oi, o in enumerate(out)),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    used_gt: set[int] = set()
    used_out: set[int] = set()
    n_matched = n_partial = 0
    for sim, gi, oi in pairs:
        if sim < thresholds.partial:
            break
        if gi in used_gt or oi in used_out:
            continue
        used_gt.add(gi)
        used_out.add(oi)
        if sim >= thresholds.match:
            n_matched += 1
        else:
            n_partial += 1
    n_hallucination = len(out) - len(used_out)
    score = aggregate_score(n_matched, n_partial, n_hallucination, len(gt))
    return ScoreBreakdown(n_matched, n_partial, n_hallucination, len(gt), score)


# --- judge gateway -----------------------------------------------------------

class JudgeError(Exception):
    """Gateway failure: network, timeout, or schema-invalid response."""


@dataclass(frozen=True)
class JudgeRequest:
    reference_description: str
    output_description: str
    prompt_template_id: str = "default"

    def key(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class PairLabel:
    gt_index: int
    out_index: int
    label: str  # matched | partial

    def __post_init__(self):
        if self.label not in ("matched", "partial"):
            raise ValueError(f"unknown pair label: {self.label!r}")


@dataclass(frozen=True)
class JudgeResponse:
    gt_items: tuple[KeyInfo, ...]
    out_items: tuple[KeyInfo, ...]
    pair_labels: tuple[PairLabel, ...]

    def breakdown(self) -> ScoreBreakdown:
        used_out = {p.out_index for p in self.pair_labels}
        n_matched = sum(p.label == "matched" for p in self.pair_labels)
        n_partial = sum(p.label == "partial" for p in self.pair_labels)
        n_hall = len(self.out_items) - len(used_out)
        n_gt = len(self.gt_items)
        return ScoreBreakdown(n_matched, n_partial, n_hall, n_gt,
                              aggregate_score(n_matched, n_partial, n_hall, n_gt))


def _key_info_from_wire(d: dict) -> KeyInfo:
    return KeyInfo(kind=d["kind"], content=d["content"],
                   field_name=d.get("field_name"))


def response_from_wire(payload: dict) -> JudgeResponse:
    """Decode the judge wire format; raises JudgeError on schema problems."""
    try:
        return JudgeResponse(
            gt_items=tuple(_key_info_from_wire(d) for d in payload["gt_items"]),
            out_items=tuple(_key_info_from_wire(d) for d in payload["out_items"]),
            pair_labels=tuple(
                PairLabel(p["gt_index"], p["out_index"], p["label"])
                for p in payload["pair_labels"]
            ),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise JudgeError(f"schema-invalid judge response: {e}") from e


class StubJudge:
    """Replays canned responses keyed by request content; deterministic."""

    def __init__(self, canned: dict[str, dict] | None = None):
        self._canned = dict(canned or {})

    def add(self, request: JudgeRequest, payload: dict) -> None:
        self._canned[request.key()] = payload

    def __call__(self, request: JudgeRequest) -> JudgeResponse:
        try:
            payload = self._canned[request.key()]
        except KeyError:
            raise JudgeError("no canned response for request") from None
        return response_from_wire(payload)


class HttpJudge:
    """Blocking HTTP judge client; one POST per request."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def __call__(self, request: JudgeRequest) -> JudgeResponse:
        import requests

        try:
            resp = requests.post(self.endpoint, json=asdict(request),
                                 timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as e:
            raise JudgeError(f"judge gateway failure: {e}") from e
        return response_from_wire(payload)


def score_description(reference: str, output: str, judge=None) -> ScoreBreakdown:
    """Score an output description against a reference.

    With ``judge=None`` the deterministic extractor and matcher run
    locally; otherwise the judge callable supplies items and labels.
    Gateway failures propagate as JudgeError so a scenario is reported
    unscored rather than silently scored 0.
    """
    if judge is None:
        gt = extract_key_info(reference)
        out = extract_key_info(output)
        return classify_matches(gt, out)
    response = judge(JudgeRequest(reference, output))
    return response.breakdown()
