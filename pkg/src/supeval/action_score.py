"""Meta-action sequence scoring via weighted sequence alignment.

A candidate sequence is aligned against a reference with a dynamic
program similar to longest-common-subsequence: a match earns a reward,
a skipped reference token costs a missing penalty and an extra candidate
token costs a redundant penalty, with conservative tokens penalized at
half weight. The final score is normalized by the reference length, and
the best score over the reference plus its generated alternatives is
reported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .vocabulary import DEFAULT_VOCABULARY, Vocabulary

MATCHING, MISSING, REDUNDANT = "matching", "missing", "redundant"


@dataclass(frozen=True)
class ScoreWeights:
    s_matching: float = 1.0
    p_missing: float = 1.0
    p_redundant: float = 1.0
    p_missing_conservative: float = 0.5
    p_redundant_conservative: float = 0.5

    def __post_init__(self):
        if self.s_matching <= 0:
            raise ValueError("s_matching must be > 0")
        if min(self.p_missing, self.p_redundant,
               self.p_missing_conservative, self.p_redundant_conservative) < 0:
            raise ValueError("penalties must be >= 0")

    def missing(self, conservative: bool) -> float:
        return self.p_missing_conservative if conservative else self.p_missing

    def redundant(self, conservative: bool) -> float:
        return self.p_redundant_conservative if conservative else self.p_redundant


@dataclass(frozen=True)
class AlignmentResult:
    raw_score: float
    normalized_score: float
    matrix: np.ndarray = field(compare=False)
    backtrace: np.ndarray = field(compare=False)  # dtype=object tags

    def alignment_steps(self) -> list[str]:
        """Replay the backtrace from the bottom-right corner to (0, 0)."""
        steps = []
        r, c = self.matrix.shape[0] - 1, self.matrix.shape[1] - 1
        while r > 0 or c > 0:
            tag = self.backtrace[r, c]
            steps.append(tag)
            if tag == MATCHING:
                r, c = r - 1, c - 1
            elif tag == MISSING:
                r -= 1
            else:
                c -= 1
        steps.reverse()
        return steps


def _tokens(seq, vocab: Vocabulary) -> list[str]:
    return [vocab.canonical(t) for t in seq]


def align(reference, candidate, weights: ScoreWeights = ScoreWeights(),
          vocab: Vocabulary = DEFAULT_VOCABULARY) -> AlignmentResult:
    """Score ``candidate`` against ``reference`` with the alignment DP.

    Tie-breaking prefers matching over missing over redundant so the
    backtrace is deterministic. Sequences are token strings (or anything
    with a ``token`` attribute).
    """
    ref = _tokens(_as_tokens(reference), vocab)
    cand = _tokens(_as_tokens(candidate), vocab)
    if not ref or not cand:
        raise ValueError("sequences must be non-empty")

    nr, nc = len(ref), len(cand)
    ref_cons = [vocab.is_conservative(t) for t in ref]
    cand_cons = [vocab.is_conservative(t) for t in cand]

    S = np.zeros((nr + 1, nc + 1))
    back = np.empty((nr + 1, nc + 1), dtype=object)
    for r in range(1, nr + 1):
        S[r, 0] = S[r - 1, 0] - weights.missing(ref_cons[r - 1])
        back[r, 0] = MISSING
    for c in range(1, nc + 1):
        S[0, c] = S[0, c - 1] - weights.redundant(cand_cons[c - 1])
        back[0, c] = REDUNDANT

    for r in range(1, nr + 1):
        for c in range(1, nc + 1):
            best = S[r - 1, c] - weights.missing(ref_cons[r - 1])
            tag = MISSING
            s_red = S[r, c - 1] - weights.redundant(cand_cons[c - 1])
            if s_red > best:
                best, tag = s_red, REDUNDANT
            if ref[r - 1] == cand[c - 1]:
                s_mat = S[r - 1, c - 1] + weights.s_matching
                if s_mat >= best:
                    best, tag = s_mat, MATCHING
            S[r, c] = best
            back[r, c] = tag

    raw = float(S[nr, nc])
    return AlignmentResult(raw_score=raw, normalized_score=raw / nr,
                           matrix=S, backtrace=back)


def _as_tokens(seq):
    return [getattr(t, "token", t) for t in seq]


def oracle_align(reference, candidate, weights: ScoreWeights = ScoreWeights(),
                 vocab: Vocabulary = DEFAULT_VOCABULARY, max_len: int = 7) -> float:
    """Exhaustive alignment enumeration; test oracle for :func:`align`.

    Every monotone alignment is determined, up to score-equivalent step
    interleavings, by its set of matched position pairs: each unmatched
    reference token is missing and each unmatched candidate token is
    redundant. The oracle therefore enumerates every monotone match set
    explicitly and returns the best total score. Exponential; limited to
    short sequences.
    """
    ref = _tokens(_as_tokens(reference), vocab)
    cand = _tokens(_as_tokens(candidate), vocab)
    if len(ref) > max_len or len(cand) > max_len:
        raise ValueError(f"oracle limited to sequences of length <= {max_len}")
    if not ref or not cand:
        raise ValueError("sequences must be non-empty")

    # score of the empty match set, plus what each matched pair adds
    base = -sum(weights.missing(vocab.is_conservative(t)) for t in ref)
    base -= sum(weights.redundant(vocab.is_conservative(t)) for t in cand)
    gain = [
        [
            weights.s_matching
            + weights.missing(vocab.is_conservative(rt))
            + weights.redundant(vocab.is_conservative(ct))
            if rt == ct else None
            for ct in cand
        ]
        for rt in ref
    ]

    def best_gain(i: int, j: int) -> float:
        # max summed gain over monotone match chains within ref[i:], cand[j:]
        best = 0.0
        for r in range(i, len(ref)):
            row = gain[r]
            for c in range(j, len(cand)):
                g = row[c]
                if g is not None:
                    total = g + best_gain(r + 1, c + 1)
                    if total > best:
                        best = total
        return best

    return base + best_gain(0, 0)


def score_with_alternatives(references, candidate,
                            weights: ScoreWeights = ScoreWeights(),
                            vocab: Vocabulary = DEFAULT_VOCABULARY) -> tuple[float, int]:
    """Best normalized score over all references; ties pick the lowest index."""
    if not references:
        raise ValueError("at least one reference required")
    best_score, best_idx = -np.inf, -1
    for i, ref in enumerate(references):
        score = align(ref, candidate, weights, vocab).normalized_score
        if score > best_score:
            best_score, best_idx = score, i
    return best_score, best_idx


# Near-synonym pairs mirroring how sequence variants with similar meaning
# substitute individual tokens. Symmetric closure is applied at build time.
DEFAULT_SUBSTITUTIONS: dict[str, tuple[str, ...]] = {
    "Slow down": ("Slow down rapidly",),
    "Speed up": ("Speed up rapidly",),
    "Shift slightly to the right": ("Change lane to the right",),
    "Shift slightly to the left": ("Change lane to the left",),
    "Go straight at a constant speed": ("Go straight slowly",),
}


def _symmetric_table(rules: dict, vocab: Vocabulary) -> dict[str, tuple[str, ...]]:
    table: dict[str, list[str]] = {}
    for src, alts in rules.items():
        src = vocab.canonical(src)
        for alt in alts:
            alt = vocab.canonical(alt)
            table.setdefault(src, []).append(alt)
            table.setdefault(alt, []).append(src)
    return {k: tuple(dict.fromkeys(v)) for k, v in table.items()}


def generate_alternatives(reference, rules: dict | None = None,
                          vocab: Vocabulary = DEFAULT_VOCABULARY,
                          limit: int = 64) -> list[tuple[str, ...]]:
    """Expand a reference into same-length variants via per-token substitution.

    Takes the Cartesian product of each position's substitution set (the
    token itself plus its configured near-synonyms), drops the reference
    itself, deduplicates, and caps the output at ``limit``.
    """
    if rules is None:
        rules = DEFAULT_SUBSTITUTIONS
    table = _symmetric_table(rules, vocab)
    ref = tuple(_tokens(_as_tokens(reference), vocab))
    choices = [(t,) + table.get(t, ()) for t in ref]
    out: list[tuple[str, ...]] = []
    seen = {ref}
    for combo in itertools.product(*choices):
        if combo in seen:
            continue
        seen.add(combo)
        out.append(combo)
        if len(out) >= limit:
            break
    return out
