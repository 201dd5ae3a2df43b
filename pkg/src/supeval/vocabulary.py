"""Meta-action vocabulary: the closed token set and the conservative subset.

The vocabulary is configurable; the default is the 16-token set used
throughout the rest of the library. Token lookup is case- and
whitespace-insensitive, but canonical spellings are preserved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

DEFAULT_TOKENS = (
    "Speed up",
    "Slow down",
    "Speed up rapidly",
    "Slow down rapidly",
    "Go straight slowly",
    "Go straight at a constant speed",
    "Turn left",
    "Turn right",
    "Change lane to the left",
    "Change lane to the right",
    "Shift slightly to the left",
    "Shift slightly to the right",
    "Stop",
    "Wait",
    "Turn around",
    "Reverse",
)

# Attitude-only tokens: omitting or adding one changes driving style,
# not the maneuver itself, so mismatches cost half penalty.
DEFAULT_CONSERVATIVE = ("Slow down", "Wait", "Go straight slowly")


class UnknownTokenError(ValueError):
    """Raised when a meta-action token is not in the vocabulary."""

    def __init__(self, token: str):
        super().__init__(f"unknown meta-action token: {token!r}")
        self.token = token


def _norm(token: str) -> str:
    return re.sub(r"\s+", " ", token.strip()).lower()


@dataclass(frozen=True)
class Vocabulary:
    """Closed meta-action token set with a conservative subset."""

    tokens: tuple[str, ...] = DEFAULT_TOKENS
    conservative: frozenset[str] = field(
        default_factory=lambda: frozenset(DEFAULT_CONSERVATIVE)
    )

    def __post_init__(self):
        lut = {_norm(t): t for t in self.tokens}
        object.__setattr__(self, "_lut", lut)
        object.__setattr__(self, "_exact", frozenset(self.tokens))
        cons = frozenset(self.canonical(t) for t in self.conservative)
        object.__setattr__(self, "conservative", cons)

    def canonical(self, token: str) -> str:
        """Map a token to its canonical spelling, or raise UnknownTokenError."""
        if token in self._exact:  # fast path, skips normalization
            return token
        try:
            return self._lut[_norm(token)]
        except KeyError:
            raise UnknownTokenError(token) from None

    def __contains__(self, token: str) -> bool:
        return _norm(token) in self._lut

    def is_conservative(self, token: str) -> bool:
        return self.canonical(token) in self.conservative


DEFAULT_VOCABULARY = Vocabulary()


def is_conservative(token: str, vocab: Vocabulary = DEFAULT_VOCABULARY) -> bool:
    """True iff ``token`` belongs to the configured conservative set."""
    return vocab.is_conservative(token)
