"""Per-token importance for sequence inputs.

Mirrors the image pipeline: preserve one token, mask every other token with
a placeholder the scorer treats as hidden, and read the class score of each
majority-masked sentence. Masking replaces rather than deletes tokens so the
sequence length the scorer sees never changes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scorers import Scorer, ScoringError

__all__ = ["TokenSequence", "partition_tokens", "explain_tokens", "DEFAULT_MASK_TOKEN"]

DEFAULT_MASK_TOKEN = "[MASK]"


@dataclass(frozen=True)
class TokenSequence:
    """An ordered token list plus the scorer's mask placeholder."""

    tokens: tuple[str, ...]
    mask_token: str = DEFAULT_MASK_TOKEN

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("token sequence must be non-empty")
        if any(not t for t in self.tokens):
            raise ValueError("tokens must be non-empty strings")
        if not self.mask_token:
            raise ValueError("mask token must be non-empty")

    def __len__(self) -> int:
        return len(self.tokens)

    def masked_variant(self, keep: int) -> str:
        """The sentence with every token except ``keep`` masked."""
        if not 0 <= keep < len(self.tokens):
            raise ValueError(f"token index {keep} out of range")
        return " ".join(
            tok if i == keep else self.mask_token
            for i, tok in enumerate(self.tokens)
        )


def partition_tokens(text: str, mask_token: str = DEFAULT_MASK_TOKEN) -> TokenSequence:
    """Split text into whitespace-delimited tokens (punctuation stays attached)."""
    tokens = text.split()
    if not tokens:
        raise ValueError("text must contain at least one token")
    return TokenSequence(tuple(tokens), mask_token)


def explain_tokens(seq: TokenSequence, scorer: Scorer, class_id: int,
                   max_in_flight: int = 8) -> list[float]:
    """Importance of each token: the class score with only that token visible."""
    variants = [seq.masked_variant(j) for j in range(len(seq))]
    try:
        vectors = scorer.score_text_batch(variants, max_in_flight)
    except ScoringError as err:
        if err.index is not None:
            err.context["token_index"] = err.index
            err.context["token"] = seq.tokens[err.index]
        raise
    out = []
    for vec in vectors:
        if not 0 <= class_id < len(vec):
            raise ValueError(
                f"class {class_id} out of range for a {len(vec)}-class scorer")
        out.append(float(vec.scores[class_id]))
    return out
