"""Frequency-based extractive summarization.

Builds a term-weight table over content tokens (max-frequency or L2
normalization), scores sentences as the sum of their content-token weights,
screens out sentences longer than a surface-word threshold, and greedily
selects a fixed budget of sentences with a maximal-marginal-relevance
redundancy penalty (Jaccard similarity over content-token sets).
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum

from .textprep import SentenceRecord

__all__ = [
    "ExtractiveSummary",
    "FrequencyTable",
    "NormMode",
    "ScoredSentence",
    "SelectionParams",
    "build_frequency_table",
    "jaccard",
    "score_sentences",
    "select_summary",
]


class NormMode(str, Enum):
    """Term-frequency normalization: divide by max count, or by L2 norm."""

    MAX = "max"
    L2 = "l2"


@dataclass(frozen=True)
class FrequencyTable:
    """Normalized term weights plus the raw counts they came from."""

    weights: Mapping[str, float]
    mode: NormMode
    raw_counts: Mapping[str, int]

    def __post_init__(self) -> None:
        if self.weights.keys() != self.raw_counts.keys():
            raise ValueError("weights and raw_counts must cover the same tokens")
        if not self.weights:
            return
        values = self.weights.values()
        if self.mode is NormMode.MAX:
            if not all(0.0 < w <= 1.0 for w in values):
                raise ValueError("MaxNorm weights must lie in (0, 1]")
            if max(values) != 1.0:
                raise ValueError("MaxNorm requires at least one weight of 1.0")
        else:
            if abs(math.fsum(w * w for w in values) - 1.0) > 1e-9:
                raise ValueError("L2Norm weights must have unit squared sum")


def build_frequency_table(
    sentences: Sequence[SentenceRecord], mode: NormMode = NormMode.MAX
) -> FrequencyTable:
    """Count content tokens across all sentences and normalize.

    MaxNorm divides each count by the maximum count; L2Norm divides by the
    Euclidean norm of the count vector. No minimum-frequency cutoff is
    applied: every content token enters the table.
    """
    counts: Counter[str] = Counter()
    for record in sentences:
        counts.update(record.content_tokens)
    if not counts:
        return FrequencyTable(weights={}, mode=mode, raw_counts={})
    if mode is NormMode.MAX:
        denom = float(max(counts.values()))
    else:
        denom = math.sqrt(math.fsum(c * c for c in counts.values()))
    weights = {token: count / denom for token, count in counts.items()}
    return FrequencyTable(weights=weights, mode=mode, raw_counts=dict(counts))


@dataclass(frozen=True)
class ScoredSentence:
    record: SentenceRecord
    score: float

    def __post_init__(self) -> None:
        if self.score < 0.0:
            raise ValueError("sentence score must be non-negative")


def score_sentences(
    sentences: Sequence[SentenceRecord],
    table: FrequencyTable,
    max_words: int,
) -> list[ScoredSentence]:
    """Score sentences by summed content-token weight, with multiplicity.

    Sentences whose surface word count exceeds ``max_words`` are excluded
    from candidacy entirely. All-stopword sentences stay in at score 0.0 so
    degenerate documents still yield a summary.
    """
    scored = []
    for record in sentences:
        if record.word_count > max_words:
            continue
        score = math.fsum(table.weights.get(t, 0.0) for t in record.content_tokens)
        scored.append(ScoredSentence(record=record, score=score))
    return scored


@dataclass(frozen=True)
class SelectionParams:
    max_sentence_words: int = 30
    budget_sentences: int = 3
    mmr_lambda: float = 0.7

    def __post_init__(self) -> None:
        if self.max_sentence_words < 1:
            raise ValueError("max_sentence_words must be at least 1")
        if self.budget_sentences < 1:
            raise ValueError("budget_sentences must be at least 1")
        if not 0.0 <= self.mmr_lambda <= 1.0:
            raise ValueError("mmr_lambda must lie in [0, 1]")


@dataclass(frozen=True)
class ExtractiveSummary:
    """Selected sentences in source order, plus their summed raw score."""

    selected: tuple[ScoredSentence, ...]
    total_score: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "selected", tuple(self.selected))
        indices = [s.record.index for s in self.selected]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("selected sentence indices must be strictly increasing")


def jaccard(a: set[str], b: set[str]) -> float:
    """Jaccard similarity of two token sets; 0.0 when the union is empty."""
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def select_summary(
    scored: Sequence[ScoredSentence], p: SelectionParams
) -> ExtractiveSummary:
    """Greedy MMR selection over scored sentences.

    Each round picks the candidate maximizing
    ``mmr_lambda * score - (1 - mmr_lambda) * max_redundancy`` where the
    redundancy is the highest Jaccard similarity between the candidate's
    content-token set and any already-selected sentence's set. Value ties go
    to the lower original index. Selection stops at the budget or when the
    candidates run out; output is re-sorted into source order.
    """
    candidates = list(scored)
    picked: list[ScoredSentence] = []
    picked_sets: list[set[str]] = []
    while candidates and len(picked) < p.budget_sentences:
        best: ScoredSentence | None = None
        best_value = -math.inf
        for cand in candidates:
            cand_set = set(cand.record.content_tokens)
            redundancy = max(
                (jaccard(cand_set, chosen) for chosen in picked_sets), default=0.0
            )
            value = p.mmr_lambda * cand.score - (1.0 - p.mmr_lambda) * redundancy
            if (
                best is None
                or value > best_value
                or (value == best_value and cand.record.index < best.record.index)
            ):
                best = cand
                best_value = value
        assert best is not None
        picked.append(best)
        picked_sets.append(set(best.record.content_tokens))
        candidates.remove(best)
    picked.sort(key=lambda s: s.record.index)
    return ExtractiveSummary(
        selected=tuple(picked), total_score=math.fsum(s.score for s in picked)
    )
