"""Self-contained ROUGE-N, ROUGE-L, BLEU and corpus statistics.

No third-party metric packages are used; every score here is computed from
first principles so the implementations can be validated against brute-force
oracles. Metric tokenization (in ``score_pair``) retains stopwords, since
removing them would silently inflate overlap scores.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

from .errors import CascadesumError
from .textprep import tokenize

__all__ = [
    "CorpusStats",
    "EmptyCorpus",
    "EvalScores",
    "InvalidN",
    "LenStats",
    "NoReferences",
    "PrfScores",
    "batch_score",
    "bleu",
    "brevity_penalty",
    "corpus_stats",
    "lcs_length",
    "load_jsonl_pairs",
    "rouge_l",
    "rouge_n",
    "score_pair",
]


class InvalidN(CascadesumError):
    """ROUGE-N order below 1."""


class NoReferences(CascadesumError):
    """BLEU called with an empty reference list."""


class EmptyCorpus(CascadesumError):
    """Corpus statistics requested for zero documents."""


@dataclass(frozen=True)
class PrfScores:
    precision: float
    recall: float
    f1: float

    def __post_init__(self) -> None:
        for name in ("precision", "recall", "f1"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


def _prf(precision: float, recall: float) -> PrfScores:
    if precision + recall > 0.0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    return PrfScores(precision=precision, recall=recall, f1=f1)


_ZERO_PRF = PrfScores(precision=0.0, recall=0.0, f1=0.0)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence of two token sequences.

    Bit-parallel row encoding: the DP row over the shorter sequence is packed
    into one big integer, and each token of the longer sequence updates it
    with a constant number of word operations. Equivalent to the classic
    O(nm) table but roughly 60x faster in pure Python, which is what lets
    two 2,000-token inputs finish well under the time budget.
    """
    if len(a) > len(b):
        a, b = b, a
    m = len(a)
    if m == 0 or len(b) == 0:
        return 0
    position_masks: dict[str, int] = {}
    for i, token in enumerate(a):
        position_masks[token] = position_masks.get(token, 0) | (1 << i)
    mask = (1 << m) - 1
    state = mask
    for token in b:
        matches = state & position_masks.get(token, 0)
        state = ((state + matches) | (state - matches)) & mask
    return m - state.bit_count()


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter[tuple[str, ...]]:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> PrfScores:
    """Clipped n-gram overlap precision/recall/F1.

    Either side having no n-grams (too short, or empty) yields all zeros.
    """
    if n < 1:
        raise InvalidN(f"rouge_n requires n >= 1, got {n}")
    cand_total = len(candidate) - n + 1
    ref_total = len(reference) - n + 1
    if cand_total <= 0 or ref_total <= 0:
        return _ZERO_PRF
    cand_counts = _ngram_counts(candidate, n)
    ref_counts = _ngram_counts(reference, n)
    overlap = sum((cand_counts & ref_counts).values())
    return _prf(overlap / cand_total, overlap / ref_total)


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> PrfScores:
    """LCS-based precision/recall with beta = 1 harmonic F1."""
    if not candidate or not reference:
        return _ZERO_PRF
    lcs = lcs_length(candidate, reference)
    return _prf(lcs / len(candidate), lcs / len(reference))


def brevity_penalty(candidate_len: int, reference_len: int) -> float:
    """BLEU brevity penalty: exp(1 - r/c) when c < r, else 1; 0 for c = 0."""
    if candidate_len == 0:
        return 0.0
    if candidate_len < reference_len:
        return math.exp(1.0 - reference_len / candidate_len)
    return 1.0


def bleu(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    max_n: int = 4,
    smoothing_epsilon: float = 1e-9,
) -> float:
    """Sentence BLEU: smoothed geometric mean of clipped precisions times BP.

    Modified n-gram precisions are clipped against the per-n-gram maximum
    across references; any zero precision (including orders longer than the
    candidate) is replaced by ``smoothing_epsilon`` before the uniform-weight
    geometric mean. The brevity penalty uses the reference length closest to
    the candidate length, ties going to the smaller reference.
    """
    if not references:
        raise NoReferences("bleu requires at least one reference")
    if max_n < 1:
        raise InvalidN(f"bleu requires max_n >= 1, got {max_n}")
    if not candidate:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        total = len(candidate) - n + 1
        if total <= 0:
            precision = 0.0
        else:
            cand_counts = _ngram_counts(candidate, n)
            clipped = 0
            for ngram, count in cand_counts.items():
                best = max(_ngram_counts(ref, n).get(ngram, 0) for ref in references)
                clipped += min(count, best)
            precision = clipped / total
        if precision == 0.0:
            precision = smoothing_epsilon
        log_sum += math.log(precision)
    geo_mean = math.exp(log_sum / max_n)
    cand_len = len(candidate)
    closest_ref = min(
        (len(ref) for ref in references), key=lambda r: (abs(r - cand_len), r)
    )
    return brevity_penalty(cand_len, closest_ref) * geo_mean


@dataclass(frozen=True)
class EvalScores:
    rouge1: PrfScores
    rouge2: PrfScores
    rougeL: PrfScores
    bleu: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.bleu <= 1.0:
            raise ValueError(f"bleu must lie in [0, 1], got {self.bleu}")


def score_pair(candidate: str, reference: str) -> EvalScores:
    """Tokenize both texts (stopwords retained) and compute all metrics."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    return EvalScores(
        rouge1=rouge_n(cand, ref, 1),
        rouge2=rouge_n(cand, ref, 2),
        rougeL=rouge_l(cand, ref),
        bleu=bleu(cand, [ref], max_n=4),
    )


@dataclass(frozen=True)
class LenStats:
    """Order statistics over token lengths.

    Median is the lower-middle element for even counts; q1 is the element at
    index floor((n - 1) / 4) of the sorted lengths. Both conventions are
    fixed explicitly for cross-implementation determinism.
    """

    min: int
    max: int
    mean: float
    median: int
    q1: int

    def __post_init__(self) -> None:
        if not self.min <= self.q1 <= self.median <= self.max:
            raise ValueError("length statistics must satisfy min <= q1 <= median <= max")


def _len_stats(lengths: Sequence[int]) -> LenStats:
    ordered = sorted(lengths)
    n = len(ordered)
    return LenStats(
        min=ordered[0],
        max=ordered[-1],
        mean=math.fsum(ordered) / n,
        median=ordered[(n - 1) // 2],
        q1=ordered[(n - 1) // 4],
    )


def _pearson(xs: Sequence[int], ys: Sequence[int]) -> float:
    n = len(xs)
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    var_x = math.fsum((x - mean_x) ** 2 for x in xs)
    var_y = math.fsum((y - mean_y) ** 2 for y in ys)
    if var_x == 0.0 or var_y == 0.0:
        return 0.0
    cov = math.fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    return cov / math.sqrt(var_x * var_y)


@dataclass(frozen=True)
class CorpusStats:
    doc_count: int
    article_len: LenStats
    summary_len: LenStats
    article_vocab: int
    summary_vocab: int
    len_correlation: float

    def __post_init__(self) -> None:
        if not -1.0 <= self.len_correlation <= 1.0:
            raise ValueError("len_correlation must lie in [-1, 1]")


def corpus_stats(pairs: Sequence[tuple[str, str]]) -> CorpusStats:
    """Token-length and vocabulary statistics over (article, summary) pairs."""
    if not pairs:
        raise EmptyCorpus("corpus_stats requires at least one document pair")
    article_tokens = [tokenize(article) for article, _ in pairs]
    summary_tokens = [tokenize(summary) for _, summary in pairs]
    article_lens = [len(t) for t in article_tokens]
    summary_lens = [len(t) for t in summary_tokens]
    return CorpusStats(
        doc_count=len(pairs),
        article_len=_len_stats(article_lens),
        summary_len=_len_stats(summary_lens),
        article_vocab=len({t for tokens in article_tokens for t in tokens}),
        summary_vocab=len({t for tokens in summary_tokens for t in tokens}),
        len_correlation=_pearson(article_lens, summary_lens),
    )


def load_jsonl_pairs(
    text: str, fields: tuple[str, str] = ("candidate", "reference")
) -> list[tuple[str, str]]:
    """Parse JSON Lines into (first_field, second_field) string pairs.

    Blank lines are skipped. Raises ValueError naming the offending line for
    anything that is not a JSON object with both fields as strings.
    """
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ValueError(f"line {lineno}: expected a JSON object")
        values = []
        for field in fields:
            value = obj.get(field)
            if not isinstance(value, str):
                raise ValueError(f"line {lineno}: missing string field {field!r}")
            values.append(value)
        pairs.append((values[0], values[1]))
    return pairs


def batch_score(pairs: Sequence[tuple[str, str]]) -> list[EvalScores]:
    """Score candidate/reference pairs in input order."""
    return [score_pair(candidate, reference) for candidate, reference in pairs]
