"""Text preprocessing: display cleaning, sentence segmentation, tokenization.

Two cleaning passes serve different consumers. ``clean_for_display`` keeps
human-readable sentences (it only drops bracketed annotations and squeezes
whitespace), while ``clean_for_analysis`` reduces text to lowercase alphabetic
tokens for frequency counting. Sentence segmentation is rule based and uses a
small bundled abbreviation list; both the abbreviation list and the stopword
list are plain-text data files shipped inside the package.
"""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Collection, Iterable, Iterator
from dataclasses import dataclass, field
from functools import cache
from importlib import resources
from pathlib import Path

__all__ = [
    "SentenceRecord",
    "StopwordList",
    "analyze_sentences",
    "clean_for_analysis",
    "clean_for_display",
    "load_bundled_abbreviations",
    "remove_stopwords",
    "segment_sentences",
    "tokenize",
]

_BRACKETED = re.compile(r"\[[^\[\]]*\]")
_WHITESPACE = re.compile(r"\s+")
# \W excludes letters, digits and underscore; adding \d and _ leaves only
# Unicode letters untouched.
_NON_ALPHA = re.compile(r"[\d_\W]+")

_SENTENCE_TERMINATORS = frozenset(".!?")

# The stopword list must at least cover the core English function words;
# anything smaller is almost certainly a truncated or wrong file.
_REQUIRED_STOPWORDS = frozenset(
    {"the", "a", "an", "and", "or", "of", "to", "in", "is", "are"}
)


def _read_data_file(name: str) -> list[str]:
    text = resources.files("cascadesum").joinpath(f"data/{name}").read_text("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


@cache
def _bundled_stopwords() -> frozenset[str]:
    return frozenset(_read_data_file("stopwords.txt"))


@cache
def load_bundled_abbreviations() -> frozenset[str]:
    """Return the bundled sentence-terminal abbreviation list, lowercase."""
    return frozenset(_read_data_file("abbreviations.txt"))


@dataclass(frozen=True)
class StopwordList:
    """Fixed set of lowercase stopwords.

    Must be non-empty and contain the core English function words, so a
    misconfigured override file fails loudly instead of silently changing
    every downstream score.
    """

    words: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", frozenset(self.words))
        if not self.words:
            raise ValueError("stopword list is empty")
        missing = _REQUIRED_STOPWORDS - self.words
        if missing:
            raise ValueError(f"stopword list missing core words: {sorted(missing)}")

    @classmethod
    def bundled(cls) -> "StopwordList":
        return cls(_bundled_stopwords())

    @classmethod
    def from_path(cls, path: str | Path) -> "StopwordList":
        lines = Path(path).read_text("utf-8").splitlines()
        return cls(frozenset(line.strip().lower() for line in lines if line.strip()))

    def __contains__(self, token: object) -> bool:
        return token in self.words

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[str]:
        return iter(self.words)


def clean_for_display(raw: str) -> str:
    """Remove bracketed spans entirely, collapse whitespace, trim."""
    return _WHITESPACE.sub(" ", _BRACKETED.sub("", raw)).strip()


def clean_for_analysis(raw: str) -> str:
    """Lowercase and replace every non-alphabetic run with a single space.

    Replacement (rather than deletion) keeps "it's" from fusing into "its".
    """
    return _NON_ALPHA.sub(" ", raw.lower()).strip()


def _preceding_word(text: str, end: int) -> str:
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:end]


def segment_sentences(
    cleaned_display: str, abbreviations: Collection[str] | None = None
) -> list[str]:
    """Split display text into sentences.

    A sentence ends at '.', '!' or '?' followed by whitespace and an
    uppercase letter, or at end of text. The terminator does not end a
    sentence when the token before it (sans the terminator itself) is in the
    abbreviation list, so "Dr. Smith" stays together. Text without terminal
    punctuation comes back as a single sentence; empty text as none.
    """
    if abbreviations is None:
        abbreviations = load_bundled_abbreviations()
    text = cleaned_display.strip()
    if not text:
        return []
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] in _SENTENCE_TERMINATORS:
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            if j >= n:
                break
            if (
                j > i + 1
                and text[j].isupper()
                and _preceding_word(text, i).lower() not in abbreviations
            ):
                sentences.append(text[start : i + 1])
                start = j
                i = j
                continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def tokenize(sentence: str) -> list[str]:
    """Lowercase alphabetic tokens of a sentence; empty for all-symbol input."""
    return clean_for_analysis(sentence).split()


def remove_stopwords(tokens: Iterable[str], sw: StopwordList) -> list[str]:
    """Order-preserving stopword filter; multiplicity of survivors kept."""
    return [t for t in tokens if t not in sw]


@dataclass(frozen=True)
class SentenceRecord:
    """One segmented sentence with its analysis artifacts.

    ``word_count`` is derived from ``display_text`` (whitespace-split surface
    words, before any stopword removal); the length threshold downstream is
    defined over surface words.
    """

    index: int
    display_text: str
    tokens: tuple[str, ...]
    content_tokens: tuple[str, ...]
    word_count: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "content_tokens", tuple(self.content_tokens))
        if self.index < 0:
            raise ValueError("sentence index must be non-negative")
        words = len(self.display_text.split())
        if words < 1:
            raise ValueError("display_text must contain at least one word")
        if Counter(self.content_tokens) - Counter(self.tokens):
            raise ValueError("content_tokens must be a sub-multiset of tokens")
        object.__setattr__(self, "word_count", words)


def analyze_sentences(
    text: str,
    sw: StopwordList | None = None,
    abbreviations: Collection[str] | None = None,
) -> list[SentenceRecord]:
    """Run the full preprocessing chain over a document.

    Display-clean first, then segment, then per sentence tokenize and filter
    stopwords. All-stopword sentences are kept (they score zero later) so the
    record indices stay contiguous with the segmentation.
    """
    if sw is None:
        sw = StopwordList.bundled()
    display = clean_for_display(text)
    records = []
    for index, sentence in enumerate(segment_sentences(display, abbreviations)):
        tokens = tokenize(sentence)
        records.append(
            SentenceRecord(
                index=index,
                display_text=sentence,
                tokens=tuple(tokens),
                content_tokens=tuple(remove_stopwords(tokens, sw)),
            )
        )
    return records
