"""Time-aligned transcript model plus SRT, WebVTT and plain-text ingestion.

All parsers normalize to the same shape: cues are re-sorted by start time,
indices are reassigned from 0, and styling or cue settings are discarded.
Overlapping cues are allowed (auto-generated captions overlap routinely).
"""

import json
import re
from dataclasses import dataclass

from .errors import CascadesumError
from .jsonutil import canonical_json_bytes


class EncodingError(CascadesumError):
    """Input bytes are not valid UTF-8."""


class MalformedCue(CascadesumError):
    """A subtitle cue block could not be parsed."""


class MissingHeader(CascadesumError):
    """WebVTT input does not begin with the WEBVTT magic line."""


@dataclass(frozen=True)
class TimedSegment:
    """One transcript unit, optionally anchored to source-audio milliseconds."""

    index: int
    text: str
    start_ms: int | None = None
    end_ms: int | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("segment text must be non-empty after trimming")
        for name in ("start_ms", "end_ms"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.start_ms is not None and self.end_ms is not None and self.start_ms > self.end_ms:
            raise ValueError("start_ms must not exceed end_ms")


@dataclass(frozen=True)
class Transcript:
    """Ordered segments from one source, joined by single spaces in full_text()."""

    segments: tuple[TimedSegment, ...]
    source_id: str
    language_tag: str = "en"

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        for i, seg in enumerate(self.segments):
            if seg.index != i:
                raise ValueError(f"segment indices must be contiguous from 0, got {seg.index} at {i}")
        for a, b in zip(self.segments, self.segments[1:]):
            if a.start_ms is not None and b.start_ms is not None and a.start_ms > b.start_ms:
                raise ValueError("segments must be sorted by start_ms")

    def full_text(self) -> str:
        return " ".join(seg.text for seg in self.segments)


# Timestamp grammars.  SRT uses a comma before the milliseconds and WebVTT a
# dot, but both separators are accepted in both formats because real subtitle
# files mix them up.  re.ASCII keeps \d from matching non-Latin digit scripts.
_SRT_TIME = re.compile(r"^(\d+):(\d{1,2}):(\d{1,2})[,.](\d{1,3})$", re.ASCII)
_VTT_TIME = re.compile(r"^(?:(\d+):)?(\d{1,2}):(\d{1,2})[,.](\d{1,3})$", re.ASCII)


def _timestamp_ms(token: str, pattern: re.Pattern) -> int:
    m = pattern.match(token)
    if m is None:
        raise MalformedCue(f"bad timestamp {token!r}")
    groups = m.groups()
    hours = int(groups[0]) if groups[0] is not None else 0
    minutes, seconds = int(groups[1]), int(groups[2])
    millis = int(groups[3].ljust(3, "0"))
    return ((hours * 60 + minutes) * 60 + seconds) * 1000 + millis


def _cue_times(line: str, pattern: re.Pattern) -> tuple[int, int]:
    left, _, right = line.partition("-->")
    if not _:
        raise MalformedCue(f"cue timing line lacks '-->': {line!r}")
    end_tokens = right.split()
    if not end_tokens:
        raise MalformedCue(f"cue timing line lacks an end timestamp: {line!r}")
    # Settings after the end timestamp (WebVTT) or legacy coordinates (SRT)
    # are ignored: only the first token on the right-hand side is the time.
    start = _timestamp_ms(left.strip(), pattern)
    end = _timestamp_ms(end_tokens[0], pattern)
    if start > end:
        raise MalformedCue(f"cue end precedes start: {line!r}")
    return start, end


def _decode_utf8(data: bytes) -> str:
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"input is not valid UTF-8: {exc}") from exc


def _blocks(text: str):
    """Yield groups of consecutive non-blank lines."""
    block: list[str] = []
    for line in text.splitlines():
        if line.strip():
            block.append(line)
        elif block:
            yield block
            block = []
    if block:
        yield block


def _finish(cues: list[tuple[int, int, str]], source_id: str, language_tag: str) -> Transcript:
    cues.sort(key=lambda c: c[0])
    segments = [
        TimedSegment(index=i, text=text, start_ms=start, end_ms=end)
        for i, (start, end, text) in enumerate(cues)
    ]
    return Transcript(segments, source_id=source_id, language_tag=language_tag)


def parse_srt(data: bytes, source_id: str = "srt", language_tag: str = "en") -> Transcript:
    """Parse SubRip bytes into a Transcript.

    File cue numbers are ignored and indices reassigned after sorting by
    start time.  Cues with an empty text payload are dropped.
    """
    text = _decode_utf8(data)
    cues: list[tuple[int, int, str]] = []
    for block in _blocks(text):
        lines = list(block)
        if lines and lines[0].strip().isdigit():
            lines = lines[1:]
        if not lines:
            raise MalformedCue("cue block has a counter but no timing line")
        start, end = _cue_times(lines[0].strip(), _SRT_TIME)
        payload = " ".join(line.strip() for line in lines[1:]).strip()
        if payload:
            cues.append((start, end, payload))
    return _finish(cues, source_id, language_tag)


def parse_vtt(data: bytes, source_id: str = "vtt", language_tag: str = "en") -> Transcript:
    """Parse WebVTT bytes into a Transcript.

    NOTE/STYLE/REGION blocks are skipped, cue identifiers and cue settings
    are ignored.  The first line must begin with "WEBVTT".
    """
    text = _decode_utf8(data)
    lines = text.splitlines()
    if not lines or not lines[0].startswith("WEBVTT"):
        raise MissingHeader("WebVTT input must start with a WEBVTT header line")
    # Drop the header block: everything up to the first blank line.
    body_start = 0
    for i, line in enumerate(lines):
        if not line.strip():
            body_start = i
            break
    else:
        body_start = len(lines)
    cues: list[tuple[int, int, str]] = []
    for block in _blocks("\n".join(lines[body_start:])):
        first = block[0].strip()
        if first.startswith(("NOTE", "STYLE", "REGION")):
            continue
        if "-->" in block[0]:
            timing, payload_lines = block[0], block[1:]
        elif len(block) > 1 and "-->" in block[1]:
            timing, payload_lines = block[1], block[2:]  # block[0] is a cue identifier
        else:
            raise MalformedCue(f"cue block has no timing line: {first!r}")
        start, end = _cue_times(timing.strip(), _VTT_TIME)
        payload = " ".join(line.strip() for line in payload_lines).strip()
        if payload:
            cues.append((start, end, payload))
    return _finish(cues, source_id, language_tag)


def parse_plain(text: str, source_id: str) -> Transcript:
    """Wrap raw text as a single untimed segment; blank input yields no segments."""
    stripped = text.strip()
    if not stripped:
        return Transcript([], source_id=source_id)
    return Transcript([TimedSegment(index=0, text=stripped)], source_id=source_id)


def transcript_to_dict(t: Transcript) -> dict:
    return {
        "source_id": t.source_id,
        "language_tag": t.language_tag,
        "segments": [
            {"index": s.index, "text": s.text, "start_ms": s.start_ms, "end_ms": s.end_ms}
            for s in t.segments
        ],
    }


def serialize_canonical(t: Transcript) -> bytes:
    """Serialize to canonical JSON: sorted keys, compact, UTF-8, null timestamps."""
    return canonical_json_bytes(transcript_to_dict(t))


def deserialize_canonical(data: bytes) -> Transcript:
    """Inverse of serialize_canonical; raises on malformed bytes or schema."""
    text = _decode_utf8(data)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValueError("canonical transcript must be a JSON object")
    try:
        segments = [
            TimedSegment(
                index=entry["index"],
                text=entry["text"],
                start_ms=entry["start_ms"],
                end_ms=entry["end_ms"],
            )
            for entry in obj["segments"]
        ]
        return Transcript(segments, source_id=obj["source_id"], language_tag=obj["language_tag"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"canonical transcript schema violation: {exc}") from exc
