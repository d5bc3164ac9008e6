"""Pipeline orchestration: config validation, the cascade, report emission.

The cascade runs ingest, then for WAV inputs silence chunking and remote
transcription, then preprocessing, frequency scoring and selection, then the
optional abstractive fusion call and optional reference evaluation, and
finally writes a canonical sorted-key JSON report. Everything in the report
except ``timings_ms`` is deterministic for fixed config and inputs.

Evaluation metrics are always computed over the extractive summary text, not
the fused text, so toggling the abstractive stage changes only
``abstractive_summary`` (and timings) in the report.
"""

from __future__ import annotations

import json
import os
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, TypeVar

from . import __version__
from .audio import AudioBuffer, ChunkParams, decode_wav, split_on_silence
from .errors import CascadesumError
from .extractive import (
    NormMode,
    ScoredSentence,
    SelectionParams,
    build_frequency_table,
    score_sentences,
    select_summary,
)
from .gateway import AbstractiveConfig, SttConfig, abstractive_fuse, transcribe_chunks
from .jsonutil import canonical_json_bytes
from .metrics import score_pair
from .textprep import (
    SentenceRecord,
    StopwordList,
    clean_for_display,
    remove_stopwords,
    segment_sentences,
    tokenize,
)
from .transcripts import Transcript, parse_plain, parse_srt, parse_vtt, transcript_to_dict

__all__ = [
    "ConfigError",
    "InputNotFound",
    "PipelineConfig",
    "StageError",
    "run_pipeline",
    "validate_config",
    "with_overrides",
]

TOKEN_ENV_VAR = "CASCADESUM_TOKEN"

INPUT_KINDS = ("wav", "srt", "vtt", "plain")

_T = TypeVar("_T")


class ConfigError(CascadesumError):
    """Configuration rejected; message names the key path and reason."""


class InputNotFound(CascadesumError):
    """A configured input or reference file does not exist."""


class StageError(CascadesumError):
    """A pipeline stage failed; the original error is chained as the cause."""

    def __init__(self, message: str, stage: str):
        super().__init__(message)
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    """Fully resolved pipeline configuration.

    ``echo`` holds the resolved config exactly as it is embedded in reports:
    defaults applied, paths kept as written, optional sections present only
    when configured.
    """

    input_kind: str
    input_path: str
    chunking: ChunkParams
    stt: SttConfig | None
    extraction: SelectionParams
    norm_mode: NormMode
    abstractive: AbstractiveConfig | None
    reference_path: str | None
    output_path: str
    echo: dict[str, Any]


def _reject_unknown(section: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(f"unknown config key: {where}")


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{key}: expected an object")
    return value


def _string(section: dict, key: str, path: str, default: str | None = None) -> str:
    value = section.get(key, default)
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{path}.{key}: expected a non-empty string")
    return value


def _integer(section: dict, key: str, path: str, default: int) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    return value


def _number(section: dict, key: str, path: str, default: float) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    return float(value)


def _boolean(section: dict, key: str, path: str, default: bool) -> bool:
    value = section.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key}: expected true or false")
    return value


def _build(path: str, factory: Callable[[], _T]) -> _T:
    # Domain types validate their own invariants with ValueError; surface
    # those as ConfigError so the exit-code contract holds.
    try:
        return factory()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def validate_config(raw: bytes | str) -> PipelineConfig:
    """Parse and validate a JSON config, applying documented defaults.

    Unknown keys anywhere are rejected with their key path. ``stt`` is
    required exactly when the input kind is ``wav``.
    """
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"config is not valid UTF-8: {exc}") from exc
    try:
        parsed = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(parsed, dict):
        raise ConfigError("config root: expected an object")
    _reject_unknown(
        parsed,
        {"input", "chunking", "stt", "extraction", "abstractive", "evaluation",
         "output_path"},
        "",
    )

    input_section = parsed.get("input")
    if not isinstance(input_section, dict):
        raise ConfigError("input: required object with kind and path")
    _reject_unknown(input_section, {"kind", "path"}, "input")
    kind = _string(input_section, "kind", "input")
    if kind not in INPUT_KINDS:
        raise ConfigError(f"input.kind: expected one of {list(INPUT_KINDS)}, got {kind!r}")
    input_path = _string(input_section, "path", "input")

    chunking_section = _section(parsed, "chunking")
    _reject_unknown(
        chunking_section,
        {"silence_threshold_dbfs", "min_silence_ms", "min_chunk_ms", "pad_ms", "frame_ms"},
        "chunking",
    )
    chunking = _build("chunking", lambda: ChunkParams(
        silence_threshold_dbfs=_number(
            chunking_section, "silence_threshold_dbfs", "chunking", -40.0),
        min_silence_ms=_integer(chunking_section, "min_silence_ms", "chunking", 500),
        min_chunk_ms=_integer(chunking_section, "min_chunk_ms", "chunking", 300),
        pad_ms=_integer(chunking_section, "pad_ms", "chunking", 100),
        frame_ms=_integer(chunking_section, "frame_ms", "chunking", 20),
    ))

    stt: SttConfig | None = None
    if "stt" in parsed:
        stt_section = _section(parsed, "stt")
        _reject_unknown(
            stt_section,
            {"endpoint_url", "language_tag", "max_retries", "backoff_base_ms",
             "parallelism"},
            "stt",
        )
        stt = _build("stt", lambda: SttConfig(
            endpoint_url=_string(stt_section, "endpoint_url", "stt"),
            language_tag=_string(stt_section, "language_tag", "stt", "en-US"),
            max_retries=_integer(stt_section, "max_retries", "stt", 3),
            backoff_base_ms=_integer(stt_section, "backoff_base_ms", "stt", 500),
            parallelism=_integer(stt_section, "parallelism", "stt", 1),
        ))
    if kind == "wav" and stt is None:
        raise ConfigError("stt: required when input.kind is \"wav\"")

    extraction_section = _section(parsed, "extraction")
    _reject_unknown(
        extraction_section,
        {"max_sentence_words", "budget_sentences", "mmr_lambda", "norm_mode"},
        "extraction",
    )
    extraction = _build("extraction", lambda: SelectionParams(
        max_sentence_words=_integer(extraction_section, "max_sentence_words",
                                    "extraction", 30),
        budget_sentences=_integer(extraction_section, "budget_sentences",
                                  "extraction", 3),
        mmr_lambda=_number(extraction_section, "mmr_lambda", "extraction", 0.7),
    ))
    norm_value = _string(extraction_section, "norm_mode", "extraction", NormMode.MAX.value)
    try:
        norm_mode = NormMode(norm_value)
    except ValueError:
        raise ConfigError(
            f"extraction.norm_mode: expected one of "
            f"{[m.value for m in NormMode]}, got {norm_value!r}"
        ) from None

    abstractive: AbstractiveConfig | None = None
    if "abstractive" in parsed:
        abstractive_section = _section(parsed, "abstractive")
        _reject_unknown(
            abstractive_section,
            {"endpoint_url", "max_summary_tokens", "enabled"},
            "abstractive",
        )
        enabled = _boolean(abstractive_section, "enabled", "abstractive", True)
        if enabled:
            endpoint = _string(abstractive_section, "endpoint_url", "abstractive")
        else:
            endpoint = str(abstractive_section.get("endpoint_url", ""))
        abstractive = _build("abstractive", lambda: AbstractiveConfig(
            endpoint_url=endpoint,
            max_summary_tokens=_integer(abstractive_section, "max_summary_tokens",
                                        "abstractive", 60),
            enabled=enabled,
        ))

    reference_path: str | None = None
    if "evaluation" in parsed:
        evaluation_section = _section(parsed, "evaluation")
        _reject_unknown(evaluation_section, {"reference_path"}, "evaluation")
        reference_path = _string(evaluation_section, "reference_path", "evaluation")

    output_path = parsed.get("output_path")
    if not isinstance(output_path, str) or not output_path:
        raise ConfigError("output_path: required non-empty string")

    echo: dict[str, Any] = {
        "input": {"kind": kind, "path": input_path},
        "chunking": asdict(chunking),
        "extraction": {
            "max_sentence_words": extraction.max_sentence_words,
            "budget_sentences": extraction.budget_sentences,
            "mmr_lambda": extraction.mmr_lambda,
            "norm_mode": norm_mode.value,
        },
        "output_path": output_path,
    }
    if stt is not None:
        echo["stt"] = asdict(stt)
    if abstractive is not None:
        echo["abstractive"] = asdict(abstractive)
    if reference_path is not None:
        echo["evaluation"] = {"reference_path": reference_path}

    return PipelineConfig(
        input_kind=kind,
        input_path=input_path,
        chunking=chunking,
        stt=stt,
        extraction=extraction,
        norm_mode=norm_mode,
        abstractive=abstractive,
        reference_path=reference_path,
        output_path=output_path,
        echo=echo,
    )


def with_overrides(
    cfg: PipelineConfig,
    *,
    input_path: str | None = None,
    output_path: str | None = None,
) -> PipelineConfig:
    """Apply CLI path overrides; the config echo follows the actual paths."""
    if input_path is None and output_path is None:
        return cfg
    echo = {**cfg.echo, "input": dict(cfg.echo["input"])}
    if input_path is not None:
        echo["input"]["path"] = input_path
    if output_path is not None:
        echo["output_path"] = output_path
    return replace(
        cfg,
        input_path=input_path if input_path is not None else cfg.input_path,
        output_path=output_path if output_path is not None else cfg.output_path,
        echo=echo,
    )


def _ingest(cfg: PipelineConfig) -> Transcript | AudioBuffer:
    path = Path(cfg.input_path)
    if cfg.input_kind == "wav":
        return decode_wav(path.read_bytes())
    if cfg.input_kind == "srt":
        return parse_srt(path.read_bytes(), source_id=path.name)
    if cfg.input_kind == "vtt":
        return parse_vtt(path.read_bytes(), source_id=path.name)
    return parse_plain(path.read_text("utf-8"), source_id=path.name)


@dataclass(frozen=True)
class _AnalyzedSentence:
    record: SentenceRecord
    char_start: int
    char_end: int


def _analyze_transcript(
    transcript: Transcript, sw: StopwordList
) -> tuple[list[_AnalyzedSentence], list[tuple[int, int, int | None, int | None]]]:
    """Display-clean per segment, segment into sentences, tokenize.

    Cleaning happens per transcript segment (bracketed annotations never span
    caption cues) so each segment's character span inside the joined display
    document is known; sentence spans then map back to segment timestamps.
    Returns the analyzed sentences and the segment character spans with their
    millisecond offsets.
    """
    parts: list[str] = []
    spans: list[tuple[int, int, int | None, int | None]] = []
    pos = 0
    for segment in transcript.segments:
        cleaned = clean_for_display(segment.text)
        if not cleaned:
            continue
        if parts:
            pos += 1
        parts.append(cleaned)
        spans.append((pos, pos + len(cleaned), segment.start_ms, segment.end_ms))
        pos += len(cleaned)
    document = " ".join(parts)

    analyzed: list[_AnalyzedSentence] = []
    cursor = 0
    for index, sentence in enumerate(segment_sentences(document)):
        start = document.index(sentence, cursor)
        cursor = start + len(sentence)
        tokens = tokenize(sentence)
        record = SentenceRecord(
            index=index,
            display_text=sentence,
            tokens=tuple(tokens),
            content_tokens=tuple(remove_stopwords(tokens, sw)),
        )
        analyzed.append(_AnalyzedSentence(record, start, cursor))
    return analyzed, spans


def _project_selection(
    selected: tuple[ScoredSentence, ...],
    analyzed: list[_AnalyzedSentence],
    spans: list[tuple[int, int, int | None, int | None]],
) -> list[dict[str, Any]]:
    by_index = {a.record.index: a for a in analyzed}
    projection = []
    for scored in selected:
        analyzed_sentence = by_index[scored.record.index]
        entry: dict[str, Any] = {
            "index": scored.record.index,
            "text": scored.record.display_text,
            "score": scored.score,
        }
        starts = []
        ends = []
        for span_start, span_end, start_ms, end_ms in spans:
            overlaps = (span_start < analyzed_sentence.char_end
                        and analyzed_sentence.char_start < span_end)
            if overlaps:
                if start_ms is not None:
                    starts.append(start_ms)
                if end_ms is not None:
                    ends.append(end_ms)
        if starts:
            entry["start_ms"] = min(starts)
        if ends:
            entry["end_ms"] = max(ends)
        projection.append(entry)
    return projection


def run_pipeline(
    cfg: PipelineConfig,
    *,
    bearer_token: str | None = None,
    disable_abstractive: bool = False,
) -> dict[str, Any]:
    """Run the cascade and write the canonical report to cfg.output_path.

    Returns the report as a dict. Raises InputNotFound before any stage runs
    if the input or reference file is missing; stage failures are raised as
    StageError with the stage name, chaining the original error.

    ``disable_abstractive`` is a runtime switch (the CLI's --no-abstractive):
    it skips the fusion call without touching the config echo, so the rest of
    the report is byte-identical to an enabled run.
    """
    if not Path(cfg.input_path).is_file():
        raise InputNotFound(f"input file not found: {cfg.input_path}")
    if cfg.reference_path is not None and not Path(cfg.reference_path).is_file():
        raise InputNotFound(f"reference file not found: {cfg.reference_path}")
    if bearer_token is None:
        bearer_token = os.environ.get(TOKEN_ENV_VAR)

    timings: dict[str, float] = {}

    def run_stage(name: str, fn: Callable[[], _T]) -> _T:
        started = time.perf_counter()
        try:
            result = fn()
        except (CascadesumError, OSError) as exc:
            raise StageError(f"{name}: {exc}", stage=name) from exc
        timings[name] = (time.perf_counter() - started) * 1000.0
        return result

    ingested = run_stage("ingest", lambda: _ingest(cfg))
    if cfg.input_kind == "wav":
        chunks = run_stage("chunk", lambda: split_on_silence(ingested, cfg.chunking))
        transcript = run_stage("transcribe", lambda: transcribe_chunks(
            chunks, cfg.stt, bearer_token=bearer_token,
            source_id=Path(cfg.input_path).name))
    else:
        transcript = ingested

    stopwords = StopwordList.bundled()
    analyzed, spans = run_stage(
        "preprocess", lambda: _analyze_transcript(transcript, stopwords))
    records = [a.record for a in analyzed]
    table = run_stage(
        "frequency", lambda: build_frequency_table(records, cfg.norm_mode))
    scored = run_stage("score", lambda: score_sentences(
        records, table, cfg.extraction.max_sentence_words))
    summary = run_stage("select", lambda: select_summary(scored, cfg.extraction))
    extractive_text = " ".join(s.record.display_text for s in summary.selected)

    report: dict[str, Any] = {
        "tool_version": __version__,
        "config_echo": cfg.echo,
        "transcript": transcript_to_dict(transcript),
        "sentence_count": len(records),
        "extractive": _project_selection(summary.selected, analyzed, spans),
    }

    fuse_enabled = (cfg.abstractive is not None and cfg.abstractive.enabled
                    and not disable_abstractive)
    if fuse_enabled and extractive_text:
        report["abstractive_summary"] = run_stage(
            "abstractive", lambda: abstractive_fuse(
                extractive_text, cfg.abstractive, bearer_token=bearer_token))

    if cfg.reference_path is not None:
        metrics = run_stage("evaluate", lambda: score_pair(
            extractive_text, Path(cfg.reference_path).read_text("utf-8")))
        report["metrics"] = asdict(metrics)

    report["timings_ms"] = timings
    try:
        Path(cfg.output_path).write_bytes(canonical_json_bytes(report) + b"\n")
    except OSError as exc:
        raise StageError(f"serialize: {exc}", stage="serialize") from exc
    return report
