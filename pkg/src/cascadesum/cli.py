"""Command-line interface.

Exit codes: 0 on success, 1 when a pipeline stage or metric computation
fails, 2 for usage, configuration, or missing-input errors.
"""

from __future__ import annotations

import functools
import os
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any

import click

from . import __version__
from .audio import decode_wav, split_on_silence
from .errors import CascadesumError
from .extractive import (
    NormMode,
    SelectionParams,
    build_frequency_table,
    score_sentences,
    select_summary,
)
from .gateway import transcribe_chunks
from .jsonutil import canonical_json_bytes
from .metrics import batch_score, corpus_stats, load_jsonl_pairs, score_pair
from .pipeline import (
    TOKEN_ENV_VAR,
    ConfigError,
    InputNotFound,
    PipelineConfig,
    _analyze_transcript,
    _project_selection,
    run_pipeline,
    validate_config,
    with_overrides,
)
from .textprep import StopwordList
from .transcripts import parse_plain, parse_srt, parse_vtt, serialize_canonical

__all__ = ["main"]


def _cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except (ConfigError, InputNotFound) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except CascadesumError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _load_config(config_path: str) -> PipelineConfig:
    try:
        raw = Path(config_path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
    return validate_config(raw)


def _emit(obj: Any, output_path: str | None) -> None:
    data = canonical_json_bytes(obj) + b"\n"
    if output_path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(output_path).write_bytes(data)


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputNotFound(f"{what} file not found: {path}")
    return p


@click.group()
@click.version_option(version=__version__, prog_name="cascadesum")
def main() -> None:
    """Speech-to-summary cascade: ingest, transcribe, extract, fuse, score."""


@main.command()
@click.option("--config", "config_path", required=True, help="Pipeline config JSON.")
@click.option("--input", "input_path", default=None, help="Override input path.")
@click.option("--output", "output_path", default=None, help="Override report path.")
@click.option("--no-abstractive", is_flag=True, help="Skip the abstractive stage.")
@_cli_errors
def run(config_path: str, input_path: str | None, output_path: str | None,
        no_abstractive: bool) -> None:
    """Run the full cascade and write the report."""
    cfg = _load_config(config_path)
    cfg = with_overrides(cfg, input_path=input_path, output_path=output_path)
    run_pipeline(cfg, disable_abstractive=no_abstractive)


def _parse_by_suffix(path: Path):
    suffix = path.suffix.lower()
    if suffix == ".srt":
        return parse_srt(path.read_bytes(), source_id=path.name)
    if suffix == ".vtt":
        return parse_vtt(path.read_bytes(), source_id=path.name)
    return parse_plain(path.read_text("utf-8"), source_id=path.name)


@main.command()
@click.option("--input", "input_path", required=True,
              help="Text, .srt, or .vtt file to summarize.")
@click.option("--config", "config_path", default=None,
              help="Optional pipeline config; only its extraction section applies.")
@click.option("--output", "output_path", default=None,
              help="Write JSON here instead of stdout.")
@_cli_errors
def summarize(input_path: str, config_path: str | None,
              output_path: str | None) -> None:
    """Extractive summary of a caption or plain-text file (no remote calls)."""
    if config_path is not None:
        cfg = _load_config(config_path)
        selection, norm_mode = cfg.extraction, cfg.norm_mode
    else:
        selection, norm_mode = SelectionParams(), NormMode.MAX
    source = _require_file(input_path, "input")
    transcript = _parse_by_suffix(source)
    analyzed, spans = _analyze_transcript(transcript, StopwordList.bundled())
    records = [a.record for a in analyzed]
    table = build_frequency_table(records, norm_mode)
    scored = score_sentences(records, table, selection.max_sentence_words)
    summary = select_summary(scored, selection)
    _emit(
        {
            "extractive": _project_selection(summary.selected, analyzed, spans),
            "sentence_count": len(records),
        },
        output_path,
    )


@main.command()
@click.option("--config", "config_path", required=True,
              help="Pipeline config JSON with chunking and stt sections.")
@click.option("--input", "input_path", default=None, help="Override WAV path.")
@click.option("--output", "output_path", default=None,
              help="Write transcript JSON here instead of stdout.")
@_cli_errors
def transcribe(config_path: str, input_path: str | None,
               output_path: str | None) -> None:
    """Chunk a WAV file on silence and transcribe it to canonical JSON."""
    cfg = _load_config(config_path)
    cfg = with_overrides(cfg, input_path=input_path)
    if cfg.input_kind != "wav":
        raise ConfigError('transcribe requires input.kind "wav"')
    source = _require_file(cfg.input_path, "input")
    buffer = decode_wav(source.read_bytes())
    chunks = split_on_silence(buffer, cfg.chunking)
    transcript = transcribe_chunks(
        chunks, cfg.stt, bearer_token=os.environ.get(TOKEN_ENV_VAR),
        source_id=source.name)
    data = serialize_canonical(transcript) + b"\n"
    if output_path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(output_path).write_bytes(data)


@main.command()
@click.option("--candidate", "candidate_path", default=None,
              help="Candidate summary text file.")
@click.option("--reference", "reference_path", default=None,
              help="Gold reference text file.")
@click.option("--batch", "batch_path", default=None,
              help='JSON Lines file of {"candidate", "reference"} objects.')
@click.option("--output", "output_path", default=None,
              help="Write JSON here instead of stdout.")
@_cli_errors
def evaluate(candidate_path: str | None, reference_path: str | None,
             batch_path: str | None, output_path: str | None) -> None:
    """ROUGE-1/2/L and BLEU for one pair or a JSONL batch."""
    if batch_path is not None:
        if candidate_path is not None or reference_path is not None:
            raise click.UsageError("--batch excludes --candidate/--reference")
        text = _require_file(batch_path, "batch").read_text("utf-8")
        try:
            pairs = load_jsonl_pairs(text)
        except ValueError as exc:
            raise CascadesumError(f"batch file: {exc}") from exc
        _emit([asdict(s) for s in batch_score(pairs)], output_path)
        return
    if candidate_path is None or reference_path is None:
        raise click.UsageError("provide --candidate and --reference, or --batch")
    candidate = _require_file(candidate_path, "candidate").read_text("utf-8")
    reference = _require_file(reference_path, "reference").read_text("utf-8")
    _emit(asdict(score_pair(candidate, reference)), output_path)


@main.command()
@click.option("--input", "input_path", required=True,
              help='JSON Lines file of {"article", "summary"} objects.')
@click.option("--output", "output_path", default=None,
              help="Write JSON here instead of stdout.")
@_cli_errors
def stats(input_path: str, output_path: str | None) -> None:
    """Corpus length and vocabulary statistics over article/summary pairs."""
    text = _require_file(input_path, "input").read_text("utf-8")
    try:
        pairs = load_jsonl_pairs(text, fields=("article", "summary"))
    except ValueError as exc:
        raise CascadesumError(f"stats file: {exc}") from exc
    _emit(asdict(corpus_stats(pairs)), output_path)


if __name__ == "__main__":
    main()
