"""HTTP clients for the speech-to-text and abstractive summarization services.

Both services speak a minimal JSON protocol:

    POST {endpoint_url}/v1/transcribe
        request  {"audio_b64": <base64 WAV>, "sample_rate_hz": int, "language": str}
        response {"transcript": str, "confidence": number, "words": optional list}

    POST {endpoint_url}/v1/summarize
        request  {"text": str, "max_tokens": int}
        response {"summary": str}

Requests are retried on HTTP 429, 5xx and transport failures with
exponential backoff (backoff_base_ms * 2^attempt); any other 4xx is a
permanent ServiceError.  A malformed response body is a ProtocolError and
is never retried.
"""

import base64
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import requests

from .audio import AudioChunk, encode_wav
from .errors import CascadesumError
from .transcripts import TimedSegment, Transcript

REQUEST_TIMEOUT_S = 30.0


class TransportError(CascadesumError):
    """Request could not be completed after exhausting retries."""

    def __init__(self, message: str, chunk_index: int | None = None):
        super().__init__(message)
        self.chunk_index = chunk_index


class ProtocolError(CascadesumError):
    """Service answered with a body that violates the wire protocol."""

    def __init__(self, message: str, chunk_index: int | None = None):
        super().__init__(message)
        self.chunk_index = chunk_index


class ServiceError(CascadesumError):
    """Service rejected the request with a non-retryable 4xx status."""

    def __init__(self, message: str, chunk_index: int | None = None):
        super().__init__(message)
        self.chunk_index = chunk_index


@dataclass(frozen=True)
class SttConfig:
    endpoint_url: str
    language_tag: str = "en-US"
    max_retries: int = 3
    backoff_base_ms: int = 500
    parallelism: int = 1

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass(frozen=True)
class AbstractiveConfig:
    endpoint_url: str
    max_summary_tokens: int = 60
    enabled: bool = True

    def __post_init__(self):
        if self.max_summary_tokens < 5:
            raise ValueError("max_summary_tokens must be >= 5")


def _headers(bearer_token: str | None) -> dict:
    headers = {"Content-Type": "application/json"}
    if bearer_token:
        headers["Authorization"] = f"Bearer {bearer_token}"
    return headers


def _post_json(url: str, payload: dict, *, max_retries: int, backoff_base_ms: int,
               bearer_token: str | None = None) -> dict:
    """POST with retry on 429/5xx/transport failures; return the parsed body."""
    last_failure = "no attempt made"
    for attempt in range(max_retries + 1):
        if attempt:
            time.sleep(backoff_base_ms * 2 ** (attempt - 1) / 1000.0)
        try:
            response = requests.post(url, json=payload, headers=_headers(bearer_token),
                                     timeout=REQUEST_TIMEOUT_S)
        except requests.RequestException as exc:
            last_failure = f"transport failure: {exc}"
            continue
        if response.status_code == 200:
            try:
                body = response.json()
            except ValueError as exc:
                raise ProtocolError(f"{url}: response body is not JSON: {exc}") from exc
            if not isinstance(body, dict):
                raise ProtocolError(f"{url}: response JSON is not an object")
            return body
        if response.status_code == 429 or 500 <= response.status_code < 600:
            last_failure = f"HTTP {response.status_code}"
            continue
        raise ServiceError(f"{url}: HTTP {response.status_code}")
    raise TransportError(f"{url}: giving up after {max_retries} retries ({last_failure})")


def _chunk_payload(chunk: AudioChunk, language_tag: str) -> dict:
    wav = encode_wav(chunk.samples, chunk.sample_rate_hz)
    return {
        "audio_b64": base64.b64encode(wav).decode("ascii"),
        "sample_rate_hz": chunk.sample_rate_hz,
        "language": language_tag,
    }


def _transcribe_one(chunk: AudioChunk, cfg: SttConfig, bearer_token: str | None) -> str:
    body = _post_json(cfg.endpoint_url.rstrip("/") + "/v1/transcribe",
                      _chunk_payload(chunk, cfg.language_tag),
                      max_retries=cfg.max_retries,
                      backoff_base_ms=cfg.backoff_base_ms,
                      bearer_token=bearer_token)
    text = body.get("transcript")
    if not isinstance(text, str):
        raise ProtocolError("transcribe response lacks a string 'transcript' field")
    return text


def _guarded_transcribe(chunk: AudioChunk, cfg: SttConfig, bearer_token: str | None,
                        index: int) -> str:
    try:
        return _transcribe_one(chunk, cfg, bearer_token)
    except (TransportError, ProtocolError, ServiceError) as exc:
        raise type(exc)(f"chunk {index}: {exc}", chunk_index=index) from exc


def transcribe_chunks(chunks: list[AudioChunk], cfg: SttConfig, *,
                      bearer_token: str | None = None, source_id: str = "stt") -> Transcript:
    """Transcribe ordered chunks into a time-aligned Transcript.

    Segment order always equals chunk order, whatever the parallelism.
    Chunks recognized as empty text produce no segment.  A terminal failure
    on any chunk fails the whole call, with the chunk index attached to the
    raised error.
    """
    if cfg.parallelism == 1:
        texts = []
        for i, chunk in enumerate(chunks):
            texts.append(_guarded_transcribe(chunk, cfg, bearer_token, i))
    else:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            futures = [pool.submit(_guarded_transcribe, chunk, cfg, bearer_token, i)
                       for i, chunk in enumerate(chunks)]
            try:
                texts = [f.result() for f in futures]
            except CascadesumError:
                for f in futures:
                    f.cancel()
                raise

    segments = []
    for chunk, text in zip(chunks, texts):
        text = text.strip()
        if text:
            segments.append(TimedSegment(index=len(segments), text=text,
                                         start_ms=chunk.start_ms, end_ms=chunk.end_ms))
    return Transcript(segments, source_id=source_id, language_tag=cfg.language_tag)


def abstractive_fuse(text: str, cfg: AbstractiveConfig, *,
                     bearer_token: str | None = None,
                     max_retries: int = 3, backoff_base_ms: int = 500) -> str:
    """Send text to the abstractive service and return its summary verbatim."""
    if not cfg.enabled:
        raise ValueError("abstractive fusion is disabled in the configuration")
    if not text.strip():
        raise ValueError("abstractive fusion requires non-empty text")
    body = _post_json(cfg.endpoint_url.rstrip("/") + "/v1/summarize",
                      {"text": text, "max_tokens": cfg.max_summary_tokens},
                      max_retries=max_retries, backoff_base_ms=backoff_base_ms,
                      bearer_token=bearer_token)
    summary = body.get("summary")
    if not isinstance(summary, str):
        raise ProtocolError("summarize response lacks a string 'summary' field")
    return summary
