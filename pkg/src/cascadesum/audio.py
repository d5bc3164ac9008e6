"""PCM WAV decoding and energy-threshold silence segmentation.

Only the 16-bit integer PCM subset of RIFF/WAVE is accepted (mono or
stereo).  Chunking classifies fixed-size frames as silent below a dBFS
threshold, merges voiced runs across short silences, pads the result and
drops fragments, producing disjoint, ordered chunks ready for chunk-wise
transcription.
"""

import io
import math
import struct
import wave
from dataclasses import dataclass

import numpy as np

from .errors import CascadesumError


class NotRiff(CascadesumError):
    """Input is not a RIFF/WAVE container."""


class UnsupportedEncoding(CascadesumError):
    """WAV payload is not 16-bit integer PCM in 1 or 2 channels."""


class TruncatedData(CascadesumError):
    """Container declares more bytes than the input provides."""


class EmptyFrame(CascadesumError):
    """A level measurement was requested for a zero-length window."""


MIN_SAMPLE_RATE_HZ = 8000
MAX_SAMPLE_RATE_HZ = 48000


@dataclass(eq=False)
class AudioBuffer:
    """Normalized mono samples in [-1.0, 1.0] at a fixed rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        if not MIN_SAMPLE_RATE_HZ <= self.sample_rate_hz <= MAX_SAMPLE_RATE_HZ:
            raise ValueError(f"sample_rate_hz {self.sample_rate_hz} outside "
                             f"[{MIN_SAMPLE_RATE_HZ}, {MAX_SAMPLE_RATE_HZ}]")
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size and (np.max(self.samples) > 1.0 or np.min(self.samples) < -1.0):
            raise ValueError("samples must lie within [-1.0, 1.0]")

    @property
    def duration_ms(self) -> int:
        """Buffer duration, rounded up so every sample lies within it."""
        return -(-self.samples.size * 1000 // self.sample_rate_hz)


@dataclass(eq=False)
class AudioChunk:
    """A voiced slice of a source buffer, with millisecond source offsets."""

    samples: np.ndarray
    sample_rate_hz: int
    start_ms: int
    end_ms: int

    def __post_init__(self):
        if self.start_ms >= self.end_ms:
            raise ValueError("chunk start_ms must precede end_ms")

    @property
    def duration_ms(self) -> float:
        return self.samples.size * 1000 / self.sample_rate_hz


@dataclass(frozen=True)
class ChunkParams:
    silence_threshold_dbfs: float = -40.0
    min_silence_ms: int = 500
    min_chunk_ms: int = 300
    pad_ms: int = 100
    frame_ms: int = 20

    def __post_init__(self):
        if self.silence_threshold_dbfs > 0:
            raise ValueError("silence_threshold_dbfs must be <= 0")
        for name in ("min_silence_ms", "min_chunk_ms", "pad_ms", "frame_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode 16-bit PCM WAV bytes to a mono AudioBuffer.

    Stereo input is downmixed by the per-frame arithmetic mean.  Integer
    samples are scaled by 1/32768 into [-1, 1).
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotRiff("missing RIFF/WAVE magic")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise TruncatedData(f"chunk {chunk_id!r} declares {size} bytes, "
                                f"{len(body)} available")
        if chunk_id == b"fmt ":
            fmt = body
        elif chunk_id == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise TruncatedData("missing fmt or data chunk")
    if len(fmt) < 16:
        raise TruncatedData("fmt chunk shorter than 16 bytes")

    audio_format, channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if audio_format != 1:
        raise UnsupportedEncoding(f"format code {audio_format} is not integer PCM")
    if bits != 16:
        raise UnsupportedEncoding(f"{bits}-bit samples are not supported, only 16-bit")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels not supported, only mono or stereo")
    if not MIN_SAMPLE_RATE_HZ <= sample_rate <= MAX_SAMPLE_RATE_HZ:
        raise UnsupportedEncoding(f"sample rate {sample_rate} outside "
                                  f"[{MIN_SAMPLE_RATE_HZ}, {MAX_SAMPLE_RATE_HZ}]")

    frame_bytes = 2 * channels
    if len(payload) % frame_bytes:
        raise TruncatedData("data chunk ends mid-frame")

    samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    if channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1)
    return AudioBuffer(samples=samples, sample_rate_hz=sample_rate)


def encode_wav(samples: np.ndarray, sample_rate_hz: int) -> bytes:
    """Encode mono float samples as a 16-bit PCM WAV byte string."""
    ints = np.clip(np.rint(np.asarray(samples, dtype=np.float64) * 32768.0), -32768, 32767)
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate_hz)
        wav.writeframes(ints.astype("<i2").tobytes())
    return buf.getvalue()


def frame_dbfs(frame: np.ndarray) -> float:
    """RMS level of a sample window in dBFS; -inf for an all-zero window."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.size == 0:
        raise EmptyFrame("cannot measure an empty frame")
    rms = math.sqrt(float(np.mean(frame * frame)))
    if rms == 0.0:
        return float("-inf")
    return 20.0 * math.log10(rms)


def _voiced_mask(samples: np.ndarray, frame_len: int, threshold_dbfs: float) -> np.ndarray:
    """Per-frame voiced flags: a frame is silent iff its level < threshold."""
    n = samples.size
    n_frames = -(-n // frame_len)
    full = n // frame_len
    voiced = np.zeros(n_frames, dtype=bool)
    if full:
        windows = samples[:full * frame_len].reshape(full, frame_len)
        rms = np.sqrt(np.mean(windows * windows, axis=1))
        with np.errstate(divide="ignore"):
            level = np.where(rms > 0, 20.0 * np.log10(np.where(rms > 0, rms, 1.0)), -np.inf)
        voiced[:full] = level >= threshold_dbfs
    if n_frames > full:  # trailing partial frame
        voiced[full] = frame_dbfs(samples[full * frame_len:]) >= threshold_dbfs
    return voiced


def _voiced_runs(voiced: np.ndarray) -> list[list[int]]:
    runs = []
    start = None
    for i, flag in enumerate(voiced):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append([start, i])
            start = None
    if start is not None:
        runs.append([start, len(voiced)])
    return runs


def split_on_silence(buf: AudioBuffer, params: ChunkParams | None = None) -> list[AudioChunk]:
    """Slice a buffer into voiced chunks separated by silence.

    Voiced frame runs are merged across silent gaps shorter than
    min_silence_ms, padded by pad_ms on each side (clamped to the buffer,
    truncated at the midpoint of a shared gap so chunks stay disjoint) and
    dropped when shorter than min_chunk_ms.
    """
    params = params or ChunkParams()
    rate = buf.sample_rate_hz
    n = buf.samples.size
    if n == 0:
        return []

    frame_len = max(1, rate * params.frame_ms // 1000)
    min_silence = params.min_silence_ms * rate // 1000
    min_chunk = params.min_chunk_ms * rate // 1000
    pad = params.pad_ms * rate // 1000

    runs = _voiced_runs(_voiced_mask(buf.samples, frame_len, params.silence_threshold_dbfs))
    if not runs:
        return []

    # Frame indices -> sample indices, then merge runs across short gaps.
    spans = [[s * frame_len, min(e * frame_len, n)] for s, e in runs]
    merged = [spans[0]]
    for start, end in spans[1:]:
        if start - merged[-1][1] < min_silence:
            merged[-1][1] = end
        else:
            merged.append([start, end])

    # Pad, keeping neighbours disjoint by cutting at the gap midpoint.
    padded = []
    for i, (start, end) in enumerate(merged):
        lo = max(0, start - pad)
        hi = min(n, end + pad)
        if i > 0:
            mid = (merged[i - 1][1] + start) // 2
            lo = max(lo, mid)
        if i + 1 < len(merged):
            mid = (end + merged[i + 1][0]) // 2
            hi = min(hi, mid)
        if hi - lo >= min_chunk:
            padded.append((lo, hi))

    chunks = []
    for lo, hi in padded:
        chunks.append(AudioChunk(
            samples=buf.samples[lo:hi],
            sample_rate_hz=rate,
            start_ms=round(lo * 1000 / rate),
            end_ms=round(hi * 1000 / rate),
        ))
    return chunks
