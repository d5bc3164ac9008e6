"""cascadesum: a config-driven speech-to-summary cascade.

Decodes WAV audio or parses caption files, chunks speech on silence, sends
chunks to a speech-to-text service, selects salient sentences by normalized
term frequency with a redundancy penalty, optionally fuses them through an
abstractive service, and scores the result with self-contained ROUGE and
BLEU implementations.
"""

__version__ = "0.1.0"

from .audio import AudioBuffer, AudioChunk, ChunkParams, decode_wav, split_on_silence
from .errors import CascadesumError
from .extractive import (
    ExtractiveSummary,
    FrequencyTable,
    NormMode,
    ScoredSentence,
    SelectionParams,
    build_frequency_table,
    score_sentences,
    select_summary,
)
from .gateway import AbstractiveConfig, SttConfig, abstractive_fuse, transcribe_chunks
from .metrics import (
    CorpusStats,
    EvalScores,
    PrfScores,
    bleu,
    corpus_stats,
    lcs_length,
    rouge_l,
    rouge_n,
    score_pair,
)
from .pipeline import (
    ConfigError,
    InputNotFound,
    PipelineConfig,
    StageError,
    run_pipeline,
    validate_config,
)
from .textprep import (
    SentenceRecord,
    StopwordList,
    analyze_sentences,
    clean_for_analysis,
    clean_for_display,
    segment_sentences,
    tokenize,
)
from .transcripts import TimedSegment, Transcript, parse_plain, parse_srt, parse_vtt

__all__ = [
    "AbstractiveConfig",
    "AudioBuffer",
    "AudioChunk",
    "CascadesumError",
    "ChunkParams",
    "ConfigError",
    "CorpusStats",
    "EvalScores",
    "ExtractiveSummary",
    "FrequencyTable",
    "InputNotFound",
    "NormMode",
    "PipelineConfig",
    "PrfScores",
    "ScoredSentence",
    "SelectionParams",
    "SentenceRecord",
    "StageError",
    "StopwordList",
    "SttConfig",
    "TimedSegment",
    "Transcript",
    "__version__",
    "abstractive_fuse",
    "analyze_sentences",
    "bleu",
    "build_frequency_table",
    "clean_for_analysis",
    "clean_for_display",
    "corpus_stats",
    "decode_wav",
    "lcs_length",
    "parse_plain",
    "parse_srt",
    "parse_vtt",
    "rouge_l",
    "rouge_n",
    "run_pipeline",
    "score_pair",
    "score_sentences",
    "segment_sentences",
    "select_summary",
    "split_on_silence",
    "tokenize",
    "transcribe_chunks",
    "validate_config",
]
