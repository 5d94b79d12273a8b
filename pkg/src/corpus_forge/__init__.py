"""corpus-forge: corpus curation and training-schedule toolkit."""

from .records import (
    DEFAULT_LANGUAGES,
    Document,
    FilterVerdict,
    Phase,
    Reason,
    SentencePair,
    TextStats,
    paragraph_split,
    text_stats,
    word_segment,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_LANGUAGES",
    "Document",
    "FilterVerdict",
    "Phase",
    "Reason",
    "SentencePair",
    "TextStats",
    "paragraph_split",
    "text_stats",
    "word_segment",
    "__version__",
]
