"""Exception hierarchy shared across the toolkit."""


class CorpusForgeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CorpusForgeError):
    """Invalid configuration value or combination (exit code 2)."""


class DataError(CorpusForgeError):
    """Malformed input record or file (exit code 3)."""


class EmptyCorpusError(CorpusForgeError):
    """An operation that needs at least one token/document got none."""


class EmptyTextError(CorpusForgeError):
    """Perplexity requested for text with no tokens."""


class NoBandsError(CorpusForgeError):
    """Perplexity gate invoked for a language with no calibrated cutoff."""


class InsufficientDataError(CorpusForgeError):
    """Language-ID training data below the minimum (2 languages, 1k chars each)."""


class MissingScoreError(CorpusForgeError):
    """A required quality score is absent from the record."""


class ZeroAvailabilityError(CorpusForgeError):
    """A mixture source has positive share but no available tokens."""


class StepOutOfRangeError(CorpusForgeError):
    """Schedule evaluated outside [0, final_end]."""


class InvalidCategoryError(CorpusForgeError):
    """Instruction category not in the closed category set."""


class EmptyInstructionError(CorpusForgeError):
    """Answer prompt requested for an empty instruction."""


class TemplateParseError(CorpusForgeError):
    """A labeled field is missing from a structured model response."""
