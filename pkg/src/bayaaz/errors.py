"""Exception types shared across the package."""


class BayaazError(Exception):
    """Base class for all package-specific errors."""


class EmptyInputError(BayaazError, ValueError):
    """An operation received an empty corpus or sample set."""


class VocabError(BayaazError, ValueError):
    """A token id or character falls outside the vocabulary."""


class SequenceLengthError(BayaazError, ValueError):
    """A context exceeds the model's maximum sequence length."""


class ShapeError(BayaazError, ValueError):
    """Tensor dimensions do not match the expected shapes."""


class ConsistencyError(BayaazError, ValueError):
    """A forward cache does not belong to the given parameters."""


class InsufficientDataError(BayaazError, ValueError):
    """Too few training windows for the requested split."""


class CheckpointFormatError(BayaazError, ValueError):
    """Checkpoint file does not start with the expected magic bytes."""


class CheckpointVersionError(BayaazError, ValueError):
    """Checkpoint format version is not supported."""


class CheckpointCorruptError(BayaazError, ValueError):
    """Checkpoint file is truncated or internally inconsistent."""


class ChoiceError(BayaazError, ValueError):
    """Interactive choice index is out of range."""


class SessionError(BayaazError, KeyError):
    """Interactive session is unknown or has expired."""


class ScansionError(BayaazError, ValueError):
    """A line cannot be scanned (e.g. it has no vowel nucleus)."""


class StructureError(BayaazError, ValueError):
    """A ghazal does not have enough verses for structural analysis."""


class ConfigError(BayaazError, ValueError):
    """Service configuration is missing or invalid."""
