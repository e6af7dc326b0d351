# isacgan/errors.py

"""
ISACGAN - Exception hierarchy shared by every module.
"""


class IsacganError(Exception):
    """Base class for all toolkit errors."""


class InvalidDimensionError(IsacganError, ValueError):
    """Array shapes or counts do not agree."""


class InvalidArgumentError(IsacganError, ValueError):
    """A scalar argument is outside its admissible range."""


class UnsupportedConfigurationError(IsacganError):
    """The requested configuration is valid in principle but not supported (e.g. P != M)."""


class DegenerateInputError(IsacganError, ValueError):
    """Input carries no usable information (zero channel, constant sample)."""


class UnsupportedStructureError(IsacganError):
    """A network structure cannot be folded or counted."""


class ContainerFormatError(IsacganError):
    """A container file is truncated, malformed or of the wrong kind."""


class FormatVersionError(ContainerFormatError):
    """A container file was written by an incompatible format version."""


class IntegrityError(ContainerFormatError):
    """The stored integrity hash does not match the file contents."""


class ConfigError(IsacganError):
    """A configuration key is unknown, mistyped or violates a constraint."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class MissingArtifactError(IsacganError):
    """An upstream file required by a command does not exist."""


class ConfigMismatchError(IsacganError):
    """A checkpoint was produced under a different configuration."""
