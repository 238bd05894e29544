"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: usage/input problems exit 2,
dataset ingestion problems exit 3, weight-file problems exit 4.
"""


class MrpercError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(MrpercError):
    """A layer or kernel was configured inconsistently (shape/stride mismatch)."""


class InputError(MrpercError):
    """An input image is unusable (wrong channel count, too small, bad range)."""


class UsageError(MrpercError):
    """An API precondition was violated by the caller."""


class WeightFileError(MrpercError):
    """Base class for weight-container problems."""


class FormatError(WeightFileError):
    """Bad magic, unsupported version, or a structurally corrupt container."""


class ChecksumError(WeightFileError):
    """Stored payload checksum does not match the recomputed one."""


class ManifestError(WeightFileError):
    """Architecture manifest is inconsistent with the stored arrays."""


class IngestionError(MrpercError):
    """The 2AFC dataset on disk is missing pieces or malformed."""
