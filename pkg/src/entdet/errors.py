"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """An iterative numeric routine failed to converge or produced non-finite values."""


class DatasetError(Exception):
    """Base class for dataset file problems."""


class BadMagicError(DatasetError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(DatasetError):
    """File declares a format version this reader does not understand."""


class TruncatedDatasetError(DatasetError):
    """File ends before the declared record payload is complete."""


class ChecksumError(DatasetError):
    """Payload checksum does not match the stored CRC32."""
