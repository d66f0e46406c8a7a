"""Exception types shared across the package."""


class MinrError(Exception):
    """Base class for all minr errors."""


class SchemaError(MinrError):
    """Invalid network schema or schema/parameter mismatch."""


class FormatError(MinrError):
    """Malformed file: wrong size, bad magic, failed checksum."""


class DataError(MinrError):
    """Input data violates a numeric precondition (e.g. non-finite values)."""
