"""Exception hierarchy.

``QAKBError`` covers domain errors (CLI exit code 1). File-format problems
get their own subclasses so callers can tell a bad magic from a truncated
payload without parsing messages.
"""

from __future__ import annotations


class QAKBError(Exception):
    """Base class for all domain errors raised by this package."""


class ValidationError(QAKBError):
    """A record or argument violates a documented invariant."""


class FormatError(QAKBError):
    """A file does not match its declared binary or line format."""


class MagicError(FormatError):
    """File magic bytes or version do not match."""


class DimensionMismatchError(FormatError):
    """Stored vector dimension differs from the expected dimension."""


class TruncatedFileError(FormatError):
    """Payload ends before the header-declared byte count."""


class BackendError(QAKBError):
    """A pluggable model backend failed (e.g. subprocess died mid-protocol)."""
