"""Exception hierarchy shared across the package."""


class BibclassError(Exception):
    """Base class for all errors raised by bibclass."""


class DataError(BibclassError):
    """Input files or their contents are unusable (CLI exit status 2)."""


class UsageError(BibclassError):
    """The invocation itself is invalid (CLI exit status 1)."""
