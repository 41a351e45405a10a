"""Exception types shared across the package."""


class EzoperadError(Exception):
    """Base class for all package errors."""


class InputError(EzoperadError):
    """Malformed user input: bad file, bad flag value, inconsistent data.

    Carries an optional location string (``file:line``) for parser errors.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class InvariantError(EzoperadError):
    """An internal invariant failed.  Always a bug or an out-of-contract call."""


class VerificationError(EzoperadError):
    """A mathematical identity that was supposed to hold did not.

    ``witness`` holds a machine-readable description of the failing
    instance so callers can report it.
    """

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)
