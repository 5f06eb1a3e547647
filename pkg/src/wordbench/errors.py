"""Exception hierarchy shared across the package.

The HTTP layer maps these onto status codes (PreconditionError -> 400,
NotFoundError -> 404, SessionClosedError -> 409); the CLI maps any
WordbenchError onto exit code 1.
"""


class WordbenchError(Exception):
    """Base class for all package errors."""


class FormatError(WordbenchError):
    """Malformed input file (embedding text, corpus JSONL, feedback JSON)."""


class PreconditionError(WordbenchError):
    """An operation was called with arguments that violate its contract."""


class NotFoundError(WordbenchError):
    """Unknown id: word, document, session, workspace or job."""


class SessionClosedError(WordbenchError):
    """Mutation attempted on a session that is no longer open."""
