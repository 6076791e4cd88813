"""Exception hierarchy shared across the package.

DataError covers everything caused by bad input (malformed files, invalid
parameters, contract violations); the CLI maps it to exit code 2 and the
service to HTTP 400. Anything else escaping to the CLI is an internal
error (exit code 3).
"""


class PostscanError(Exception):
    pass


class DataError(PostscanError, ValueError):
    """Invalid input data or parameters."""


class UsageError(PostscanError):
    """Invalid command line or config usage."""
