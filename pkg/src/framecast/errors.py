"""Exception hierarchy shared across the package."""

from __future__ import annotations


class FramecastError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(FramecastError):
    """Syntax error with a source position."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class ResolveError(FramecastError):
    """Name, type, or inheritance error found while resolving a program."""


class MalformedClause(ResolveError):
    """A modify clause names something that does not resolve."""


class UnknownRoutine(FramecastError):
    """A call names a routine the target class does not provide."""


class AnalysisError(FramecastError):
    """Internal analysis failure (signals an engine bug, not bad input)."""
