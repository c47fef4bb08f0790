"""Exception types shared across the package."""

from __future__ import annotations


class ExpressionError(ValueError):
    """Base class for problems with an expression string."""


class ExprSyntaxError(ExpressionError):
    """Malformed expression text.

    ``offset`` is the 0-based character offset at which parsing failed.
    """

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifier(ExpressionError):
    def __init__(self, name: str, offset: int = -1):
        self.name = name
        self.offset = offset
        where = f" at offset {offset}" if offset >= 0 else ""
        super().__init__(f"unknown identifier {name!r}{where}")


class ArityError(ExpressionError):
    def __init__(self, name: str, expected: int, got: int, offset: int = -1):
        self.name = name
        self.expected = expected
        self.got = got
        self.offset = offset
        super().__init__(f"{name}() takes {expected} argument(s), got {got} (offset {offset})")


class DomainError(ArithmeticError):
    """A real-valued function was evaluated outside its domain.

    ``subexpression`` holds the source text of the offending node when known,
    ``index`` an optional table index such as ``(sigma, i, j)``.
    """

    def __init__(self, message: str, subexpression: str | None = None, index: tuple | None = None):
        self.reason = message
        self.subexpression = subexpression
        self.index = index
        super().__init__(self._format())

    def _format(self) -> str:
        msg = self.reason
        if self.subexpression:
            msg += f" in {self.subexpression!r}"
        if self.index is not None:
            msg += f" at index {self.index}"
        return msg

    def with_index(self, index: tuple) -> "DomainError":
        return DomainError(self.reason, self.subexpression, index)


class LayoutError(ValueError):
    """Invalid variable names or duplicated declarations."""


class DimensionError(ValueError):
    """Tables or points whose shape does not match the system."""


class SingularFrameError(ArithmeticError):
    """The adapted frame is degenerate at the requested point."""


class ConfigError(ValueError):
    """Problem reading or validating a configuration file.

    ``location`` is ``"file:line"`` when the position is known.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
