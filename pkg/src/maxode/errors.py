"""Exception hierarchy shared across the package."""


class MaxodeError(Exception):
    """Base class for all errors raised by maxode."""


class ParseError(MaxodeError, ValueError):
    """Malformed expression text. ``pos`` is the 0-based character offset."""

    def __init__(self, message, pos=None, text=None):
        self.pos = pos
        self.text = text
        if pos is not None:
            message = f"{message} at position {pos}"
            if text is not None:
                message += f"\n  {text}\n  {' ' * pos}^"
        super().__init__(message)


class EvalDomainError(MaxodeError, ArithmeticError):
    """An expression was evaluated outside its real domain."""


class ProblemError(MaxodeError, ValueError):
    """A problem definition violates the schema. ``field`` is a JSON-style path."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class GridMismatchError(MaxodeError, ValueError):
    pass


class NonFiniteError(MaxodeError, FloatingPointError):
    """A solver produced inf/nan. ``node`` is the offending grid index."""

    def __init__(self, message, node=None):
        self.node = node
        if node is not None:
            message = f"{message} (node {node})"
        super().__init__(message)
