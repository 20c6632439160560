"""
p4f-cfa - Domain Exceptions
"""

from typing import Optional


class AnalysisError(Exception):
    """Base class for every error raised by the toolkit"""


class ParseError(AnalysisError):
    """Malformed program text"""

    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"{line}:{col}: {message}")


class ScopeError(AnalysisError):
    """Reference to a variable with no enclosing binder"""

    def __init__(self, name: str, line: int = 0, col: int = 0):
        self.name = name
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: unbound variable '{name}'")


class UnboundVariable(AnalysisError):
    """Concrete lookup failed; the validator was bypassed"""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable '{name}'")


class StuckState(AnalysisError):
    """The concrete machine has no rule for the current state"""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class ResourceLimit(AnalysisError):
    """A configured ceiling was exceeded"""

    def __init__(self, limit: str, value: Optional[float] = None):
        self.limit = limit
        self.value = value
        detail = f" ({value})" if value is not None else ""
        super().__init__(f"resource limit exceeded: {limit}{detail}")


class UnknownVariable(AnalysisError):
    """Flow query for a name that no address binds"""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no address binds variable '{name}'")


class IncompleteOracle(AnalysisError):
    """The bounded oracle did not reach its fixed point"""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)
