class LgtError(Exception):
    """Base class for domain errors."""


class ParseError(LgtError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


class Stuck(LgtError):
    def __init__(self, reason: str, term=None):
        super().__init__(reason)
        self.term = term


class FuelExhausted(LgtError):
    def __init__(self, fuel: int):
        super().__init__(f"fuel exhausted after {fuel} steps")
        self.fuel = fuel


class TypingError(LgtError):
    def __init__(self, msg: str, term=None):
        super().__init__(msg)
        self.term = term


class PreconditionViolation(LgtError):
    pass


class DepthExceeded(LgtError):
    pass


class EliminationIncomplete(LgtError):
    pass


class InfiniteDescentViolation(AssertionError):
    """Raised if an induction hypothesis is about to be used on a goal that did not shrink."""
