"""Exception hierarchy.

Every error raised on bad input derives from :class:`ValidationError` so the
CLI can map it to exit code 1; I/O problems surface as ``OSError``.
"""


class TdcError(Exception):
    """Base class for all package errors."""


class ValidationError(TdcError, ValueError):
    """Input violates a documented precondition."""


class DuplicateNode(ValidationError):
    pass


class DanglingEdge(ValidationError):
    pass


class SelfLoop(ValidationError):
    pass


class ParallelEdge(ValidationError):
    pass


class NegativeWeight(ValidationError):
    pass


class NameGrammarError(ValidationError):
    pass


class UnknownLayer(ValidationError):
    pass


class UnknownNode(ValidationError):
    pass


class EmptyLayer(ValidationError):
    pass


class InvalidDirection(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class MissingImpedance(ValidationError):
    pass


class ZeroMeanImpedance(ValidationError):
    pass


class MissingVoltage(ValidationError):
    pass


class AmbiguousZeroCycle(ValidationError):
    """A cycle of zero-weight edges makes shortest-path counts ill-defined."""


class DegenerateSum(ValidationError):
    pass


class TooFewNodes(ValidationError):
    pass


class ZeroBaseEfficiency(ValidationError):
    pass


class BadBinEdges(ValidationError):
    pass


class NoReachablePairs(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class UnknownSubstation(ValidationError):
    pass


class DuplicateAssignment(ValidationError):
    pass


class RewireExhausted(ValidationError):
    pass
