"""Exception hierarchy shared across the package."""

from __future__ import annotations


class WcdeError(Exception):
    """Base class for every error raised by this package."""


class GraphError(WcdeError):
    pass


class CycleError(GraphError):
    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("directed cycle: " + " -> ".join(self.cycle + self.cycle[:1]))


class UnknownNode(GraphError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown node {name!r}")

    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0]


class DuplicateEdge(GraphError):
    pass


class InvalidNodeName(GraphError):
    pass


class SetsOverlap(GraphError):
    pass


class EndpointInConditioningSet(GraphError):
    pass


class PathBudgetExceeded(GraphError):
    pass


class ContainsEndpoint(WcdeError):
    pass


class IsEndpoint(WcdeError):
    pass


class TooManyVertices(WcdeError):
    pass


class ExposureNotAncestor(WcdeError, UserWarning):
    """Issued (as a warning) when the exposure cannot affect the outcome."""


class InvalidSampleSize(WcdeError, ValueError):
    pass


class StateSpaceTooLarge(WcdeError):
    pass


class TargetIntervened(WcdeError):
    pass


class PositivityViolation(WcdeError):
    pass


class EmptyCell(WcdeError):
    pass


class SingularDesign(WcdeError):
    pass


class UnsupportedContinuousWeights(WcdeError):
    pass


class PropensityUnderflow(WcdeError):
    pass


class MissingRow(WcdeError, KeyError):
    def __str__(self) -> str:
        return self.args[0] if self.args else "missing row"


class FixtureNotAdversarial(WcdeError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ReplicationError(WcdeError):
    def __init__(self, rep: int, adjustment: tuple[str, ...], cause: Exception):
        self.rep = rep
        self.adjustment = adjustment
        self.cause = cause
        super().__init__(f"rep {rep}, set {{{','.join(adjustment)}}}: {cause}")


class ParseError(WcdeError, ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class InvalidConfig(WcdeError, ValueError):
    """An experiment or estimator configuration breaks a stated precondition."""
