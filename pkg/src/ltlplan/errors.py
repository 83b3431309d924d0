"""Exception hierarchy shared by every stage of the pipeline."""


class LtlPlanError(Exception):
    """Base class for all errors raised by ltlplan."""


class ParseError(LtlPlanError):
    """A document (map, trajectory CSV, ...) is malformed."""


class ValidationError(LtlPlanError):
    """A well-formed document violates a semantic invariant."""


class DegenerateGrid(LtlPlanError):
    """Decomposition produced no free cell."""


class UnknownCell(LtlPlanError, KeyError):
    pass


class LtlSyntaxError(ParseError):
    """Formula text does not tokenize or parse.

    ``position`` is the 0-based character offset of the offending token.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnsupportedFragment(LtlPlanError):
    """Well-formed LTL outside the supported co-safe fragment."""


class StartInObstacle(LtlPlanError):
    pass


class NoPlan(LtlPlanError):
    """No accepting product state is reachable.

    ``furthest_state`` is the highest DFA state index reached by the search,
    which tells the caller which task stage could not be completed.
    """

    def __init__(self, message, furthest_state=None):
        super().__init__(message)
        self.furthest_state = furthest_state


class EmptyAllowedSet(LtlPlanError):
    pass


class PlanFailure(LtlPlanError):
    """A sampling planner exhausted its budget.  ``stage`` is 0-based."""

    def __init__(self, message, stage=None):
        if stage is not None:
            message = f"stage {stage}: {message}"
        super().__init__(message)
        self.stage = stage


class UnsupportedTask(LtlPlanError):
    """The goal-scheduling mode cannot express the requested task."""


class WheelSpeedExceeded(LtlPlanError, ValueError):
    pass


class NoGoalsRecognized(LtlPlanError):
    pass


class AmbiguousOrder(LtlPlanError):
    pass
