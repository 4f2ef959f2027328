"""Exception hierarchy shared across the planner."""


class MomaposError(Exception):
    pass


class ParseError(MomaposError):
    pass


class ValidationError(MomaposError):
    pass


class NotArticulated(MomaposError):
    pass


class ResolutionTooCoarse(MomaposError):
    pass


class EmptyScene(MomaposError):
    pass


class UnknownNode(MomaposError):
    pass


class UnknownTarget(MomaposError):
    pass


class DegenerateCorpus(MomaposError):
    pass


class JointLimit(MomaposError):
    pass


class OutOfVerticalReach(MomaposError):
    pass


class FormatError(MomaposError):
    pass


class EmptyArea(MomaposError):
    pass


class NotInArea(MomaposError):
    pass


class NoPath(MomaposError):
    pass


class StartOccupied(NoPath):
    pass


class GoalOccupied(NoPath):
    pass


class NoTrajectory(MomaposError):
    pass


class InvalidEndpoint(MomaposError):
    pass


class Infeasible(MomaposError):
    """Raised when no feasible placement or manipulation exists.

    ``index`` is the failing waypoint index when the failure can be pinned
    to one waypoint, otherwise None.
    """

    def __init__(self, message="infeasible", index=None, reason=None):
        super().__init__(message)
        self.index = index
        self.reason = reason or message
