"""Exception types shared across the planning toolkit."""


class PlanningError(Exception):
    """Base class for all toolkit errors."""


class DegenerateTangent(PlanningError):
    """Path tangent norm fell below the slack floor; flat maps undefined."""


class JackknifeDetected(PlanningError):
    """A hitch angle reached or exceeded pi/2 during integration."""


class EmptyBounds(PlanningError):
    """World bounds enclose no area."""


class DegeneratePolygon(PlanningError):
    """Polygon has fewer than 3 effective vertices (repeated or collinear)."""


class NotConvex(PlanningError):
    """Target region polygon is not convex."""


class SingularSystem(PlanningError):
    """Spline system cannot be solved (non-positive piece length or singular matrix)."""


class OutOfDomain(PlanningError):
    """Query parameter outside the spline domain."""


class NonPositiveInput(PlanningError):
    """Argument required to be strictly positive was not."""


class NonFiniteObjective(PlanningError):
    """Objective or gradient evaluated to NaN or infinity."""


class PathTooShort(PlanningError):
    """Search path has fewer than 2 states; cannot seed the optimizer."""


class GenerationFailed(PlanningError):
    """Scenario rejection sampling exhausted its retry budget."""


class ParseError(PlanningError):
    """A dump or config file does not match its documented format."""
