class PlanningError(Exception):
    """Base class for everything the planner refuses to do."""


class ConfigurationError(PlanningError, ValueError):
    pass


class DegenerateGeometryError(PlanningError, ValueError):
    """UAV coincides with the base station antenna."""


class InfeasibleSensingError(PlanningError):
    """Sensing success probability is zero or p_min cannot be reached."""


class NoLinkError(PlanningError):
    """Link rate is zero, nothing can be sent."""


class SegmentInfeasibleError(PlanningError):
    pass


class ScenarioInfeasibleError(PlanningError):
    pass


class PlanInvalidError(PlanningError):
    """Raised by the deterministic replay when a plan breaks a constraint."""
