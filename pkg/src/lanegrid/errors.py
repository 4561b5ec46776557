"""Exception hierarchy shared across the package."""


class LaneGridError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(LaneGridError, ValueError):
    """A map or scenario document violates the file format or an invariant."""


class RouteNotFoundError(ValidationError):
    """No successor path connects the requested route endpoints."""


class ProjectionError(LaneGridError):
    """A point is too far from the route to be projected onto it."""


class InvalidSceneError(LaneGridError):
    """The scene is geometrically impossible (e.g. viewpoint inside an obstacle)."""
