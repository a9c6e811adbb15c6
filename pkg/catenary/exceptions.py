class CatenaryError(Exception):
    """Base class for geometry and fitting failures."""


class InvalidCurveError(CatenaryError, ValueError):
    """Curve parameters violate a > 0, x_min <= x_max or finiteness."""


class NonFiniteInputError(CatenaryError, ValueError):
    """A coordinate or coefficient is NaN or infinite."""


class CurveOverflowError(CatenaryError, OverflowError):
    """cosh/sinh of the requested abscissa is beyond floating range."""


class DegenerateParabolaError(CatenaryError, ValueError):
    """Quadratic coefficient is zero; use the straight-line length instead."""


class DegenerateGeometryError(CatenaryError):
    """Points do not define a plane (e.g. all horizontally coincident)."""


class RankError(CatenaryError):
    """Too few distinct abscissae for the requested polynomial fit."""


class TooFewPointsError(CatenaryError):
    """Fewer points than the fit needs."""


class NotCatenaryError(CatenaryError):
    """The points are concave or too close to a straight line."""

    CONCAVE = 'concave'
    STRAIGHT = 'straight'

    def __init__(self, reason, message=None):
        self.reason = reason
        super().__init__(message or f'points do not form a catenary ({reason})')
