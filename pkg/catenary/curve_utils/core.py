"""
Catenary geometry: curve/frame types, evaluation, canonical transforms and
arc lengths.

A curve lives in a vertical (or wind-tilted) plane described by a PlaneFrame.
Inside the plane it is y = c + a * cosh((x - m) / a); dividing out the
translation and dilation gives the canonical curve y = cosh(x), which is where
the closest-point machinery works.
"""
from dataclasses import dataclass
import logging

import numpy as np

from catenary.exceptions import (
    CurveOverflowError,
    DegenerateParabolaError,
    InvalidCurveError,
    NonFiniteInputError,
)

logger = logging.getLogger(__name__)

UP = np.array([0.0, 0.0, 1.0])
ORTHONORMAL_TOLERANCE = 1e-10


def _scalar_or_array(value):
    """Return a plain float for 0-d results and the ndarray otherwise."""
    if np.ndim(value) == 0:
        return float(value)
    return value


def require_finite(*values):
    """Raise NonFiniteInputError if any value holds NaN or Inf."""
    for value in values:
        if not np.all(np.isfinite(value)):
            raise NonFiniteInputError(f'non-finite input: {value!r}')


def points_array(points):
    """(n, 3) float array from an ndarray or an iterable of Point3."""
    if isinstance(points, np.ndarray):
        xyz = points.astype(float, copy=False).reshape(-1, 3)
    else:
        xyz = np.array([p.as_array() if isinstance(p, Point3) else p for p in points], dtype=float).reshape(-1, 3)
    require_finite(xyz)
    return xyz


def _checked(value, what):
    if not np.all(np.isfinite(value)):
        raise CurveOverflowError(f'{what} overflows floating range')
    return _scalar_or_array(value)


@dataclass(frozen=True)
class Point3:
    """A 3D point in meters with the index of its source record."""
    x: float
    y: float
    z: float
    index: int = -1

    def __post_init__(self):
        require_finite(self.x, self.y, self.z)

    def as_array(self):
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, xyz, index=-1):
        return cls(float(xyz[0]), float(xyz[1]), float(xyz[2]), index)


@dataclass(frozen=True)
class CanonicalPoint:
    """Coordinates in the frame where the curve is y = cosh(x)."""
    x: float
    y: float

    def __post_init__(self):
        require_finite(self.x, self.y)

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True, eq=False)
class PlaneFrame:
    """
    Orthonormal frame of the curve plane.

    axis_x is horizontal, axis_y points upward (non-negative z component) and
    normal completes the triad. In-plane coordinates of a world point p are
    (axis_x . (p - origin), axis_y . (p - origin)).
    """
    origin: np.ndarray
    axis_x: np.ndarray
    axis_y: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        for name in ('origin', 'axis_x', 'axis_y', 'normal'):
            vector = np.asarray(getattr(self, name), dtype=float).reshape(3)
            require_finite(vector)
            object.__setattr__(self, name, vector)
        basis = np.vstack([self.axis_x, self.axis_y, self.normal])
        if not np.allclose(basis @ basis.T, np.eye(3), atol=ORTHONORMAL_TOLERANCE, rtol=0.0):
            raise InvalidCurveError('frame axes are not orthonormal')
        if self.axis_y[2] < -ORTHONORMAL_TOLERANCE:
            raise InvalidCurveError('frame axis_y must point upward')

    @classmethod
    def from_axes(cls, origin, axis_x, normal):
        """
        Build the frame from a horizontal-ish axis_x and the plane normal.

        axis_y = normal x axis_x; if that points down the normal is flipped so
        that axis_y always has a non-negative vertical component.
        """
        axis_x = np.asarray(axis_x, dtype=float)
        axis_x = axis_x / np.linalg.norm(axis_x)
        normal = np.asarray(normal, dtype=float)
        normal = normal - np.dot(normal, axis_x) * axis_x
        normal = normal / np.linalg.norm(normal)
        axis_y = np.cross(normal, axis_x)
        if axis_y[2] < 0:
            normal = -normal
            axis_y = -axis_y
        return cls(np.asarray(origin, dtype=float), axis_x, axis_y, normal)

    @classmethod
    def vertical(cls, origin, horizontal_normal):
        """
        Vertical plane through origin with the given horizontal normal.

        axis_x is the normal's horizontal projection rotated clockwise by 90
        degrees.
        """
        nx, ny = float(horizontal_normal[0]), float(horizontal_normal[1])
        length = np.hypot(nx, ny)
        if length == 0:
            raise InvalidCurveError('vertical plane needs a horizontal normal')
        nx, ny = nx / length, ny / length
        return cls.from_axes(origin, [ny, -nx, 0.0], [nx, ny, 0.0])

    @property
    def tilt_degrees(self):
        """Angle between the plane and the vertical direction."""
        return float(np.degrees(np.arcsin(min(1.0, abs(self.normal[2])))))

    def to_plane(self, xyz):
        """Split world points (n, 3) into in-plane x, y and signed plane offset."""
        rel = np.atleast_2d(np.asarray(xyz, dtype=float)) - self.origin
        return rel @ self.axis_x, rel @ self.axis_y, rel @ self.normal

    def to_world(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.origin + np.multiply.outer(x, self.axis_x) + np.multiply.outer(y, self.axis_y)

    def to_dict(self):
        return {
            'origin': self.origin.tolist(),
            'axis_x': self.axis_x.tolist(),
            'axis_y': self.axis_y.tolist(),
            'normal': self.normal.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['origin'], data['axis_x'], data['axis_y'], data['normal'])


def canonical_frame():
    """The world XZ plane; in-plane coordinates equal world (x, z)."""
    return PlaneFrame(np.zeros(3), np.array([1.0, 0.0, 0.0]), UP.copy(), np.array([0.0, -1.0, 0.0]))


@dataclass(frozen=True, eq=False)
class CatenaryCurve:
    """y = c + a * cosh((x - m) / a) in the plane of `frame`, supported on [x_min, x_max]."""
    frame: PlaneFrame
    c: float
    a: float
    m: float
    x_min: float = 0.0
    x_max: float = 0.0

    def __post_init__(self):
        values = (self.c, self.a, self.m, self.x_min, self.x_max)
        if not np.all(np.isfinite(values)):
            raise InvalidCurveError(f'non-finite curve parameters {values}')
        if self.a <= 0:
            raise InvalidCurveError(f'scale a must be positive, got {self.a}')
        if self.x_min > self.x_max:
            raise InvalidCurveError(f'x_min {self.x_min} exceeds x_max {self.x_max}')
        for name in ('c', 'a', 'm', 'x_min', 'x_max'):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def planar(cls, c, a, m, x_min=0.0, x_max=0.0):
        """Curve drawn in the world XZ plane (handy for 2D work and tests)."""
        return cls(canonical_frame(), c, a, m, x_min, x_max)

    def with_extent(self, x_min, x_max):
        return CatenaryCurve(self.frame, self.c, self.a, self.m, x_min, x_max)

    @property
    def length(self):
        """Arc length between x_min and x_max, meters."""
        u0 = (self.x_min - self.m) / self.a
        u1 = (self.x_max - self.m) / self.a
        return self.a * catenary_arc_length(u0, u1)

    def point_at(self, x):
        """World coordinates of the curve at in-plane abscissa x (scalar or array)."""
        return self.frame.to_world(x, evaluate(self, x))

    def end_points(self):
        return self.point_at(self.x_min), self.point_at(self.x_max)

    def to_dict(self):
        return {
            'frame': self.frame.to_dict(),
            'c': self.c,
            'a': self.a,
            'm': self.m,
            'x_min': self.x_min,
            'x_max': self.x_max,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(PlaneFrame.from_dict(data['frame']), data['c'], data['a'], data['m'],
                   data.get('x_min', 0.0), data.get('x_max', 0.0))


def evaluate(curve, x):
    """Height of the curve at in-plane abscissa x: c + a * cosh((x - m) / a)."""
    require_finite(x)
    with np.errstate(over='ignore'):
        y = curve.c + curve.a * np.cosh((np.asarray(x, dtype=float) - curve.m) / curve.a)
    return _checked(y, 'cosh')


def to_canonical(curve, p):
    """Map an in-plane point to the frame where the curve is y = cosh(x)."""
    x, y = float(p[0]), float(p[1])
    require_finite(x, y)
    return CanonicalPoint((x - curve.m) / curve.a, (y - curve.c) / curve.a)


def from_canonical(curve, p):
    """Inverse of to_canonical; returns the in-plane (x, y) pair."""
    x, y = p
    return (curve.a * x + curve.m, curve.a * y + curve.c)


def normal_axis_intercept(x):
    """
    Height where the curve normal at x crosses the y axis: cosh(x) + x / sinh(x).

    Even in x, strictly increasing for x > 0, with limit 2 at x = 0.
    """
    require_finite(x)
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid='ignore', divide='ignore', over='ignore'):
        ratio = np.where(x == 0, 1.0, x / np.sinh(x))
        # x / sinh(x) underflows to 0 long before cosh overflows
        ratio = np.where(np.isfinite(ratio), ratio, 0.0)
        value = np.cosh(x) + ratio
    return _checked(value, 'cosh')


def catenary_arc_length(x0, x1):
    """Distance along y = cosh(x) between abscissae x0 and x1."""
    require_finite(x0, x1)
    with np.errstate(over='ignore', invalid='ignore'):
        length = np.abs(np.sinh(x1) - np.sinh(x0))
    return _checked(length, 'sinh')


def point_at_arc_length(x0, signed_length):
    """Abscissa reached by walking signed_length along y = cosh(x) from x0."""
    require_finite(x0, signed_length)
    with np.errstate(over='ignore', invalid='ignore'):
        x = np.arcsinh(np.sinh(x0) + signed_length)
    return _checked(x, 'sinh')


def _unit_parabola_length(t):
    """Signed length along y = t**2 / 2 from 0 to t, evaluated on |t| for stability."""
    at = np.abs(t)
    return np.sign(t) * (at * np.hypot(at, 1.0) + np.arcsinh(at)) / 2.0


def parabola_arc_length(x0, x1, a, b):
    """
    Signed length along y = a*x**2 + b*x + c from x0 to x1.

    Raises DegenerateParabolaError for a == 0; callers use the straight-line
    length in that case.
    """
    require_finite(x0, x1, a, b)
    if np.any(np.asarray(a) == 0):
        raise DegenerateParabolaError('quadratic coefficient is zero')
    two_a = 2.0 * np.asarray(a, dtype=float)
    with np.errstate(over='ignore', invalid='ignore'):
        length = (_unit_parabola_length(two_a * x1 + b) - _unit_parabola_length(two_a * x0 + b)) / two_a
    return _checked(length, 'parabola length')
