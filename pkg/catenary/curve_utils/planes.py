"""
Plane fitting for a wire's points: the vertical plane through the
least-squares horizontal trace, and a wind-tilted variant rotated about the
trace direction.
"""
import logging

import numpy as np
from scipy import optimize
from sklearn.decomposition import PCA

from catenary.curve_utils.core import UP, PlaneFrame, points_array
from catenary.exceptions import DegenerateGeometryError

logger = logging.getLogger(__name__)

# tilt search bracket, radians
TILT_SEARCH_LIMIT = np.pi / 4
HORIZONTAL_SPREAD_EPS = 1e-12


def _horizontal_direction(xyz):
    horizontal = xyz[:, :2]
    spread = np.ptp(horizontal, axis=0).max() if len(horizontal) else 0.0
    if len(xyz) < 2 or spread <= HORIZONTAL_SPREAD_EPS * max(1.0, np.abs(horizontal).max()):
        raise DegenerateGeometryError('points are horizontally coincident')
    pca = PCA(n_components=2).fit(horizontal)
    return pca.components_[0]


def fit_vertical_plane(points):
    """
    Vertical plane whose horizontal trace is the total-least-squares line
    through the points' (x, y) coordinates.

    Args:
        points: (n, 3) array or iterable of Point3

    Returns:
        PlaneFrame with origin at the centroid, axis_x along the trace and
        axis_y straight up.
    """
    xyz = points_array(points)
    direction = _horizontal_direction(xyz)
    normal = np.array([-direction[1], direction[0]])
    return PlaneFrame.vertical(xyz.mean(axis=0), normal)


def horizontal_span(frame, xyz):
    """Extent of the points along the frame's axis_x."""
    x, _, _ = frame.to_plane(xyz)
    return float(np.ptp(x)) if x.size else 0.0


def fit_tilted_plane(points, max_deviation_angle=10.0, min_span=60.0):
    """
    Plane through the horizontal trace, tilted sideways to follow a
    wind-blown wire.

    The tilt angle is a one-dimensional bounded search minimising the sum of
    squared point-to-plane distances; it approximates, rather than jointly
    optimises, the plane and curve.

    Args:
        points: (n, 3) array or iterable of Point3
        max_deviation_angle: largest accepted tilt from vertical, degrees
        min_span: shorter point sets keep the vertical plane

    Returns:
        (frame, fallback) where fallback is True when the optimal tilt
        exceeded max_deviation_angle and the vertical plane was used instead.
    """
    xyz = points_array(points)
    vertical = fit_vertical_plane(xyz)
    if horizontal_span(vertical, xyz) < min_span:
        return vertical, False

    rel = xyz - vertical.origin
    along_normal = rel @ vertical.normal
    along_up = rel @ UP

    def plane_residual(theta):
        offsets = np.cos(theta) * along_normal + np.sin(theta) * along_up
        return float(np.dot(offsets, offsets))

    result = optimize.minimize_scalar(
        plane_residual,
        bounds=(-TILT_SEARCH_LIMIT, TILT_SEARCH_LIMIT),
        method='bounded',
        options={'xatol': 1e-10},
    )
    theta = float(result.x)
    if abs(np.degrees(theta)) > max_deviation_angle:
        logger.debug('tilt %.2f deg beyond %.2f deg cap; keeping vertical plane',
                     np.degrees(theta), max_deviation_angle)
        return vertical, True

    normal = np.cos(theta) * vertical.normal + np.sin(theta) * UP
    return PlaneFrame.from_axes(vertical.origin, vertical.axis_x, normal), False
