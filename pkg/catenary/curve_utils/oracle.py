"""
Brute-force closest-point reference.

Dense sampling of the curve (uniform in arc length) picks the nearest local
minima; each is resampled finely between its neighbours and a Brent root
search on the distance derivative polishes it. Slow, and independent of
the normal-partition machinery it checks.
"""
import logging

import numpy as np
from scipy import optimize

from catenary.curve_utils.core import points_array, require_finite

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 1_000_000
PADDING_SCALES = 2.0
ZOOM_SAMPLES = 4001
MINIMA_KEPT = 4


def _canonical_grid(u0, u1, samples):
    s = np.linspace(np.sinh(u0), np.sinh(u1), samples)
    return np.arcsinh(s)


def _local_minima(values, keep):
    inner = np.flatnonzero((values[1:-1] <= values[:-2]) & (values[1:-1] <= values[2:])) + 1
    idx = np.concatenate([[0, values.size - 1], inner])
    return idx[np.argsort(values[idx])[:keep]]


def _refine(gap, slope, grid, k):
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    if not hi > lo:
        return float(grid[k])
    zoom = np.linspace(lo, hi, ZOOM_SAMPLES)
    j = int(np.argmin(gap(zoom)))
    lo, hi = zoom[max(j - 1, 0)], zoom[min(j + 1, ZOOM_SAMPLES - 1)]
    if slope(lo) <= 0 <= slope(hi):
        return float(optimize.brentq(slope, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps))
    return float(zoom[j])


def _nearest_on_grid(grid, px, py):
    def gap(u):
        return (u - px) ** 2 + (np.cosh(u) - py) ** 2

    def slope(u):
        return (u - px) + (np.cosh(u) - py) * np.sinh(u)

    # a point above the axis can have a local minimum on each branch; polish the best few
    candidates = [_refine(gap, slope, grid, int(k)) for k in _local_minima(gap(grid), MINIMA_KEPT)]
    u = min(candidates, key=gap)
    return u, float(np.sqrt(gap(u)))


def oracle_closest_canonical(px, py, samples=DEFAULT_SAMPLES):
    """
    Closest abscissa and distance of canonical point (px, py) to y = cosh(x).

    The search range [-R, R] with R = max(|px|, acosh(max(py, 1))) + 1 always
    contains the answer.
    """
    require_finite(px, py)
    reach = max(abs(px), float(np.arccosh(max(py, 1.0)))) + 1.0
    return _nearest_on_grid(_canonical_grid(-reach, reach, samples), px, py)


def oracle_closest(curve, points, samples=DEFAULT_SAMPLES, padding=PADDING_SCALES):
    """
    Distances of world points to a curve by dense sampling.

    Args:
        curve: CatenaryCurve
        points: (n, 3) array or iterable of Point3
        samples: curve samples per point
        padding: the sampled extent is [x_min, x_max] widened by padding * a

    Returns:
        (abscissae, distances) arrays in the curve's in-plane units
    """
    xyz = points_array(points)
    x, y, offset = curve.frame.to_plane(xyz)
    u0 = (curve.x_min - padding * curve.a - curve.m) / curve.a
    u1 = (curve.x_max + padding * curve.a - curve.m) / curve.a
    grid = _canonical_grid(u0, u1, samples)
    abscissae = np.empty(len(xyz))
    distances = np.empty(len(xyz))
    for i in range(len(xyz)):
        u, d = _nearest_on_grid(grid, (x[i] - curve.m) / curve.a, (y[i] - curve.c) / curve.a)
        abscissae[i] = curve.a * u + curve.m
        distances[i] = np.hypot(curve.a * d, offset[i])
    logger.debug('oracle evaluated %d points on %d samples', len(xyz), samples)
    return abscissae, distances
