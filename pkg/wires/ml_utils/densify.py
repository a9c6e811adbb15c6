"""
Polyline vertices along a catenary within a chord tolerance.
"""
import logging

import numpy as np
from scipy.optimize import brentq

logger = logging.getLogger(__name__)

COSH_CAP = 1e300


def chord_bound(curve, x, h):
    """
    Upper bound on the deviation of the chord over [x, x + h] from the
    curve: h^2 / 8 times the largest second derivative cosh(u) / a.
    """
    worst = max(abs(x - curve.m), abs(x + h - curve.m)) / curve.a
    with np.errstate(over='ignore'):
        curvature = min(float(np.cosh(worst)), COSH_CAP) / curve.a
    return h * h / 8.0 * curvature


def densify_abscissae(curve, tolerance):
    """
    Greedy in-plane abscissae from x_min to x_max, each step the longest
    whose chord bound stays within tolerance.
    """
    if not tolerance > 0:
        raise ValueError(f'tolerance must be positive, got {tolerance}')
    xs = [curve.x_min]
    x = curve.x_min
    while x < curve.x_max:
        remaining = curve.x_max - x
        if chord_bound(curve, x, remaining) <= tolerance:
            xs.append(curve.x_max)
            break
        h = brentq(lambda step: chord_bound(curve, x, step) - tolerance, 0.0, remaining, xtol=1e-12 * remaining)
        # brentq may land a hair past the root
        bound = chord_bound(curve, x, h)
        while bound > tolerance:
            h *= np.sqrt(tolerance / bound) * (1.0 - 1e-9)
            bound = chord_bound(curve, x, h)
        if not x + h > x:
            logger.warning('step below float resolution at x=%.6g (a=%.6g); closing the span with one chord',
                           x, curve.a)
            xs.append(curve.x_max)
            break
        x += h
        xs.append(x)
    if len(xs) == 1:
        xs.append(curve.x_max)
    return np.array(xs)


def densify(curve, tolerance):
    """
    Args:
        curve: CatenaryCurve with its extent set
        tolerance: largest chord-to-curve deviation, meters

    Returns:
        (k, 3) world vertices on the curve, k >= 2
    """
    xs = densify_abscissae(curve, tolerance)
    logger.debug('densified a=%.2f span %.1f m into %d vertices', curve.a, curve.x_max - curve.x_min, len(xs))
    return curve.point_at(xs)


def chord_deviation(curve, x0, x1, samples=257):
    """Measured largest distance of sampled curve points over [x0, x1] from the chord between them."""
    xs = np.linspace(x0, x1, samples)
    pts = curve.point_at(xs)
    start, end = pts[0], pts[-1]
    chord = end - start
    length = np.linalg.norm(chord)
    if length == 0:
        return float(np.max(np.linalg.norm(pts - start, axis=1)))
    rel = pts - start
    along = np.clip(rel @ chord / length, 0.0, length)
    return float(np.max(np.linalg.norm(rel - np.outer(along, chord / length), axis=1)))
