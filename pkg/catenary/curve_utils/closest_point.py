"""
Closest point on the canonical catenary y = cosh(x).

A point p is first bracketed between two consecutive abscissae of a fixed grid
x_i = i * k using the sign of the tangent projection; the bracket seeds an
iteration (osculating circle or osculating parabola) that converges to the
foot of the perpendicular. Points are mirrored to x >= 0 and the result is
mirrored back.

All internal helpers work element-wise on arrays so the fitting code can
project thousands of points in one call; the public scalar functions are thin
wrappers over the same code path.
"""
import logging
import math

import numpy as np

from catenary.curve_utils.core import (
    CanonicalPoint,
    Point3,
    parabola_arc_length,
    require_finite,
    to_canonical,
)
from catenary.curve_utils.cubic import solve_cubic_largest_root
from catenary.exceptions import CurveOverflowError

logger = logging.getLogger(__name__)

PARTITION_SPACING = 0.25
INSTABILITY_RADIUS = 1e-7
MAX_ITERATIONS = 20
DEFAULT_REL_TOL = 1e-10
MIN_REL_TOL = 1e-12
BISECTION_ITERATIONS = 200
# asinh(largest double): cosh/sinh overflow beyond this abscissa
ASINH_MAX = float(np.arcsinh(np.finfo(float).max))
# below this l_c / 2r the chord equals the arc to double precision
ARCSIN_CUTOFF = 2.14911933289082095e-08

METHODS = ('circle', 'parabola', 'bisection')


def normal_side(t, px, py):
    """
    Projection of p - P(t) on the unit tangent at P(t) = (t, cosh t).

    Non-negative when the closest abscissa is >= t.
    """
    with np.errstate(over='ignore', invalid='ignore'):
        sech = 1.0 / np.cosh(t)
        return sech * (px - t) + np.tanh(t) * py - np.sinh(t)


def _partition_bounds(px, py, k):
    """Grid indices that certainly enclose the closest abscissa (px >= 0)."""
    with np.errstate(invalid='ignore'):
        level = np.arccosh(np.maximum(py, 1.0))
    above_vertex = py > 1.0
    lo_x = np.where(above_vertex, np.minimum(px, level), 0.0)
    hi_x = np.where(above_vertex, np.maximum(px, level), px)
    hi_x = np.minimum(hi_x, ASINH_MAX)
    lo = np.floor(lo_x / k)
    hi = np.ceil(hi_x / k)
    top = math.floor(ASINH_MAX / k)
    lo = np.minimum(lo, top - 1)
    hi = np.clip(np.maximum(hi, lo + 1), None, top)
    return lo.astype(np.int64), hi.astype(np.int64)


def _locate_partitions(px, py, k):
    lo, hi = _partition_bounds(px, py, k)
    while True:
        open_ = hi - lo > 1
        if not open_.any():
            break
        mid = (lo + hi) // 2
        right = normal_side(mid * k, px, py) >= 0
        lo = np.where(open_ & right, mid, lo)
        hi = np.where(open_ & ~right, mid, hi)
    return lo


def locate_normal_partition(p, k=PARTITION_SPACING):
    """
    Index pair (i, i + 1) of the grid x_i = i * k whose normals enclose p.

    p must lie at x >= 0. A point exactly on the normal of x_i reports (i, i + 1).
    """
    px, py = p
    require_finite(px, py)
    if px < 0:
        raise ValueError('locate_normal_partition expects x >= 0')
    i = int(_locate_partitions(np.float64(px), np.float64(py), k))
    return i, i + 1


def _initial_guess(px, py, lo, k):
    xa = lo * k
    xb = xa + k
    da = np.abs(normal_side(xa, px, py))
    db = np.abs(normal_side(xb, px, py))
    total = da + db
    with np.errstate(invalid='ignore', divide='ignore', over='ignore'):
        ratio = np.where(total > 0, da / total, 0.5)
        sa, sb = np.sinh(xa), np.sinh(xb)
        guess = np.arcsinh(sa + ratio * (sb - sa))
    return np.where(np.isfinite(guess), guess, (xa + xb) / 2.0)


def initial_guess(p, bracket, k=PARTITION_SPACING):
    """
    Start abscissa interpolated between the bracketing grid points.

    The tangent-projection magnitudes at both ends weight the interpolation,
    which is done in arc length so the guess stays inside the bracket.
    """
    px, py = p
    return float(_initial_guess(np.float64(px), np.float64(py), bracket[0], k))


def _walk(x, signed_length):
    with np.errstate(over='ignore', invalid='ignore'):
        return np.arcsinh(np.sinh(x) + signed_length)


def _parabola_step(px, py, xc):
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        ch = np.cosh(xc)
        sech = 1.0 / ch
        tanh = np.tanh(xc)
        a = tanh
        b = 2.0 - py * sech
        c = (xc - px) * sech * sech + (1.0 - py * sech) * tanh
        finite = np.isfinite(a) & np.isfinite(b) & np.isfinite(c) & np.isfinite(ch)
    if not finite.all():
        result = np.full(np.shape(xc), np.nan)
        if finite.any():
            result[finite] = _parabola_step(px[finite], py[finite], xc[finite])
        return result
    dx = solve_cubic_largest_root(a, b, c)
    dx = np.atleast_1d(dx)
    half_ch = np.atleast_1d(0.5 * ch)
    sh = np.atleast_1d(np.sinh(xc))
    length = np.zeros_like(dx)
    moved = dx != 0
    if moved.any():
        try:
            length[moved] = parabola_arc_length(0.0, dx[moved], half_ch[moved], sh[moved])
        except CurveOverflowError:
            return np.full(np.shape(xc), np.nan)
    return _walk(np.atleast_1d(xc), length).reshape(np.shape(xc))


def parabola_step(p, x_c):
    """
    One osculating-parabola step from x_c.

    The curve is replaced by its second-order Taylor parabola at x_c; the
    foot of the perpendicular on that parabola is the largest real root of a
    cubic, and its parabola arc length is walked along the catenary.
    """
    px, py = p
    require_finite(px, py, x_c)
    return float(_parabola_step(np.array([px], dtype=float), np.array([py], dtype=float),
                                np.array([x_c], dtype=float))[0])


def _circle_step(px, py, xc):
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        ch = np.cosh(xc)
        xn = np.tanh(xc)
        yn = -1.0 / ch
        dx = px - xc
        dy = py - ch
        xr = xn * dx + yn * dy
        yr = -yn * dx + xn * dy
        r = ch * ch
        den = r + xr
        q = yr / den
        cos_term = np.where(den != 0, np.copysign(1.0 / np.sqrt(1.0 + q * q), den), 0.0)
        first = r * (cos_term - 1.0)
        second = yr / np.sqrt((1.0 + xr / r) ** 2 + (yr / r) ** 2)
        chord = np.hypot(first, second)
        ratio = chord / (2.0 * r)
        arc = np.where(ratio > ARCSIN_CUTOFF, 2.0 * r * np.arcsin(np.minimum(ratio, 1.0)), chord)
        # radius beyond floating range: the circle is locally the tangent line
        arc = np.where(np.isfinite(r), arc, np.abs(yr))
        # p at the circle centre: every direction is a foot
        arc = np.where((den == 0) & (yr == 0), 0.0, arc)
        return _walk(xc, np.copysign(arc, yr))


def circle_step(p, x_c):
    """
    One osculating-circle step from x_c.

    p is rotated into the frame of the curve normal at x_c, projected radially
    onto the osculating circle (radius cosh^2 x_c), and the circle arc length
    to the projection is walked along the catenary.
    """
    px, py = p
    require_finite(px, py, x_c)
    return float(_circle_step(np.float64(px), np.float64(py), np.float64(x_c)))


def _bisect(px, py, lo, hi, rel_tol):
    """Continuous bisection on the tangent projection between lo and hi."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(BISECTION_ITERATIONS):
        open_ = (hi - lo) > rel_tol * np.maximum(1.0, np.abs(lo))
        if not open_.any():
            break
        mid = 0.5 * (lo + hi)
        right = normal_side(mid, px, py) >= 0
        lo = np.where(open_ & right, mid, lo)
        hi = np.where(open_ & ~right, mid, hi)
    return 0.5 * (lo + hi)


_STEPS = {'circle': _circle_step, 'parabola': _parabola_step}


def closest_abscissae(xs, ys, method='circle', rel_tol=DEFAULT_REL_TOL, k=PARTITION_SPACING,
                      max_iterations=MAX_ITERATIONS, fallback=True, return_iterations=False):
    """
    Closest abscissa on y = cosh(x) for every canonical point (xs[i], ys[i]).

    Args:
        xs, ys: canonical coordinates (arrays of equal length).
        method: 'circle', 'parabola' or 'bisection'.
        rel_tol: stop once |dx| <= rel_tol * max(1, |x|).
        max_iterations: iteration cap before falling back to bisection.
        fallback: bisect the remaining bracket when the iteration does not settle.
        return_iterations: also return the per-point iteration count.

    Returns:
        Array of abscissae (and iteration counts when requested).
    """
    if method not in METHODS:
        raise ValueError(f'unknown closest-point method {method!r}')
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    require_finite(xs, ys)
    sign = np.where(xs < 0, -1.0, 1.0)
    px = np.abs(xs)

    result = np.zeros_like(px)
    iterations = np.zeros(px.shape, dtype=np.int64)
    snapped = (px == 0) | (np.hypot(px, ys - 2.0) <= INSTABILITY_RADIUS)
    todo = np.flatnonzero(~snapped)
    if todo.size:
        tx, ty = px[todo], ys[todo]
        lo = _locate_partitions(tx, ty, k)
        if method == 'bisection':
            x = _bisect(tx, ty, lo * k, (lo + 1) * k, rel_tol)
            count = np.zeros(todo.size, dtype=np.int64)
        else:
            x, count, pending = _iterate(_STEPS[method], tx, ty, _initial_guess(tx, ty, lo, k),
                                         rel_tol, max_iterations)
            if fallback and pending.any():
                logger.debug('closest point: %d of %d points fell back to bisection',
                             int(pending.sum()), todo.size)
                x[pending] = _bisect(tx[pending], ty[pending], lo[pending] * k,
                                     (lo[pending] + 1) * k, rel_tol)
        result[todo] = x
        iterations[todo] = count

    result = sign * result
    if return_iterations:
        return result, iterations
    return result


def _iterate(step, px, py, x0, rel_tol, max_iterations):
    x = x0.copy()
    count = np.zeros(x.shape, dtype=np.int64)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iterations):
        idx = np.flatnonzero(active)
        if not idx.size:
            break
        x_new = step(px[idx], py[idx], x[idx])
        bad = ~np.isfinite(x_new)
        done = np.abs(x_new - x[idx]) <= rel_tol * np.maximum(1.0, np.abs(x_new))
        x[idx] = np.where(bad, x[idx], x_new)
        count[idx] += 1
        active[idx[done & ~bad]] = False
        # diverged points keep their last finite value and go to bisection
        active[idx[bad]] = False
        count[idx[bad]] = max_iterations + 1
    pending = active | (count > max_iterations)
    return x, np.minimum(count, max_iterations), pending


def solve_closest_abscissa(p, method='circle', rel_tol=DEFAULT_REL_TOL):
    """Closest abscissa for one canonical point, with the number of iterations used."""
    if rel_tol < MIN_REL_TOL:
        raise ValueError(f'rel_tol must be >= {MIN_REL_TOL}')
    px, py = p
    x, count = closest_abscissae([px], [py], method=method, rel_tol=rel_tol, return_iterations=True)
    return float(x[0]), int(count[0])


def closest_point_canonical(p, method='circle', rel_tol=DEFAULT_REL_TOL):
    """
    Closest point of y = cosh(x) to canonical point p.

    Points on the y axis, and points within 1e-7 of (0, 2) where the normals
    of both branches meet, resolve to the vertex (0, 1).
    """
    x, _ = solve_closest_abscissa(p, method=method, rel_tol=rel_tol)
    return CanonicalPoint(x, math.cosh(x))


def project_points(curve, xyz, method='circle', rel_tol=DEFAULT_REL_TOL):
    """
    Closest in-plane abscissa and 3D distance of world points to a curve.

    Returns (abscissae, distances) as arrays; distances combine the in-plane
    residual with the offset from the curve plane.
    """
    x, y, offset = curve.frame.to_plane(xyz)
    u = closest_abscissae((x - curve.m) / curve.a, (y - curve.c) / curve.a,
                          method=method, rel_tol=rel_tol)
    x_c = curve.a * u + curve.m
    with np.errstate(over='ignore'):
        y_c = curve.c + curve.a * np.cosh(u)
    distances = np.sqrt((x - x_c) ** 2 + (y - y_c) ** 2 + offset ** 2)
    return x_c, distances


def closest_point_3d(curve, p, method='circle'):
    """
    Closest point of `curve` to world point p.

    Returns (point, distance, x) where x is the in-plane abscissa of the
    closest point.
    """
    xyz = p.as_array() if isinstance(p, Point3) else np.asarray(p, dtype=float)
    require_finite(xyz)
    in_x, in_y, offset = curve.frame.to_plane(xyz)
    canonical = to_canonical(curve, (in_x[0], in_y[0]))
    foot = closest_point_canonical(canonical, method=method)
    x_c = curve.a * foot.x + curve.m
    y_c = curve.a * foot.y + curve.c
    point = curve.frame.to_world(x_c, y_c)
    distance = float(np.sqrt((in_x[0] - x_c) ** 2 + (in_y[0] - y_c) ** 2 + offset[0] ** 2))
    return Point3.from_array(point), distance, float(x_c)
