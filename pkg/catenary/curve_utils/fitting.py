"""
Fit a catenary to a 3D point set.

The points are projected onto a fitted plane, a parabola provides the first
guess, and a Levenberg-Marquardt trust region refines (c, ln a, m) by
minimising the signed normal distance of every point. robust_fit wraps the
whole thing in an outlier-removal loop.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy import optimize

from catenary.curve_utils.closest_point import DEFAULT_REL_TOL, METHODS, closest_abscissae
from catenary.curve_utils.core import CatenaryCurve, points_array
from catenary.curve_utils.cubic import solve_cubic_real_roots
from catenary.curve_utils.planes import fit_tilted_plane, fit_vertical_plane
from catenary.exceptions import (
    InvalidCurveError,
    NotCatenaryError,
    RankError,
    TooFewPointsError,
)

logger = logging.getLogger(__name__)

# stands in for residuals that overflow during a trial step
LARGE_RESIDUAL = 1e100
MIN_STRAIGHT_TOLERANCE = 1e-3


@dataclass(frozen=True)
class ParabolaFit:
    """y = alpha * x^2 + beta * x + gamma with its RMS residual."""
    alpha: float
    beta: float
    gamma: float
    rms: float

    @property
    def convex(self):
        return self.alpha > 0

    def __call__(self, x):
        return (self.alpha * x + self.beta) * x + self.gamma


@dataclass(frozen=True)
class FitConfig:
    deviation_threshold: float = 0.8
    wind_correction: bool = True
    min_wind_span: float = 60.0
    max_deviation_angle: float = 10.0
    max_trust_iterations: int = 200
    gradient_tolerance: float = 1e-12
    min_points: int = 8
    max_outlier_rounds: int = 10
    method: str = 'circle'
    rel_tol: float = DEFAULT_REL_TOL

    def __post_init__(self):
        if not self.deviation_threshold > 0:
            raise ValueError('deviation_threshold must be positive')
        if not 0 < self.max_deviation_angle < 45:
            raise ValueError('max_deviation_angle must lie in (0, 45) degrees')
        if self.min_points < 3:
            raise ValueError('min_points must be at least 3')
        if self.method not in METHODS:
            raise ValueError(f'unknown closest-point method {self.method!r}')


@dataclass(frozen=True)
class TrustRegionResult:
    c: float
    a: float
    m: float
    rms: float
    iterations: int
    converged: bool


@dataclass
class FitResult:
    """Outcome of robust_fit; index arrays refer to the input point order."""
    curve: CatenaryCurve
    inliers: np.ndarray
    outliers: np.ndarray
    rms: float
    max_abs_deviation: float
    iterations: int
    converged: bool
    tilt_degrees: float = 0.0
    wind_fallback: bool = False
    distances: np.ndarray = field(default=None, repr=False)

    def summary(self):
        return {
            'rms': self.rms,
            'max_abs_deviation': self.max_abs_deviation,
            'inliers': int(self.inliers.size),
            'outliers': int(self.outliers.size),
            'iterations': self.iterations,
            'converged': self.converged,
            'tilt_degrees': self.tilt_degrees,
            'wind_fallback': self.wind_fallback,
        }


def fit_parabola(x, y):
    """
    Least-squares parabola through in-plane points.

    Raises:
        RankError: fewer than three distinct abscissae
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.unique(x).size < 3:
        raise RankError('a parabola needs at least three distinct abscissae')
    # centring keeps the Vandermonde system well conditioned for long spans
    shift = x.mean()
    alpha, beta_c, gamma_c = np.polyfit(x - shift, y, 2)
    beta = beta_c - 2.0 * alpha * shift
    gamma = gamma_c - beta_c * shift + alpha * shift * shift
    fit = ParabolaFit(float(alpha), float(beta), float(gamma), 0.0)
    residual = y - fit(x)
    return ParabolaFit(fit.alpha, fit.beta, fit.gamma, float(np.sqrt(np.mean(residual ** 2))))


def validate_parabola(fit, span, tol):
    """
    Reject parabolas that cannot seed a catenary.

    Returns None when accepted, otherwise NotCatenaryError.CONCAVE for
    alpha < 0 or NotCatenaryError.STRAIGHT when the sag over the span,
    alpha * (span / 2)^2, is no more than tol * span.
    """
    if fit.alpha < 0:
        return NotCatenaryError.CONCAVE
    if fit.alpha * (span / 2.0) ** 2 <= tol * span:
        return NotCatenaryError.STRAIGHT
    return None


def init_catenary_from_parabola(fit, x, y):
    """
    Catenary seed (c0, a0, m0) matching slope and curvature of the parabola
    at the point closest to the data centroid.

    The centroid is projected onto the parabola by solving the projection
    cubic; of its real roots the nearest foot is used.
    """
    if fit.alpha <= 0:
        raise NotCatenaryError(NotCatenaryError.CONCAVE)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x_bar, y_bar = x.mean(), y.mean()

    # parabola in coordinates centred on x_bar
    alpha = fit.alpha
    beta = 2.0 * alpha * x_bar + fit.beta
    gamma = fit(x_bar) - y_bar
    scale = 4.0 * alpha * alpha
    roots = solve_cubic_real_roots(
        beta / (2.0 * alpha),
        (beta * beta + 2.0 * alpha * gamma + 1.0) / scale,
        beta * gamma / scale,
    ).roots
    feet = np.array(roots)
    gaps = feet ** 2 + ((alpha * feet + beta) * feet + gamma) ** 2
    foot = float(feet[np.argmin(gaps)])

    slope = 2.0 * alpha * foot + beta
    a0 = np.sqrt(1.0 + slope * slope) / (2.0 * alpha)
    m0 = foot + x_bar - a0 * np.arcsinh(slope)
    with np.errstate(over='ignore'):
        c0 = float(np.mean(y - a0 * np.cosh((x - m0) / a0)))
    if not np.isfinite(c0):
        raise NotCatenaryError(NotCatenaryError.STRAIGHT, 'parabola seed overflows the catenary range')
    return c0, float(a0), float(m0)


def signed_distance(c, a, m, px, py, x_c):
    """
    Signed normal distance of (px, py) from the curve, evaluated at the
    closest abscissa x_c. Negative above the curve.

    Computed as a + (px - x_c) tanh(u) - (py - c) sech(u), u = (x_c - m) / a.
    """
    if a <= 0:
        raise InvalidCurveError(f'scale a must be positive, got {a}')
    u = (np.asarray(x_c, dtype=float) - m) / a
    with np.errstate(over='ignore'):
        sech = 1.0 / np.cosh(u)
    value = a + (np.asarray(px) - x_c) * np.tanh(u) - (np.asarray(py) - c) * sech
    return float(value) if np.ndim(value) == 0 else value


def signed_distance_gradient(c, a, m, px, py, x_c):
    """
    Partial derivatives of signed_distance with x_c held fixed.

    Returns:
        (dF/dc, dF/da_e, dF/dm) where a = exp(a_e)
    """
    if a <= 0:
        raise InvalidCurveError(f'scale a must be positive, got {a}')
    x_c = np.asarray(x_c, dtype=float)
    u = (x_c - m) / a
    with np.errstate(over='ignore'):
        sech = 1.0 / np.cosh(u)
    tanh = np.tanh(u)
    d_c = sech
    d_m = -(sech * tanh * (np.asarray(py) - c) + sech * sech * (np.asarray(px) - x_c)) / a
    d_a = u * d_m + 1.0
    d_ae = d_a * a
    if np.ndim(d_c) == 0:
        return float(d_c), float(d_ae), float(d_m)
    return d_c, d_ae, d_m


class _SignedDistanceProblem:
    """Residuals and Jacobian over theta = (c, ln a, m) with cached closest abscissae."""

    def __init__(self, x, y, method, rel_tol):
        self.x = x
        self.y = y
        self.method = method
        self.rel_tol = rel_tol
        self._theta = None
        self._x_c = None

    def closest(self, theta):
        if self._theta is None or not np.array_equal(theta, self._theta):
            c, a, m = theta[0], np.exp(theta[1]), theta[2]
            u = closest_abscissae((self.x - m) / a, (self.y - c) / a,
                                  method=self.method, rel_tol=self.rel_tol)
            self._theta = np.array(theta, copy=True)
            self._x_c = a * u + m
        return self._x_c

    def residuals(self, theta):
        c, a, m = theta[0], np.exp(theta[1]), theta[2]
        if not (np.isfinite(a) and a > 0):
            return np.full(self.x.shape, LARGE_RESIDUAL)
        try:
            values = signed_distance(c, a, m, self.x, self.y, self.closest(theta))
        except (ArithmeticError, ValueError):
            return np.full(self.x.shape, LARGE_RESIDUAL)
        return np.nan_to_num(values, nan=LARGE_RESIDUAL, posinf=LARGE_RESIDUAL, neginf=-LARGE_RESIDUAL)

    def jacobian(self, theta):
        c, a, m = theta[0], np.exp(theta[1]), theta[2]
        try:
            columns = signed_distance_gradient(c, a, m, self.x, self.y, self.closest(theta))
        except (ArithmeticError, ValueError):
            return np.zeros((self.x.size, 3))
        return np.nan_to_num(np.column_stack(columns), nan=0.0, posinf=0.0, neginf=0.0)


def trust_region_fit(x, y, seed, cfg=None):
    """
    Minimise the sum of squared signed distances over (c, ln a, m).

    Closest abscissae are refreshed whenever the parameters change and held
    fixed for the Jacobian at those parameters.

    Args:
        x, y: in-plane coordinates, at least three points
        seed: (c0, a0, m0) with a0 > 0
        cfg: FitConfig

    Returns:
        TrustRegionResult; on failure the seed is returned with converged=False.
    """
    cfg = cfg or FitConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c0, a0, m0 = seed
    if x.size < 3:
        raise TooFewPointsError('the trust-region fit needs at least three points')
    if not a0 > 0:
        raise InvalidCurveError(f'seed scale must be positive, got {a0}')

    problem = _SignedDistanceProblem(x, y, cfg.method, cfg.rel_tol)
    theta0 = np.array([c0, np.log(a0), m0])
    try:
        result = optimize.least_squares(
            problem.residuals,
            theta0,
            jac=problem.jacobian,
            method='lm',
            xtol=1e-12,
            ftol=1e-12,
            gtol=cfg.gradient_tolerance,
            max_nfev=cfg.max_trust_iterations,
        )
    except Exception as e:
        logger.warning('trust-region fit failed, keeping seed: %s', e)
        residual = problem.residuals(theta0)
        return TrustRegionResult(float(c0), float(a0), float(m0),
                                 float(np.sqrt(np.mean(residual ** 2))), 0, False)

    c, a, m = float(result.x[0]), float(np.exp(result.x[1])), float(result.x[2])
    rms = float(np.sqrt(np.mean(result.fun ** 2)))
    if not result.success:
        logger.debug('trust region stopped without converging: %s', result.message)
    return TrustRegionResult(c, a, m, rms, int(result.nfev), bool(result.success))


def seed_and_refine(x, y, cfg=None):
    """
    Parabola seed checked for shape, then trust-region refinement, for
    points already expressed in their curve plane.

    Raises:
        NotCatenaryError: the parabola is concave or nearly straight
        RankError: fewer than three distinct abscissae
    """
    cfg = cfg or FitConfig()
    parabola = fit_parabola(x, y)
    span = float(np.ptp(x))
    tol = max(cfg.deviation_threshold / span, MIN_STRAIGHT_TOLERANCE) if span > 0 else MIN_STRAIGHT_TOLERANCE
    reason = validate_parabola(parabola, span, tol)
    if reason is not None:
        raise NotCatenaryError(reason)
    return trust_region_fit(x, y, init_catenary_from_parabola(parabola, x, y), cfg)


class CatenaryFitter:
    """
    Fits catenaries to 3D point sets with outlier removal.

    Each round fits a plane, seeds from a parabola and runs the trust-region
    refinement; points farther than the deviation threshold are dropped and
    the fit repeated.
    """

    def __init__(self, config=None):
        """
        Args:
            config: FitConfig, defaults used when omitted
        """
        self.config = config or FitConfig()

    def fit_plane(self, xyz):
        cfg = self.config
        if cfg.wind_correction:
            return fit_tilted_plane(xyz, cfg.max_deviation_angle, cfg.min_wind_span)
        return fit_vertical_plane(xyz), False

    def fit_once(self, xyz):
        """
        One pass of plane, parabola seed and trust region on all points.

        Returns:
            (curve, trust result, wind fallback flag)
        """
        cfg = self.config
        frame, fallback = self.fit_plane(xyz)
        x, y, _ = frame.to_plane(xyz)
        trust = seed_and_refine(x, y, cfg)
        curve = CatenaryCurve(frame, trust.c, trust.a, trust.m, float(x.min()), float(x.max()))
        return curve, trust, fallback

    def distances(self, curve, xyz):
        """Closest in-plane abscissae and 3D distances of xyz to curve."""
        x, y, offset = curve.frame.to_plane(xyz)
        u = closest_abscissae((x - curve.m) / curve.a, (y - curve.c) / curve.a,
                              method=self.config.method, rel_tol=self.config.rel_tol)
        x_c = curve.a * u + curve.m
        in_plane = signed_distance(curve.c, curve.a, curve.m, x, y, x_c)
        return x_c, np.sqrt(np.asarray(in_plane) ** 2 + offset ** 2)

    def fit(self, points):
        """
        Robust catenary fit.

        Args:
            points: (n, 3) array or iterable of Point3

        Returns:
            FitResult

        Raises:
            TooFewPointsError, NotCatenaryError, DegenerateGeometryError, RankError
        """
        cfg = self.config
        xyz = points_array(points)
        n = len(xyz)
        if n < cfg.min_points:
            raise TooFewPointsError(f'{n} points, at least {cfg.min_points} needed')

        active = np.arange(n)
        iterations = 0
        curve = trust = fallback = None
        for round_no in range(cfg.max_outlier_rounds):
            curve, trust, fallback = self.fit_once(xyz[active])
            iterations += trust.iterations
            _, dist = self.distances(curve, xyz[active])
            keep = dist <= cfg.deviation_threshold
            if keep.all():
                break
            if np.count_nonzero(keep) < cfg.min_points:
                logger.debug('outlier removal stopped: only %d inliers left', np.count_nonzero(keep))
                break
            logger.debug('outlier round %d drops %d of %d points',
                         round_no + 1, np.count_nonzero(~keep), active.size)
            active = active[keep]

        x_c, dist = self.distances(curve, xyz)
        inlier_mask = dist <= cfg.deviation_threshold
        inliers = np.flatnonzero(inlier_mask)
        outliers = np.flatnonzero(~inlier_mask)
        if not inliers.size:
            raise TooFewPointsError('no point lies within the deviation threshold of the fit')
        curve = curve.with_extent(float(x_c[inliers].min()), float(x_c[inliers].max()))
        inlier_dist = dist[inliers]
        rms = float(np.sqrt(np.mean(inlier_dist ** 2)))
        result = FitResult(
            curve=curve,
            inliers=inliers,
            outliers=outliers,
            rms=rms,
            max_abs_deviation=float(inlier_dist.max()),
            iterations=iterations,
            converged=trust.converged,
            tilt_degrees=curve.frame.tilt_degrees,
            wind_fallback=fallback,
            distances=dist,
        )
        logger.debug('fit %d points: a=%.3f rms=%.4f outliers=%d converged=%s',
                     n, curve.a, rms, outliers.size, trust.converged)
        return result


def robust_fit(points, cfg=None):
    """Fit a catenary to points with outlier removal; see CatenaryFitter.fit."""
    return CatenaryFitter(cfg).fit(points)

