"""
Real roots of x^3 + 3a x^2 + 2b x + 2c = 0.

The closed form (trigonometric branch when three real roots exist, the
A + B branch otherwise) is followed by a short Laguerre polish so the
returned roots sit within a few ulps of a true root.
"""
from dataclasses import dataclass
import math

import numpy as np

from catenary.curve_utils.core import require_finite

LAGUERRE_MAX_ITERATIONS = 8


@dataclass(frozen=True)
class CubicRealRoots:
    """One or three real roots in ascending order (a double root is repeated)."""
    count: int
    roots: tuple

    @property
    def largest(self):
        return self.roots[-1]


def _monic(a, b, c):
    """Coefficients of the monic cubic x^3 + A2 x^2 + A1 x + A0."""
    return 3.0 * np.asarray(a, dtype=float), 2.0 * np.asarray(b, dtype=float), 2.0 * np.asarray(c, dtype=float)


def _evaluate(x, a2, a1, a0):
    return ((x + a2) * x + a1) * x + a0


def _invariants(a, b, c):
    q = a * a - (2.0 / 3.0) * b
    r = a * a * a - a * b + c
    return q, r


def polish_roots(x, a, b, c, max_iterations=LAGUERRE_MAX_ITERATIONS):
    """
    Laguerre iterations on roots of the cubic, element-wise.

    Each element stops as soon as its residual would grow, or after
    max_iterations steps.
    """
    a2, a1, a0 = _monic(a, b, c)
    x = np.array(x, dtype=float, copy=True)
    x, a2, a1, a0 = np.broadcast_arrays(x, a2, a1, a0)
    x = x.copy()
    active = np.ones(x.shape, dtype=bool)
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        for _ in range(max_iterations):
            p = _evaluate(x, a2, a1, a0)
            active &= p != 0
            if not active.any():
                break
            dp = (3.0 * x + 2.0 * a2) * x + a1
            d2p = 6.0 * x + 2.0 * a2
            g = dp / p
            h = g * g - d2p / p
            root = np.sqrt(np.maximum(2.0 * (3.0 * h - g * g), 0.0))
            denom = np.where(g >= 0, g + root, g - root)
            step = np.where(denom != 0, 3.0 / denom, 0.0)
            candidate = x - step
            improved = np.abs(_evaluate(candidate, a2, a1, a0)) < np.abs(p)
            improved &= np.isfinite(candidate)
            active &= improved
            x = np.where(active, candidate, x)
    return x


def solve_cubic_largest_root(a, b, c):
    """
    Largest real root of x^3 + 3a x^2 + 2b x + 2c = 0.

    Works element-wise on arrays; returns a float for scalar input.
    """
    require_finite(a, b, c)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    q, r = _invariants(a, b, c)
    with np.errstate(invalid='ignore', divide='ignore', over='ignore'):
        q3 = q * q * q
        three_real = r * r < q3
        sqrt_q = np.sqrt(np.where(three_real, q, 1.0))
        theta = np.arccos(np.clip(-r / (sqrt_q * sqrt_q * sqrt_q), -1.0, 1.0))
        trig_root = 2.0 * sqrt_q * np.cos(theta / 3.0) - a

        big_a = -np.copysign(1.0, r) * np.cbrt(np.abs(r) + np.sqrt(np.maximum(r * r - q3, 0.0)))
        big_b = np.where(big_a != 0, q / big_a, 0.0)
        single_root = big_a + big_b - a
    x = np.where(three_real, trig_root, single_root)
    x = polish_roots(x, a, b, c)
    if np.ndim(x) == 0:
        return float(x)
    return x


def solve_cubic_real_roots(a, b, c):
    """All real roots of x^3 + 3a x^2 + 2b x + 2c = 0 for scalar coefficients."""
    require_finite(a, b, c)
    a, b, c = float(a), float(b), float(c)
    q, r = _invariants(a, b, c)
    q3 = q * q * q
    if r * r < q3:
        sqrt_q = math.sqrt(q)
        theta = math.acos(max(-1.0, min(1.0, -r / (sqrt_q * sqrt_q * sqrt_q))))
        roots = [2.0 * sqrt_q * math.cos((theta - 2.0 * math.pi * k) / 3.0) - a for k in range(3)]
    else:
        big_a = -math.copysign(1.0, r) * np.cbrt(abs(r) + math.sqrt(max(r * r - q3, 0.0)))
        big_b = q / big_a if big_a != 0 else 0.0
        roots = [big_a + big_b - a]
        if r * r == q3:
            # double root; q == 0 collapses everything to the triple root -a
            roots += [-(big_a + big_b) / 2.0 - a] * 2
    polished = polish_roots(np.array(roots), a, b, c)
    ordered = tuple(sorted(float(root) for root in polished))
    return CubicRealRoots(count=len(ordered), roots=ordered)
