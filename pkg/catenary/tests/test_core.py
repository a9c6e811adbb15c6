import math

import numpy as np
from django.test import SimpleTestCase
from scipy import integrate

from catenary.curve_utils.core import (
    CatenaryCurve,
    PlaneFrame,
    catenary_arc_length,
    evaluate,
    from_canonical,
    normal_axis_intercept,
    parabola_arc_length,
    point_at_arc_length,
    to_canonical,
)
from catenary.exceptions import (
    CurveOverflowError,
    DegenerateParabolaError,
    InvalidCurveError,
    NonFiniteInputError,
)


class EvaluateTests(SimpleTestCase):
    def test_canonical_vertex(self):
        self.assertEqual(evaluate(CatenaryCurve.planar(0, 1, 0), 0.0), 1.0)

    def test_shifted_vertex(self):
        self.assertAlmostEqual(evaluate(CatenaryCurve.planar(2, 3, 1), 1.0), 5.0, places=14)

    def test_known_value(self):
        self.assertAlmostEqual(evaluate(CatenaryCurve.planar(0, 1, 0), 1.13), 1.7093448782734821, places=15)

    def test_array_input(self):
        values = evaluate(CatenaryCurve.planar(0, 1, 0), np.array([-1.0, 0.0, 1.0]))
        np.testing.assert_allclose(values, [math.cosh(1), 1.0, math.cosh(1)])

    def test_overflow(self):
        with self.assertRaises(CurveOverflowError):
            evaluate(CatenaryCurve.planar(0, 1, 0), 1000.0)

    def test_non_finite_input(self):
        with self.assertRaises(NonFiniteInputError):
            evaluate(CatenaryCurve.planar(0, 1, 0), float('nan'))


class CurveValidationTests(SimpleTestCase):
    def test_non_positive_scale(self):
        with self.assertRaises(InvalidCurveError):
            CatenaryCurve.planar(0, 0, 0)
        with self.assertRaises(InvalidCurveError):
            CatenaryCurve.planar(0, -2, 0)

    def test_inverted_extent(self):
        with self.assertRaises(InvalidCurveError):
            CatenaryCurve.planar(0, 1, 0, x_min=2, x_max=1)

    def test_frame_must_be_orthonormal(self):
        with self.assertRaises(InvalidCurveError):
            PlaneFrame([0, 0, 0], [1, 0, 0], [1, 0, 1], [0, 1, 0])

    def test_vertical_frame_axes(self):
        frame = PlaneFrame.vertical([0, 0, 0], [0, 1])
        np.testing.assert_allclose(frame.axis_x, [1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(frame.axis_y, [0, 0, 1], atol=1e-15)
        self.assertEqual(frame.tilt_degrees, 0.0)

    def test_dict_round_trip(self):
        frame = PlaneFrame.vertical([1.5, -2.0, 30.0], [0.6, 0.8])
        curve = CatenaryCurve(frame, 12.5, 340.0, -3.25, -40.0, 55.0)
        restored = CatenaryCurve.from_dict(curve.to_dict())
        self.assertEqual((restored.c, restored.a, restored.m), (12.5, 340.0, -3.25))
        self.assertEqual((restored.x_min, restored.x_max), (-40.0, 55.0))
        np.testing.assert_array_equal(restored.frame.normal, frame.normal)

    def test_length_matches_sinh_difference(self):
        curve = CatenaryCurve.planar(0, 50, 10, x_min=-40, x_max=60)
        expected = 50 * (math.sinh(50 / 50) - math.sinh(-50 / 50))
        self.assertAlmostEqual(curve.length, expected, places=9)


class CanonicalTransformTests(SimpleTestCase):
    def test_identity(self):
        p = to_canonical(CatenaryCurve.planar(0, 1, 0), (2, 3))
        self.assertEqual((p.x, p.y), (2, 3))

    def test_vertex_maps_to_origin(self):
        p = to_canonical(CatenaryCurve.planar(1, 2, 3), (3, 1))
        self.assertEqual((p.x, p.y), (0, 0))

    def test_dilation(self):
        p = to_canonical(CatenaryCurve.planar(-1, 0.5, 2), (2.5, 0))
        self.assertAlmostEqual(p.x, 1.0)
        self.assertAlmostEqual(p.y, 2.0)

    def test_from_canonical(self):
        self.assertEqual(from_canonical(CatenaryCurve.planar(0, 1, 0), (0, 1)), (0, 1))
        self.assertEqual(from_canonical(CatenaryCurve.planar(1, 2, 3), (0, 1)), (3, 3))

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            curve = CatenaryCurve.planar(rng.uniform(-50, 50), rng.uniform(0.5, 50), rng.uniform(-50, 50))
            p = rng.uniform(-100, 100, size=2)
            back = from_canonical(curve, to_canonical(curve, p))
            np.testing.assert_allclose(back, p, rtol=1e-12, atol=1e-11)


class NormalAxisInterceptTests(SimpleTestCase):
    def test_limit_at_zero(self):
        self.assertEqual(normal_axis_intercept(0.0), 2.0)
        self.assertAlmostEqual(normal_axis_intercept(1e-12), 2.0, delta=1e-9)

    def test_value_at_one(self):
        self.assertAlmostEqual(normal_axis_intercept(1.0), math.cosh(1) + 1 / math.sinh(1), places=14)

    def test_even(self):
        xs = np.linspace(0.01, 20, 500)
        np.testing.assert_array_equal(normal_axis_intercept(xs), normal_axis_intercept(-xs))

    def test_strictly_increasing(self):
        xs = np.linspace(0, 20, 10001)[1:]
        self.assertTrue(np.all(np.diff(normal_axis_intercept(xs)) > 0))


class ArcLengthTests(SimpleTestCase):
    def test_catenary_lengths(self):
        self.assertEqual(catenary_arc_length(0, 0), 0)
        self.assertAlmostEqual(catenary_arc_length(0, 1), 1.1752011936438014, places=14)
        self.assertAlmostEqual(catenary_arc_length(-1, 1), 2 * math.sinh(1), places=14)

    def test_walk(self):
        self.assertEqual(point_at_arc_length(0, 0), 0)
        self.assertAlmostEqual(point_at_arc_length(1, -math.sinh(1)), 0.0, places=14)
        self.assertAlmostEqual(point_at_arc_length(0.5, catenary_arc_length(0.5, 2.0)), 2.0, places=13)

    def test_walk_inverts_length(self):
        rng = np.random.default_rng(11)
        x0 = rng.uniform(-5, 5, 200)
        x1 = rng.uniform(-5, 5, 200)
        signed = np.sign(x1 - x0) * catenary_arc_length(x0, x1)
        np.testing.assert_allclose(point_at_arc_length(x0, signed), x1, rtol=1e-12, atol=1e-12)

    def test_parabola_unit_case(self):
        expected = (math.sqrt(2) + math.log(1 + math.sqrt(2))) / 2
        self.assertAlmostEqual(parabola_arc_length(0, 1, 0.5, 0), expected, places=14)
        self.assertAlmostEqual(expected, 1.1477935747, places=9)

    def test_parabola_zero_and_antisymmetry(self):
        self.assertEqual(parabola_arc_length(0.7, 0.7, 2.0, -1.0), 0)
        forward = parabola_arc_length(-0.3, 1.9, -1.5, 0.4)
        self.assertAlmostEqual(parabola_arc_length(1.9, -0.3, -1.5, 0.4), -forward, places=14)

    def test_parabola_matches_quadrature(self):
        rng = np.random.default_rng(3)
        checked = 0
        while checked < 300:
            x0, x1 = rng.uniform(-5, 5, 2)
            if abs(x1 - x0) < 0.1:
                continue
            a = rng.choice([-1, 1]) * rng.uniform(0.1, 3)
            b = rng.uniform(-3, 3)
            expected, _ = integrate.quad(lambda t: math.hypot(1.0, 2 * a * t + b), x0, x1,
                                         epsabs=0, epsrel=1e-13, limit=200)
            self.assertAlmostEqual(parabola_arc_length(x0, x1, a, b) / expected, 1.0, delta=1e-10)
            checked += 1

    def test_degenerate_parabola(self):
        with self.assertRaises(DegenerateParabolaError):
            parabola_arc_length(0, 1, 0, 2)
