import unittest
from fractions import Fraction

import numpy as np
from pydantic import ValidationError

from errors import GeometryError
from models import BumpSpec, RationalCell
from plateau import (
    default_profile,
    plateau_1d_eval,
    plateau_2d_eval,
    psi_array,
    psi_eval,
    quadrant_digit,
    step_1d_eval,
    step_2d_eval,
    sup_norms,
    transition,
)


class TransitionTests(unittest.TestCase):
    def test_endpoints_and_midpoint(self):
        self.assertEqual(float(transition(0.0)), 0.0)
        self.assertEqual(float(transition(1.0)), 1.0)
        self.assertEqual(float(transition(0.5)), 0.5)
        self.assertAlmostEqual(float(transition(0.5, 1)), 2.0, places=12)

    def test_flat_at_both_ends(self):
        for order in (1, 2):
            self.assertEqual(float(transition(0.0, order)), 0.0)
            self.assertEqual(float(transition(1.0, order)), 0.0)
            self.assertEqual(float(transition(-3.0, order)), 0.0)
            self.assertEqual(float(transition(4.0, order)), 0.0)

    def test_symmetry_and_range(self):
        t = np.linspace(0.0, 1.0, 1001)
        g = transition(t)
        np.testing.assert_allclose(g + transition(1.0 - t), 1.0, atol=1e-14)
        self.assertTrue(np.all((g >= 0.0) & (g <= 1.0)))

    def test_shape_is_preserved(self):
        self.assertEqual(transition(np.zeros((3, 4))).shape, (3, 4))
        self.assertEqual(transition(0.25).shape, ())

    def test_rejects_unknown_order(self):
        with self.assertRaises(ValueError):
            transition(0.5, 3)

    def test_second_derivative_matches_finite_difference(self):
        t, h = 0.3, 1e-5
        fd = (float(transition(t + h, 1)) - float(transition(t - h, 1))) / (2 * h)
        self.assertAlmostEqual(float(transition(t, 2)), fd, places=5)


class ProfileTests(unittest.TestCase):
    def test_constants(self):
        profile = default_profile()
        self.assertGreaterEqual(profile.g1, 2.0 - 1e-12)
        self.assertGreater(profile.g2, 0.0)
        self.assertGreater(profile.g1_upper, profile.g1)
        # the dense grid never beats the refined maximum
        grid = np.linspace(0.0, 1.0, 4097)
        self.assertLessEqual(np.abs(transition(grid, 1)).max(), profile.g1 + 1e-12)
        self.assertLessEqual(np.abs(transition(grid, 2)).max(), profile.g2 + 1e-12)
        self.assertTrue(0.0 < profile.peak < 1.0)


class BumpTests(unittest.TestCase):
    def setUp(self):
        self.spec = BumpSpec(a=1, b=Fraction(1, 2))

    def test_plateau_and_outside_are_exact(self):
        inside = psi_eval(self.spec, Fraction(0))
        self.assertEqual(inside, 1)
        self.assertIsInstance(inside, int)
        self.assertEqual(psi_eval(self.spec, 2), 0)
        self.assertEqual(psi_eval(self.spec, Fraction(1, 4), order=1), 0)

    def test_transition_midpoint(self):
        self.assertEqual(psi_eval(self.spec, Fraction(3, 4)), 0.5)
        self.assertAlmostEqual(psi_eval(self.spec, Fraction(3, 4), order=1), -4.0, places=10)
        self.assertAlmostEqual(psi_eval(self.spec, Fraction(-3, 4), order=1), 4.0, places=10)

    def test_even_and_scaling(self):
        wide = BumpSpec(a=2, b=1)
        for x in np.linspace(-1.2, 1.2, 49):
            self.assertEqual(psi_eval(self.spec, x), psi_eval(self.spec, -x))
            self.assertAlmostEqual(float(psi_eval(wide, 2 * x)), float(psi_eval(self.spec, x)), places=12)

    def test_array_path_matches_scalar(self):
        u = np.linspace(-1.1, 1.1, 37)
        for order in (0, 1, 2):
            expected = [float(psi_eval(self.spec, x, order)) for x in u]
            np.testing.assert_allclose(psi_array(1.0, 0.5, u, order), expected, atol=1e-12)

    def test_derivative_converges_at_second_order(self):
        x = np.linspace(0.6, 0.9, 31)
        exact = psi_array(1.0, 0.5, x, 1)

        def error(h):
            central = (psi_array(1.0, 0.5, x + h, 0) - psi_array(1.0, 0.5, x - h, 0)) / (2 * h)
            return np.abs(central - exact).max()

        order = np.log2(error(1e-3) / error(5e-4))
        self.assertGreaterEqual(order, 1.9)

    def test_invalid_spec_rejected(self):
        with self.assertRaises(ValidationError):
            BumpSpec(a=Fraction(1, 2), b=Fraction(1, 2))
        with self.assertRaises(ValidationError):
            BumpSpec(a=1, b=-1)

    def test_sup_norms_scale(self):
        g1, g2 = default_profile().g1, default_profile().g2
        self.assertEqual(sup_norms(BumpSpec(a=1, b=0)), (1.0, g1, g2))
        _, narrow, _ = sup_norms(BumpSpec(a=1, b=0))
        _, wide, _ = sup_norms(BumpSpec(a=2, b=0))
        self.assertAlmostEqual(wide / narrow, 0.5)
        self.assertAlmostEqual(sup_norms(self.spec)[1], 2 * g1)


class CellFunctionTests(unittest.TestCase):
    def setUp(self):
        self.interval = RationalCell.unit(1)
        self.square = RationalCell.unit(2)
        self.s = Fraction(1, 8)

    def test_plateau_1d(self):
        self.assertEqual(plateau_1d_eval(self.interval, self.s, Fraction(1, 2)), 1)
        self.assertEqual(plateau_1d_eval(self.interval, self.s, 0), 0)
        value = plateau_1d_eval(self.interval, self.s, Fraction(1, 16))
        self.assertTrue(0.0 < value < 1.0)
        self.assertEqual(value, psi_eval(BumpSpec(a=Fraction(1, 2), b=Fraction(3, 8)), Fraction(-7, 16)))

    def test_plateau_2d(self):
        centre = (Fraction(1, 2), Fraction(1, 2))
        self.assertEqual(plateau_2d_eval(self.square, self.s, centre), 1)
        self.assertEqual(plateau_2d_eval(self.square, self.s, (Fraction(0), Fraction(1, 3))), 0)
        self.assertEqual(plateau_2d_eval(self.square, self.s, centre, order=1), (0, 0))

    def test_margin_out_of_range(self):
        with self.assertRaises(GeometryError):
            plateau_1d_eval(self.interval, Fraction(1, 2), Fraction(1, 3))
        with self.assertRaises(GeometryError):
            step_1d_eval(self.interval, Fraction(1, 4), Fraction(3, 4))
        with self.assertRaises(GeometryError):
            step_2d_eval(self.square, 0, (Fraction(3, 4), Fraction(1, 4)))

    def test_step_1d(self):
        self.assertEqual(step_1d_eval(self.interval, self.s, Fraction(1, 4)), 0)
        self.assertEqual(step_1d_eval(self.interval, self.s, Fraction(3, 4)), 1)
        self.assertEqual(step_1d_eval(self.interval, self.s, Fraction(1, 2)), 0)

    def test_step_2d_quadrant_numbering(self):
        q = Fraction(1, 4)
        cases = {(3 * q, 3 * q): 0, (q, 3 * q): 1, (q, q): 2, (3 * q, q): 3}
        for point, expected in cases.items():
            self.assertEqual(step_2d_eval(self.square, self.s, point), expected)
            self.assertEqual(step_2d_eval(self.square, self.s, point, order=1), (0, 0))

    def test_step_2d_sup_is_three(self):
        ticks = [Fraction(k, 64) for k in range(65)]
        values = [step_2d_eval(self.square, self.s, (x, y)) for x in ticks[::4] for y in ticks[::4]]
        self.assertEqual(max(values), 3)
        self.assertGreaterEqual(min(values), 0)

    def test_midlines_go_right_and_up(self):
        self.assertEqual(quadrant_digit(self.square, (Fraction(1, 2), Fraction(1, 2))), 0)
        self.assertEqual(quadrant_digit(self.square, (Fraction(1, 2), Fraction(1, 4))), 3)


if __name__ == "__main__":
    unittest.main()
