import unittest
from fractions import Fraction

import numpy as np

from errors import DepthCapExceeded, EvaluationError, ProbeInapplicable
from evaluator import FunctionHandle
from geometry import cell_of
from models import CellAddress


class StepTermTests(unittest.TestCase):
    def test_first_level_terms(self):
        square = FunctionHandle(2)
        line = FunctionHandle(1)
        self.assertEqual(square.h_eval(1, (Fraction(3, 4), Fraction(1, 4))), 3)
        self.assertEqual(line.h_eval(1, Fraction(3, 4)), 1)
        self.assertEqual(line.h_eval(1, Fraction(1, 4)), 0)

    def test_deeper_term_vanishes_off_core(self):
        line = FunctionHandle(1)
        self.assertEqual(line.h_eval(3, Fraction(1, 2)), 0)

    def test_one_dimensional_derivative_needs_opt_in(self):
        line = FunctionHandle(1)
        with self.assertRaises(EvaluationError):
            line.f_partial(2, Fraction(3, 4), order=1)
        self.assertEqual(line.f_partial(2, Fraction(3, 4), order=1, scalar_derivative=True), 0)


class PartialSumTests(unittest.TestCase):
    def test_plateau_values_are_exact(self):
        square = FunctionHandle(2)
        value = square.f_partial(1, (Fraction(3, 4), Fraction(1, 4)))
        self.assertEqual(value, Fraction(3, 4))
        self.assertIsInstance(value, Fraction)
        self.assertEqual(FunctionHandle(1).f_partial(1, Fraction(3, 4)), Fraction(1, 2))

    def test_gradient_vanishes_on_plateau(self):
        square = FunctionHandle(2)
        centre = square.f_partial(2, (Fraction(3, 4), Fraction(3, 4)), order=1)
        self.assertEqual(centre, (0, 0))

    def test_float_path_matches_exact_path(self):
        square = FunctionHandle(2)
        rng = np.random.default_rng(3)
        points = rng.random((60, 2))
        floats = square.f_partial_array(points, 3)
        for point, value in zip(points, floats):
            exact = square.f_partial(3, tuple(Fraction(float(c)) for c in point))
            self.assertAlmostEqual(float(exact), value, places=12)

    def test_rejects_wrong_dimension(self):
        with self.assertRaises(EvaluationError):
            FunctionHandle(2).f_partial(1, Fraction(1, 3))
        with self.assertRaises(EvaluationError):
            FunctionHandle(1).f_partial(1, Fraction(4, 3))


class LimitTests(unittest.TestCase):
    def test_exact_off_core(self):
        line = FunctionHandle(1)
        for x in (Fraction(0), Fraction(1, 2), Fraction(1)):
            certified = line.f_eval(x, 1e-6)
            self.assertEqual(certified.radius, 0)
            self.assertEqual(certified.exact, 0)

    def test_radius_on_core(self):
        line = FunctionHandle(1)
        self.assertEqual(line.terms_for(1e-6), 20)
        point = line.f_eval(Fraction(3, 4), 1e-6)
        self.assertLessEqual(point.radius, 1e-6)
        self.assertTrue(point.n_used >= 1)

    def test_core_prefix_value(self):
        line = FunctionHandle(1)
        self.assertEqual(line.f_core_exact(CellAddress(dimension=1, digits=(1, 0, 1))), (Fraction(5, 8), Fraction(1, 8)))

    def test_agrees_with_partial_sum_off_core(self):
        line = FunctionHandle(1)
        checked, agree = line.agrees_outside_core(2, [Fraction(1, 2), Fraction(0), Fraction(1, 16)])
        self.assertEqual(checked, 3)
        self.assertTrue(agree)

    def test_array_radii(self):
        square = FunctionHandle(2)
        deep = cell_of(CellAddress.parse(2, "3120312")).midpoint
        points = np.array([[0.5, 0.5], [float(deep[0]), float(deep[1])]])
        values, radii, n_used = square.f_eval_array(points, 1e-4)
        self.assertEqual(values[0], 0.0)
        self.assertLess(radii[0], 1e-12)
        self.assertGreater(radii[1], 1e-12)
        self.assertEqual(n_used[1], 7)

    def test_depth_cap(self):
        with self.assertRaises(DepthCapExceeded):
            FunctionHandle(1, depth_cap=50)
        with self.assertRaises(DepthCapExceeded):
            FunctionHandle(2).h_eval(25, (Fraction(3, 4), Fraction(3, 4)))


class ConsistencyTests(unittest.TestCase):
    def test_tighter_tolerance_stays_within_radii(self):
        rng = np.random.default_rng(11)
        for dimension in (1, 2):
            handle = FunctionHandle(dimension)
            for point in rng.random((150, dimension)):
                x = tuple(Fraction(float(c)) for c in point)
                tol = float(10 ** rng.uniform(-6, -2))
                coarse = handle.f_eval(x, tol)
                fine = handle.f_eval(x, tol / 10)
                self.assertLessEqual(abs(coarse.value - fine.value), tol + tol / 10 + 1e-15)

    def test_midpoints_match_digit_values(self):
        rng = np.random.default_rng(12)
        # terms_for(1e-6) is 20 in 1D and 10 in 2D; shallower midpoints leave the core in time
        for dimension, deepest in ((1, 18), (2, 8)):
            handle = FunctionHandle(dimension)
            for _ in range(100):
                length = int(rng.integers(0, deepest + 1))
                address = CellAddress(dimension=dimension, digits=tuple(int(d) for d in rng.integers(0, handle.base, length)))
                value, width = handle.f_core_exact(address)
                certified = handle.f_eval(cell_of(address).midpoint, 1e-6)
                self.assertEqual(certified.radius, 0)
                self.assertTrue(value <= certified.exact <= value + width)

    def test_uniform_convergence_rate(self):
        rng = np.random.default_rng(13)
        for dimension, levels in ((1, (4, 8, 12)), (2, (4, 8, 12))):
            handle = FunctionHandle(dimension)
            points = rng.random((300, dimension))
            full, radii, _ = handle.f_eval_array(points, 1e-9)
            for n in levels:
                gap = np.abs(full - handle.f_partial_array(points, n))
                self.assertTrue(np.all(gap <= float(handle.tail(n)) + radii + 1e-12), f"{dimension}D n={n}")

    def test_values_dominate_prefix_value_in_one_dimension(self):
        rng = np.random.default_rng(14)
        line = FunctionHandle(1)
        for text in ("1", "01", "110", "1011", "0110101"):
            address = CellAddress.parse(1, text)
            cell = cell_of(address)
            u = rng.uniform(0.01, 0.99, 200)
            points = float(cell.lower[0]) + u * float(cell.side)
            values, radii, _ = line.f_eval_array(points, 1e-9)
            self.assertTrue(np.all(values + radii >= float(address.value()) - 1e-15), text)


class BoundTests(unittest.TestCase):
    def test_gradient_tail_dominates_difference_quotients(self):
        # a central difference of f_N is the mean of its partial along the segment
        square = FunctionHandle(2)
        rng = np.random.default_rng(15)
        h = 1e-6
        points = rng.uniform(h, 1 - h, (200, 2))
        for n in (1, 2, 3):
            deep = n + 10
            analytic = square.f_partial_array(points, n, order=1)
            slack = square.gradient_tail_bound(n) + h * square.second_derivative_bound(n) + 1e-8
            for axis in range(2):
                shift = np.zeros(2)
                shift[axis] = h
                central = (square.f_partial_array(points + shift, deep) - square.f_partial_array(points - shift, deep)) / (2 * h)
                self.assertTrue(np.all(np.abs(central - analytic[:, axis]) <= slack), f"n={n} axis={axis}")

    def test_gradient_tail_is_decreasing(self):
        square = FunctionHandle(2)
        bounds = [square.gradient_tail_bound(n) for n in range(0, 8)]
        self.assertTrue(all(b > 0 for b in bounds))
        self.assertTrue(all(later < earlier for earlier, later in zip(bounds, bounds[1:])))

    def test_second_derivative_bound_grows(self):
        square = FunctionHandle(2)
        self.assertLess(square.second_derivative_bound(2), square.second_derivative_bound(3))

    def test_gradient_bound_only_in_two_dimensions(self):
        with self.assertRaises(EvaluationError):
            FunctionHandle(1).gradient_tail_bound(2)


class ProbeTests(unittest.TestCase):
    def test_quotient_probe_on_ones(self):
        line = FunctionHandle(1)
        probe = line.quotient_probe(CellAddress.parse(1, "11111111"), 1)
        self.assertTrue(probe.passed)
        self.assertGreaterEqual(probe.left_quotient.lo, 2)
        self.assertLessEqual(probe.right_quotient.hi, -2)

    def test_quotient_probe_needs_digit_one(self):
        line = FunctionHandle(1)
        with self.assertRaises(ProbeInapplicable):
            line.quotient_probe(CellAddress.parse(1, "01111111"), 1)
        with self.assertRaises(ProbeInapplicable):
            FunctionHandle(2).quotient_probe(CellAddress.parse(2, "1111"), 1)

    def test_critical_values_off_core(self):
        square = FunctionHandle(2)
        self.assertEqual(square.critical_values_off_core(1), [0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)])
        deeper = square.critical_values_off_core(2)
        self.assertTrue(all((16 * v).denominator == 1 for v in deeper))
        with self.assertRaises(DepthCapExceeded):
            square.critical_values_off_core(7)


if __name__ == "__main__":
    unittest.main()
