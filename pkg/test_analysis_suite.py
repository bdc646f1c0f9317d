import unittest

import numpy as np

import analysis_suite
from errors import EvaluationError, ProbeInapplicable
from evaluator import FunctionHandle
from geometry import cell_of
from models import CellAddress


class SeminormTests(unittest.TestCase):
    def test_affine_function_at_alpha_one(self):
        rng = np.random.default_rng(0)
        x, y = rng.random(200), rng.random(200)
        self.assertAlmostEqual(analysis_suite.sampled_seminorm(x, y, x, y, 1.0), 1.0, places=12)

    def test_slack_only_lowers(self):
        x, y = np.array([0.0]), np.array([0.25])
        plain = analysis_suite.sampled_seminorm(x, y, x, y, 0.5)
        slack = analysis_suite.sampled_seminorm(x, y, x, y, 0.5, slack=0.1)
        self.assertAlmostEqual(plain, 0.5)
        self.assertLess(slack, plain)

    def test_rejects_bad_alpha(self):
        with self.assertRaises(ValueError):
            analysis_suite.sampled_seminorm([0.0], [1.0], [0.0], [1.0], 0.0)


class PairTests(unittest.TestCase):
    def test_blocks_extend_deterministically(self):
        handle = FunctionHandle(2)
        small = analysis_suite.generate_pairs(handle, "digit-aligned", 100, seed=5)
        large = analysis_suite.generate_pairs(handle, "digit-aligned", 5000, seed=5)
        np.testing.assert_array_equal(small[0], large[0][:100])
        self.assertEqual(large[1].shape, (5000, 2))

    def test_pairs_stay_in_unit_cell(self):
        for strategy in analysis_suite.STRATEGIES:
            x, y = analysis_suite.generate_pairs(FunctionHandle(1), strategy, 500, seed=2, depth=12)
            self.assertTrue(np.all((x >= 0) & (x <= 1) & (y >= 0) & (y <= 1)))

    def test_unknown_strategy(self):
        with self.assertRaises(ValueError):
            analysis_suite.generate_pairs(FunctionHandle(1), "spiral", 10)


class HolderTests(unittest.TestCase):
    def test_one_dimensional_estimate(self):
        report = analysis_suite.holder_estimate(FunctionHandle(1), 0.9, 3000, seed=1)
        self.assertGreater(report.lower, 0.0)
        self.assertLessEqual(report.lower, report.upper)
        self.assertLessEqual(report.series_remainder, analysis_suite.SERIES_RTOL)
        self.assertTrue(report.passed)

    def test_two_dimensional_estimate(self):
        report = analysis_suite.holder_estimate(FunctionHandle(2), 0.5, 2000, strategy="digit-aligned", depth=5)
        self.assertEqual(report.depth, 5)
        self.assertTrue(report.passed)

    def test_series_grows_with_alpha(self):
        handle = FunctionHandle(1)
        low, _, _ = analysis_suite.holder_series_bound(handle, 0.3)
        high, _, _ = analysis_suite.holder_series_bound(handle, 0.8)
        self.assertLess(low, high)
        with self.assertRaises(ValueError):
            analysis_suite.holder_series_bound(handle, 1.0)

    def test_lower_bound_grows_with_samples(self):
        handle = FunctionHandle(1)
        lowers = [analysis_suite.holder_estimate(handle, 0.6, count, seed=4).lower for count in (500, 1000, 2000)]
        self.assertTrue(all(later >= earlier for earlier, later in zip(lowers, lowers[1:])))

    def test_norm_bound_covers_seminorm(self):
        handle = FunctionHandle(1)
        seminorm, _, _ = analysis_suite.holder_series_bound(handle, 0.5)
        self.assertGreaterEqual(analysis_suite.holder_norm_bound(handle, 0.5), seminorm)


class InterpolationTests(unittest.TestCase):
    def test_constant_samples(self):
        coords = [np.linspace(0.0, 1.0, 5), np.linspace(0.0, 1.0, 5)]
        values = np.ones((5, 5))
        report = analysis_suite.interpolation_check_samples(coords, values, np.zeros((25, 2)), 0.5)
        self.assertEqual(report.seminorm, 0.0)
        self.assertTrue(report.passed)

    def test_alpha_extremes(self):
        for dimension, digit in ((1, "1"), (2, "3")):
            handle = FunctionHandle(dimension)
            for alpha in (0.3, 0.9):
                for n in (2, 5):
                    for address in (None, CellAddress.parse(dimension, digit)):
                        report = analysis_suite.interpolation_check(handle, n, alpha, address)
                        self.assertTrue(report.passed, f"{dimension}D alpha={alpha} n={n} address={address}")

    def test_degenerate_cell(self):
        with self.assertRaises(EvaluationError):
            analysis_suite.interpolation_check_samples([np.array([0.5])], np.array([1.0]), np.zeros(1), 0.5)

    def test_partial_sum_on_root_cell(self):
        report = analysis_suite.interpolation_check(FunctionHandle(2), 2, 0.5)
        self.assertGreater(report.seminorm, 0.0)
        self.assertTrue(report.passed)

    def test_one_dimensional_subcell(self):
        address = CellAddress.parse(1, "1")
        report = analysis_suite.interpolation_check(FunctionHandle(1), 3, 0.7, address)
        self.assertTrue(report.passed)


class CriticalityTests(unittest.TestCase):
    def test_core_midpoint(self):
        handle = FunctionHandle(2)
        report = analysis_suite.criticality_probe(handle, CellAddress.parse(2, "0000000000"), 10)
        self.assertTrue(report.analytic_exact_zero)
        self.assertEqual(report.analytic_gradient, (0, 0))
        self.assertLess(report.fd_error, report.tail_bound)
        self.assertTrue(report.passed)

    def test_mixed_digits(self):
        report = analysis_suite.criticality_probe(FunctionHandle(2), CellAddress.parse(2, "3120312031"), 10)
        self.assertTrue(report.passed)

    def test_inapplicable(self):
        with self.assertRaises(ProbeInapplicable):
            analysis_suite.criticality_probe(FunctionHandle(1), CellAddress.parse(1, "0101"), 2)
        with self.assertRaises(ProbeInapplicable):
            analysis_suite.criticality_probe(FunctionHandle(2), CellAddress.parse(2, "012"), 5)


class LevelSetTests(unittest.TestCase):
    def test_component_stays_in_cell(self):
        handle = FunctionHandle(2)
        report, raster = analysis_suite.level_component_scan(
            handle, CellAddress.parse(2, "333333333333"), 1, 1e-4, grid_res=128, samples=2000
        )
        self.assertTrue(report.passed)
        self.assertGreater(report.frame_min_separation, 0.0)
        self.assertGreater(report.certified_separation, 0)
        self.assertLessEqual(report.component_diameter, report.cell_diameter)
        self.assertEqual(len(raster), 128 * 128)
        self.assertEqual(int(raster["in_component"].sum()), report.component_size)

    def test_seed_node_samples_the_point(self):
        handle = FunctionHandle(2)
        address = CellAddress.parse(2, "333333333333")
        report, raster = analysis_suite.level_component_scan(handle, address, 1, 1e-4, grid_res=128, samples=500)
        point = [float(c) for c in cell_of(address).midpoint]
        nearest = ((raster["x"] - point[0]) ** 2 + (raster["y"] - point[1]) ** 2).idxmin()
        self.assertAlmostEqual(raster["x"][nearest], point[0], places=12)
        self.assertAlmostEqual(raster["y"][nearest], point[1], places=12)
        self.assertTrue(raster["in_component"][nearest])
        self.assertLessEqual(report.component_diameter, report.child_diameter)
        self.assertLess(report.child_diameter, report.cell_diameter)

    def test_diameter_shrinks_with_eps(self):
        handle = FunctionHandle(2)
        address = CellAddress.parse(2, "333333333333")
        diameters = [
            analysis_suite.level_component_probe(handle, address, 1, eps, grid_res=128, samples=500).component_diameter
            for eps in (1e-2, 1e-3, 1e-4, 1e-5)
        ]
        self.assertTrue(all(later <= earlier for earlier, later in zip(diameters, diameters[1:])))

    def test_diameter_does_not_grow_with_level(self):
        handle = FunctionHandle(2)
        address = CellAddress.parse(2, "333333333333")
        first = analysis_suite.level_component_probe(handle, address, 1, 1e-4, grid_res=128, samples=500)
        second = analysis_suite.level_component_probe(handle, address, 2, 1e-4, grid_res=128, samples=500)
        self.assertTrue(second.passed)
        self.assertLessEqual(second.component_diameter, first.component_diameter)

    def test_inapplicable_addresses(self):
        handle = FunctionHandle(2)
        for text, level in (("300000000000", 1), ("033333333333", 1), ("3333", 4)):
            with self.assertRaises(ProbeInapplicable):
                analysis_suite.level_component_probe(handle, CellAddress.parse(2, text), level, 1e-4)

    def test_bad_eps(self):
        with self.assertRaises(ValueError):
            analysis_suite.level_component_probe(FunctionHandle(2), CellAddress.parse(2, "333333"), 1, 0.0)


class NondiffTests(unittest.TestCase):
    def test_suite_on_ones(self):
        address = CellAddress.parse(1, "1111111111")
        results = analysis_suite.nondiff_suite(FunctionHandle(1), [(address, 1), (address, 2)])
        self.assertEqual(len(results), 2)
        self.assertTrue(all(r.passed for r in results))

    def test_digit_one_levels(self):
        self.assertEqual(analysis_suite.digit_one_levels(CellAddress.parse(1, "1011"), 4), [1, 3, 4])
        self.assertEqual(analysis_suite.digit_one_levels(CellAddress.parse(1, "1011"), 2), [1])


if __name__ == "__main__":
    unittest.main()
