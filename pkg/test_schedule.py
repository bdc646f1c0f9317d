import unittest
from fractions import Fraction

import mpmath

import schedule
from errors import ScheduleError
from schedule import AlphaSchedule, HARMONIC, INVERSE_SQUARE


def limit_product() -> Fraction:
    """prod(1 - 1/(2n^2)) = sqrt(2) sin(pi/sqrt(2)) / pi, at 50 digits."""
    with mpmath.workdps(50):
        value = mpmath.sqrt(2) * mpmath.sin(mpmath.pi / mpmath.sqrt(2)) / mpmath.pi
        return Fraction(mpmath.nstr(value, 45))


class SequenceTests(unittest.TestCase):
    def test_inverse_square_values(self):
        self.assertEqual(schedule.alpha(INVERSE_SQUARE, 3), Fraction(1, 18))
        a3, s3, r3 = schedule.geometry(INVERSE_SQUARE, 3)
        self.assertEqual(a3, Fraction(7, 64))
        self.assertEqual(s3, Fraction(7, 4608))
        self.assertEqual(r3, Fraction(119, 288))
        self.assertEqual(schedule.geometry(INVERSE_SQUARE, 1), (1, Fraction(1, 8), Fraction(1, 2)))
        self.assertEqual(schedule.geometry(INVERSE_SQUARE, 2)[1], Fraction(1, 128))

    def test_harmonic_values(self):
        a3, _, r3 = schedule.geometry(HARMONIC, 3)
        self.assertEqual(a3, Fraction(1, 12))
        self.assertEqual(r3, Fraction(1, 4))
        self.assertEqual(schedule.alpha(HARMONIC, 1), Fraction(1, 2))

    def test_side_tracks_partial_product(self):
        seq = AlphaSchedule.from_kind(INVERSE_SQUARE).sequences
        self.assertEqual(seq.r(0), 1)
        for n in range(1, 30):
            self.assertEqual(seq.a(n) * 2 ** n, 2 * seq.r(n - 1))
            self.assertEqual(seq.a(n) - seq.a(n + 1) * 2 - 4 * seq.s(n), 0)

    def test_core_measure(self):
        self.assertEqual(schedule.core_measure(INVERSE_SQUARE, 1, 3), Fraction(7, 16))
        self.assertEqual(schedule.core_measure(INVERSE_SQUARE, 2, 2), Fraction(1, 4))
        self.assertEqual(schedule.core_measure(HARMONIC, 1, 4), Fraction(1, 4))
        with self.assertRaises(ScheduleError):
            schedule.core_measure(INVERSE_SQUARE, 3, 2)

    def test_invalid_index(self):
        with self.assertRaises(ScheduleError):
            schedule.alpha(INVERSE_SQUARE, 0)
        with self.assertRaises(ScheduleError):
            schedule.geometry(HARMONIC, 0)
        with self.assertRaises(ScheduleError):
            AlphaSchedule.from_kind("cubic")

    def test_margin_ratio(self):
        sched = AlphaSchedule.from_kind(INVERSE_SQUARE)
        for n in range(1, 12):
            expected = sched.sequences.s(n) / sched.sequences.s(n + 1)
            self.assertEqual(sched.margin_ratio(n), expected)
        self.assertEqual(sched.margin_ratio(1), 16)

    def test_table(self):
        rows = schedule.schedule_table(HARMONIC, 3)
        self.assertEqual([row.n for row in rows], [1, 2, 3])
        self.assertEqual(rows[-1].r, Fraction(1, 4))


class EnclosureTests(unittest.TestCase):
    def test_contains_closed_form(self):
        r = limit_product()
        enclosure = schedule.r_enclosure(INVERSE_SQUARE, 1e-9)
        self.assertTrue(enclosure.contains(r))
        self.assertLessEqual(enclosure.width, Fraction(1e-9))
        self.assertAlmostEqual(float(enclosure.midpoint), 0.3582, places=3)

    def test_nested_as_tolerance_shrinks(self):
        wide = schedule.r_enclosure(INVERSE_SQUARE, 1e-4)
        narrow = schedule.r_enclosure(INVERSE_SQUARE, 1e-10)
        self.assertLessEqual(wide.lo, narrow.lo)
        self.assertGreaterEqual(wide.hi, narrow.hi)

    def test_partial_product_bounds_limit_from_above(self):
        enclosure = schedule.r_enclosure(INVERSE_SQUARE, 1e-8)
        seq = AlphaSchedule.from_kind(INVERSE_SQUARE).sequences
        for n in (1, 10, 100):
            self.assertGreaterEqual(seq.r(n), enclosure.hi)
            self.assertLessEqual(seq.r(n) - Fraction(1, 2 * n), enclosure.lo)

    def test_harmonic_limit_is_zero(self):
        enclosure = schedule.r_enclosure(HARMONIC, 1e-6)
        self.assertEqual(enclosure.lo, 0)
        self.assertEqual(enclosure.hi, Fraction(1, 10 ** 6 + 1))

    def test_two_dimensional_measure_squares(self):
        one = schedule.limit_core_measure(INVERSE_SQUARE, 1)
        two = schedule.limit_core_measure(INVERSE_SQUARE, 2)
        self.assertEqual(two.lo, one.lo ** 2)
        self.assertEqual(two.hi, one.hi ** 2)

    def test_custom_schedule_needs_tail_bound(self):
        custom = AlphaSchedule("custom", rule=lambda n: Fraction(1, 3 * n * n))
        self.assertEqual(custom.alpha(2), Fraction(1, 12))
        with self.assertRaises(ScheduleError):
            schedule.r_enclosure(custom, 1e-6)

    def test_custom_schedule_with_tail_bound(self):
        # sum_{n>N} 1/(3n^2) <= 1/(3N)
        custom = AlphaSchedule(
            "custom",
            rule=lambda n: Fraction(1, 3 * n * n),
            tail_bound=lambda n: Fraction(1, 3 * n),
        )
        enclosure = schedule.r_enclosure(custom, 1e-3)
        self.assertLessEqual(enclosure.width, Fraction(1e-3))
        with mpmath.workdps(30):
            oracle = mpmath.sqrt(3) * mpmath.sin(mpmath.pi / mpmath.sqrt(3)) / mpmath.pi
        self.assertTrue(enclosure.contains(Fraction(float(oracle))))

    def test_bad_custom_alpha(self):
        custom = AlphaSchedule("custom", rule=lambda n: Fraction(2))
        with self.assertRaises(ScheduleError):
            custom.alpha(1)

    def test_asymptotic_ratios_tend_to_one(self):
        ratios = schedule.asymptotic_ratios(INVERSE_SQUARE, 40)
        for enclosure in ratios.values():
            self.assertGreaterEqual(enclosure.lo, 1)
            self.assertLessEqual(enclosure.hi, Fraction(102, 100))
        with self.assertRaises(ScheduleError):
            schedule.asymptotic_ratios(HARMONIC, 10)


if __name__ == "__main__":
    unittest.main()
