import random
import unittest
from fractions import Fraction
from unittest.mock import patch

from src.cli.generator import generate
from src.errors import (InvalidInput, InvariantViolated, MaxIterExceeded, NoGrading, ResidueUnsolvable,
                        RoundingTooCoarse)
from src.linalg.series_matrix import SeriesMatrix
from src.linalg.sigma_linear import DiagonalData
from src.rings.coeff_ring import Coeff, make_spec
from src.rings.series_ring import PrecisionProfile, Series
from src.services.descent_service import (DescentService, StepRecord, choose_parameters, classify_step,
                                          descend, envelope_from_sizes, round_to_profile, unipotent_inverse)


def family(kind, rank=2, seed=0):
    instance = generate(kind, seed=seed, rank=rank)
    return instance.get('A'), DiagonalData.from_matrix(instance.get('D'))


class TestParameters(unittest.TestCase):
    def test_choose_parameters(self):
        profile = PrecisionProfile(make_spec(2))
        identity = DiagonalData.from_matrix(SeriesMatrix.identity(profile, 2))
        self.assertEqual(choose_parameters(identity, Fraction(1), profile), (Fraction(2), Fraction(2)))

    def test_choose_parameters_odd_prime(self):
        profile = PrecisionProfile(make_spec(3))
        identity = DiagonalData.from_matrix(SeriesMatrix.identity(profile, 2))
        self.assertEqual(choose_parameters(identity, Fraction(1), profile), (Fraction(1), Fraction(1)))

    def test_nonpositive_radius_rejected(self):
        profile = PrecisionProfile(make_spec(2))
        identity = DiagonalData.from_matrix(SeriesMatrix.identity(profile, 1))
        with self.assertRaises(InvalidInput):
            choose_parameters(identity, Fraction(0), profile)


class TestDescentFamilies(unittest.TestCase):
    def run_family(self, kind):
        a, d = family(kind)
        s_mat, report = DescentService().descend(a, d, Fraction(1))
        return a, d, s_mat, report

    def test_first_type_family(self):
        # 1 + c·t^3 clears t^3 and then the t^6 term left by σ of the correction
        _, _, _, report = self.run_family('first')
        self.assertEqual([record.kind for record in report.log], [1, 1])
        self.assertEqual([record.j for record in report.log], [3, 6])

    def test_second_type_family(self):
        _, _, _, report = self.run_family('second')
        self.assertEqual([record.kind for record in report.log], [2, 2])
        self.assertEqual([record.r_l for record in report.log], [Fraction(1, 4), Fraction(1, 8)])

    def test_mixed_family(self):
        _, _, _, report = self.run_family('mixed')
        self.assertEqual([record.kind for record in report.log], [1, 2, 1, 2, 2])
        self.assertEqual([record.j for record in report.log], [3, 4, 6, 7, 8])
        self.assertEqual([record.r_l for record in report.log if record.kind == 2],
                         [Fraction(1, 4), Fraction(1, 7), Fraction(1, 8)])

    def test_postconditions(self):
        for kind in ('first', 'second', 'mixed'):
            a, d, s_mat, report = self.run_family(kind)
            residual = d.inverse_matrix(a.profile) * s_mat * a * report.s_inv.frobenius()
            self.assertEqual(residual, report.residual)
            self.assertIsNone(classify_step(report.residual, Fraction(1), report.s))
            self.assertGreater(report.residual.minus_identity().gauss_val(1), report.eps)

    def test_every_step_keeps_epsilon_invariant(self):
        _, _, _, report = self.run_family('mixed')
        for record in report.log:
            self.assertGreater(record.val_r, report.eps)

    def test_envelope_holds(self):
        _, _, _, report = self.run_family('second')
        self.assertEqual(report.envelope.violations, [])

    def test_module_level_descend(self):
        a, d = family('second')
        _, report = descend(a, d, Fraction(1))
        self.assertEqual(len(report.log), 2)

    def test_max_iter(self):
        a, d = family('second')
        with self.assertRaises(MaxIterExceeded) as ctx:
            DescentService(max_iter=1).descend(a, d, Fraction(1))
        self.assertEqual(len(ctx.exception.log), 1)

    def test_start_precondition(self):
        profile = PrecisionProfile(make_spec(2))
        a = SeriesMatrix.identity(profile, 2).with_entry(0, 1, Series.monomial(profile, 1, 1))
        d = DiagonalData.from_matrix(SeriesMatrix.identity(profile, 2))
        with self.assertRaises(InvalidInput):
            DescentService().descend(a, d, Fraction(1))

    def test_already_reduced_matrix_needs_no_steps(self):
        profile = PrecisionProfile(make_spec(2))
        a = SeriesMatrix.identity(profile, 2).with_entry(0, 1, Series.monomial(profile, 2, 3))
        d = DiagonalData.from_matrix(SeriesMatrix.identity(profile, 2))
        s_mat, report = DescentService().descend(a, d, Fraction(1))
        self.assertEqual(report.log, [])
        self.assertEqual(s_mat, SeriesMatrix.identity(profile, 2))

    def test_coupled_second_type_keeps_epsilon_invariant(self):
        profile = PrecisionProfile(make_spec(2))
        x = Series.monomial(profile, Fraction(1, 2), 4)
        one = Series.one(profile)
        a = SeriesMatrix(profile, [[one + x, x], [-x, one - x]])
        d = DiagonalData.from_matrix(SeriesMatrix.identity(profile, 2))
        s_mat, report = DescentService().descend(a, d, Fraction(1))
        first = report.log[0]
        self.assertEqual((first.kind, first.j, first.r_l), (2, Fraction(4), Fraction(1, 4)))
        self.assertTrue(all(record.val_r > report.eps for record in report.log))
        self.assertIsNone(classify_step(report.residual, Fraction(1), report.s))
        self.assertEqual(d.inverse_matrix(profile) * s_mat * a * report.s_inv.frobenius(), report.residual)

    def test_non_trivial_diagonal(self):
        profile = PrecisionProfile(make_spec(2))
        ring = profile.ring
        d = DiagonalData([Coeff.one(ring), Coeff.from_int(ring, 2)])
        a = d.matrix(profile) * SeriesMatrix.identity(profile, 2).with_entry(0, 1, Series.monomial(profile, 1, 4))
        s_mat, report = DescentService().descend(a, d, Fraction(1))
        self.assertEqual((report.s, report.eps), (Fraction(3), Fraction(3)))
        self.assertEqual([(record.kind, record.j, record.r_l) for record in report.log],
                         [(1, Fraction(4), None), (2, Fraction(8), Fraction(1, 8))])
        self.assertTrue(report.residual.minus_identity().is_zero)
        self.assertEqual(d.inverse_matrix(profile) * s_mat * a * report.s_inv.frobenius(), report.residual)


class TestClassification(unittest.TestCase):
    def setUp(self):
        self.profile = PrecisionProfile(make_spec(2))
        self.identity = SeriesMatrix.identity(self.profile, 2)

    def offdiagonal(self, values):
        return self.identity.with_entry(0, 1, Series.from_values(self.profile, values))

    def test_unit_coefficient_is_first_type(self):
        residual = self.identity.with_entry(0, 0, Series.from_values(self.profile, {0: 1, 3: 3}))
        step = classify_step(residual, Fraction(1), Fraction(2))
        self.assertEqual((step.kind, step.j, step.r_l), ('first', Fraction(3), None))

    def test_negative_valuation_is_second_type(self):
        step = classify_step(self.offdiagonal({4: Fraction(1, 2)}), Fraction(1), Fraction(2))
        self.assertEqual((step.kind, step.j, step.r_l), ('second', Fraction(4), Fraction(1, 4)))

    def test_tied_ratios_take_the_smallest_index(self):
        step = classify_step(self.offdiagonal({4: Fraction(1, 2), 8: Fraction(1, 4)}), Fraction(1), Fraction(2))
        self.assertEqual((step.kind, step.j, step.r_l), ('second', Fraction(4), Fraction(1, 4)))

    def test_largest_ratio_wins(self):
        step = classify_step(self.offdiagonal({8: Fraction(1, 2), 6: Fraction(1, 4)}), Fraction(1), Fraction(2))
        self.assertEqual((step.j, step.r_l), (Fraction(6), Fraction(1, 3)))

    def test_reduced_residual_has_no_step(self):
        self.assertIsNone(classify_step(self.offdiagonal({3: 2}), Fraction(1), Fraction(2)))

    def test_index_below_s_is_an_invariant_violation(self):
        with self.assertRaises(InvariantViolated):
            classify_step(self.offdiagonal({1: 1}), Fraction(1), Fraction(2))


class TestRetries(unittest.TestCase):
    def test_residue_failure_retries_over_quadratic_extension(self):
        a, d = family('second')
        original = DescentService.second_type_step
        degrees = []

        def flaky(service, state, step):
            degrees.append(state.profile.ring.d)
            if len(degrees) == 1:
                raise ResidueUnsolvable("no residue solution")
            return original(service, state, step)

        with patch.object(DescentService, 'second_type_step', flaky):
            s_mat, report = DescentService().descend(a, d, Fraction(1))
        self.assertEqual(report.retries, ['d=2'])
        self.assertEqual(report.profile.ring.d, 2)
        self.assertEqual(degrees[:2], [1, 2])
        self.assertEqual([record.kind for record in report.log], [2, 2])

    def test_grading_failure_uses_both_retries_then_raises(self):
        a, d = family('second')

        def no_grading(service, state, step):
            raise NoGrading("not representable")

        with patch.object(DescentService, 'second_type_step', no_grading):
            with self.assertRaises(NoGrading):
                DescentService().descend(a, d, Fraction(1))

    def test_disabled_extension_retry_raises(self):
        a, d = family('second')

        def unsolvable(service, state, step):
            raise ResidueUnsolvable("no residue solution")

        with patch.object(DescentService, 'second_type_step', unsolvable):
            with self.assertRaises(ResidueUnsolvable):
                DescentService(retry_unramified=False).descend(a, d, Fraction(1))

    def test_unipotent_inverse(self):
        profile = PrecisionProfile(make_spec(2))
        y = SeriesMatrix.identity(profile, 2).with_entry(0, 1, Series.monomial(profile, Fraction(1, 2), 4))
        y = y.with_entry(1, 0, Series.monomial(profile, 1, 2))
        self.assertEqual(unipotent_inverse(y) * y, SeriesMatrix.identity(profile, 2))
        with self.assertRaises(InvalidInput):
            unipotent_inverse(y.with_entry(1, 0, Series.monomial(profile, 1, -1)))


class TestRounding(unittest.TestCase):
    def setUp(self):
        self.fine = PrecisionProfile(make_spec(2), h=1)
        self.coarse = PrecisionProfile(make_spec(2), h=0)

    def test_rounding_drops_fractional_exponents(self):
        u = SeriesMatrix.identity(self.fine, 2).with_entry(0, 1, Series.monomial(self.fine, 2, Fraction(1, 2)))
        v = round_to_profile(u, self.coarse, Fraction(1))
        self.assertEqual(v, SeriesMatrix.identity(self.coarse, 2))

    def test_rounding_returns_the_rounded_inverse(self):
        u = SeriesMatrix.identity(self.coarse, 2).with_entry(0, 1, Series.monomial(self.coarse, 2, 1))
        v = round_to_profile(u, self.coarse, Fraction(1))
        self.assertEqual(v, u.inverse())
        self.assertNotEqual(v, u)

    def test_random_matrices_round_within_radius(self):
        rng = random.Random(5)
        r = Fraction(1, 2)
        for trial in range(6):
            entries = [[Series.from_values(self.fine, {Fraction(rng.randint(-2, 2), 2): 2 * rng.randrange(0, 4)
                                                       for _ in range(2)}) for _ in range(2)] for _ in range(2)]
            u = SeriesMatrix.identity(self.fine, 2) + SeriesMatrix(self.fine, entries)
            with self.subTest(trial=trial):
                v = round_to_profile(u, self.coarse, r)
                self.assertEqual(v.profile, self.coarse)
                self.assertGreater((v.coerce(self.fine) * u).minus_identity().gauss_val(r), 0)

    def test_rounding_too_coarse(self):
        ring = self.fine.ring
        half = Coeff.from_fraction(ring, Fraction(1, 2))
        u = SeriesMatrix.identity(self.fine, 2).with_entry(0, 1, Series.monomial(self.fine, half, Fraction(1, 2)))
        with self.assertRaises(RoundingTooCoarse):
            round_to_profile(u, self.coarse, Fraction(1))


class TestReporting(unittest.TestCase):
    def test_step_record_line(self):
        record = StepRecord(1, 2, Fraction(4), Fraction(1, 4), Fraction(3))
        self.assertEqual(record.line(), "l=1 type=2 j=4/1 r_l=1/4 val_r=3/1")
        self.assertEqual(StepRecord(2, 1, Fraction(3), None, Fraction(5)).line(),
                         "l=2 type=1 j=3/1 r_l=- val_r=5/1")

    def test_envelope_from_sizes(self):
        grid = envelope_from_sizes([Fraction(1), Fraction(2), Fraction(4)], [0.0, 0.0, 1.0], Fraction(1), 2)
        self.assertEqual([point for point, _, _ in grid], [Fraction(1), Fraction(2), Fraction(4)])
        for (_, _, g), expected in zip(grid, [0.0, 1.0, 2.0]):
            self.assertAlmostEqual(g, expected)


if __name__ == '__main__':
    unittest.main()
