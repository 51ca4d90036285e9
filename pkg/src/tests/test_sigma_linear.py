import random
import unittest
from fractions import Fraction

from src.cli.generator import generate, random_laurent_series, random_positive_series
from src.errors import InvalidInput, ResidueUnsolvable
from src.linalg.series_matrix import SeriesMatrix
from src.linalg.sigma_linear import (DiagonalData, NewtonPolygon, SigmaEquationSolver, genspec_diagonalize,
                                     newton_polygon_generic, smith_valuations, solve_sigma_equation,
                                     twisted_product)
from src.rings.coeff_ring import Coeff, make_spec
from src.rings.series_ring import PrecisionProfile, Series


def profile_for(p=2, d=1, e=1, N=6, h=0, window=(-8, 8)):
    return PrecisionProfile(make_spec(p, d, e, N), h, window[0], window[1])


class TestSmithAndNewton(unittest.TestCase):
    def setUp(self):
        self.profile = profile_for()
        ring = self.profile.ring
        self.diag = SeriesMatrix.diag(self.profile, [Coeff.one(ring), Coeff.from_int(ring, 2)])

    def test_twisted_product_of_length_one(self):
        self.assertEqual(twisted_product(self.diag, 1), self.diag)

    def test_smith_valuations_of_diagonal(self):
        self.assertEqual(smith_valuations(self.diag), [Fraction(0), Fraction(1)])

    def test_newton_polygon_of_diagonal(self):
        polygon = newton_polygon_generic(self.diag)
        self.assertEqual(polygon.lines(), ["slope 0/1 multiplicity 1", "slope 1/1 multiplicity 1"])

    def test_newton_polygon_of_antidiagonal(self):
        p = Series.constant(self.profile, 2)
        one = Series.one(self.profile)
        zero = Series.zero(self.profile)
        a = SeriesMatrix(self.profile, [[zero, p], [one, zero]])
        self.assertEqual(smith_valuations(twisted_product(a, 2)), [Fraction(1), Fraction(1)])
        self.assertEqual(newton_polygon_generic(a).slopes, [Fraction(1, 2), Fraction(1, 2)])

    def test_conjugation_invariance(self):
        v = SeriesMatrix.identity(self.profile, 2).with_entry(0, 1, Series.constant(self.profile, 3))
        conjugated = v.inverse() * self.diag * v.frobenius()
        self.assertEqual(newton_polygon_generic(conjugated), newton_polygon_generic(self.diag))

    def test_ramified_slopes(self):
        profile = profile_for(e=2, N=4)
        a = SeriesMatrix.diag(profile, [Coeff.one(profile.ring), Coeff.pi(profile.ring)])
        self.assertEqual(newton_polygon_generic(a).slopes, [Fraction(0), Fraction(1, 2)])

    def test_polygon_from_slopes(self):
        polygon = NewtonPolygon.from_slopes([Fraction(1, 2), Fraction(0), Fraction(1, 2)])
        self.assertEqual(polygon.segments, [(Fraction(0), 1), (Fraction(1, 2), 2)])
        self.assertEqual(polygon.rank, 3)


class TestSigmaEquation(unittest.TestCase):
    def test_contracting_regime(self):
        profile = profile_for(N=6)
        lam = Series.constant(profile, 2)
        v = Series.one(profile)
        result = SigmaEquationSolver(profile).solve(lam, v)
        self.assertEqual(result.regime, 'contracting')
        self.assertEqual(result.solution - lam * result.solution.frobenius(), v)

    def test_unit_regime_positive_exponent(self):
        profile = profile_for(p=3, N=4)
        lam = Series.constant(profile, 2)
        v = Series.monomial(profile, 1, 1)
        w = solve_sigma_equation(lam, v)
        self.assertEqual(w - lam * w.frobenius(), v)

    def test_unit_regime_negative_exponent_leaves_tail(self):
        profile = profile_for(p=2, N=6, h=3)
        lam = Series.one(profile)
        v = Series.monomial(profile, 1, -1)
        result = SigmaEquationSolver(profile).solve(lam, v)
        expected = Series.from_values(profile, {Fraction(-1, 2): -1, Fraction(-1, 4): -1, Fraction(-1, 8): -1})
        self.assertEqual(result.solution, expected)
        self.assertEqual(result.tail, Series.monomial(profile, 1, Fraction(-1, 8)))
        self.assertTrue(result.solution.truncated)
        self.assertFalse(result.exact)

    def test_artin_schreier_obstruction_over_prime_field(self):
        profile = profile_for(p=2, N=4)
        with self.assertRaises(ResidueUnsolvable):
            SigmaEquationSolver(profile).solve(Series.one(profile), Series.one(profile))

    def test_residue_obstruction_removed_by_extension(self):
        one = Series.one(profile_for(p=2, N=4))
        with self.assertRaises(ResidueUnsolvable):
            SigmaEquationSolver(one.profile).solve(-one, one)
        profile = profile_for(p=2, d=2, N=4)
        lam = Series.constant(profile, -1)
        one = Series.one(profile)
        result = SigmaEquationSolver(profile).solve(lam, one)
        self.assertTrue(result.exact)
        self.assertEqual(result.solution - lam * result.solution.frobenius(), one)

    def test_expanding_regime(self):
        profile = profile_for(p=3, N=5)
        lam = Series.constant(profile, Fraction(1, 3))
        v = Series.one(profile)
        result = SigmaEquationSolver(profile).solve(lam, v)
        self.assertEqual(result.regime, 'expanding')
        self.assertGreaterEqual(result.tail.gauss_val(0), profile.ring.N - 1)

    def test_unit_with_non_constant_reduction(self):
        profile = profile_for(p=3, N=4)
        lam = Series.one(profile) + Series.monomial(profile, 1, 1)
        v = Series.monomial(profile, 1, 1)
        result = SigmaEquationSolver(profile).solve(lam, v)
        self.assertEqual(result.regime, 'unit')
        self.assertTrue(result.exact)
        self.assertEqual(result.solution, Series.from_values(profile, {1: 1, 3: 1, 4: 1}))
        self.assertEqual(result.solution - lam * result.solution.frobenius(), v)

    def test_unit_reducing_to_negative_exponents_is_rejected(self):
        profile = profile_for(p=3, N=4)
        lam = Series.one(profile) + Series.monomial(profile, 1, -1)
        with self.assertRaises(InvalidInput):
            SigmaEquationSolver(profile).solve(lam, Series.one(profile))

    def test_random_equations_satisfy_the_residual(self):
        rng = random.Random(20)
        profile = profile_for(p=3, N=3, h=2)
        solver = SigmaEquationSolver(profile)
        for trial in range(12):
            regime = ('contracting', 'unit', 'expanding')[trial % 3]
            if regime == 'contracting':
                lam = Series.constant(profile, 3 * rng.choice([1, 2, 4, 5]))
                v = random_laurent_series(rng, profile)
            elif regime == 'unit':
                lam = Series.constant(profile, 2) + Series.monomial(profile, 3, rng.randint(-2, 2))
                v = random_positive_series(rng, profile)
            else:
                lam = Series.constant(profile, Fraction(rng.choice([1, 2]), 3))
                v = random_laurent_series(rng, profile)
            with self.subTest(trial=trial, regime=regime):
                result = solver.solve(lam, v)
                self.assertEqual(result.regime, regime)
                self.assertTrue(result.exact)
                self.assertEqual(result.solution - lam * result.solution.frobenius(), v)

    def test_zero_lambda(self):
        profile = profile_for()
        v = Series.monomial(profile, 3, 2)
        self.assertEqual(solve_sigma_equation(Series.zero(profile), v), v)


class TestDiagonalization(unittest.TestCase):
    def test_b_equal_to_d_needs_no_change(self):
        profile = profile_for(N=5)
        ring = profile.ring
        d = DiagonalData([Coeff.one(ring), Coeff.from_int(ring, 2)])
        u, report = genspec_diagonalize(d.matrix(profile), d)
        self.assertEqual(u, SeriesMatrix.identity(profile, 2))
        self.assertTrue(report.residual.is_zero)
        self.assertEqual(report.iterations, 0)

    def test_generated_instance_diagonalizes(self):
        instance = generate('prop4', seed=3, rank=2, delta=1, p=3, N=2, h=2)
        b = instance.get('B')
        d = DiagonalData.from_matrix(instance.get('D'))
        u, report = genspec_diagonalize(b, d)
        self.assertTrue(report.converged)
        self.assertTrue(report.residual.is_zero)
        history = report.history
        self.assertTrue(all(x < y for x, y in zip(history, history[1:])))
        self.assertEqual(newton_polygon_generic(b).slopes, sorted(d.valuations))

    def test_random_instances_with_full_perturbation(self):
        for seed in range(5):
            with self.subTest(seed=seed):
                instance = generate('prop4', seed=seed, rank=2, delta=1, p=3, N=2, h=2)
                b = instance.get('B')
                d = DiagonalData.from_matrix(instance.get('D'))
                u, report = genspec_diagonalize(b, d)
                self.assertTrue(report.converged)
                self.assertTrue(report.residual.is_zero)
                self.assertGreater(u.minus_identity().gauss_val(0), 0)
                self.assertEqual(newton_polygon_generic(b).slopes, sorted(d.valuations))

    def test_off_diagonal_negative_exponents_are_conjugated_away(self):
        profile = profile_for(p=3, N=2, h=2)
        ring = profile.ring
        d = DiagonalData([Coeff.one(ring), Coeff.from_int(ring, 3)])
        e = SeriesMatrix(profile, [
            [Series.zero(profile), Series.monomial(profile, 1, -1)],
            [Series.monomial(profile, 1, -2), Series.zero(profile)],
        ])
        b = d.matrix(profile) * (SeriesMatrix.identity(profile, 2) + e * Coeff.pi(ring))
        u, report = genspec_diagonalize(b, d)
        self.assertTrue(report.converged)
        self.assertTrue(report.residual.is_zero)
        self.assertNotEqual(u, SeriesMatrix.identity(profile, 2))
        self.assertGreater(u.minus_identity().gauss_val(0), 0)

    def test_results_do_not_depend_on_workers(self):
        instance = generate('prop4', seed=11, rank=3, delta=1, p=3, N=2, h=2)
        b = instance.get('B')
        d = DiagonalData.from_matrix(instance.get('D'))
        u1, _ = genspec_diagonalize(b, d, workers=1)
        u4, _ = genspec_diagonalize(b, d, workers=4)
        self.assertEqual(u1, u4)

    def test_precondition_checked(self):
        profile = profile_for()
        ring = profile.ring
        d = DiagonalData([Coeff.one(ring), Coeff.one(ring)])
        b = SeriesMatrix.diag(profile, [Coeff.from_int(ring, 2), Coeff.one(ring)])
        with self.assertRaises(InvalidInput):
            genspec_diagonalize(b, d)

    def test_diagonal_data(self):
        profile = profile_for()
        ring = profile.ring
        d = DiagonalData([Coeff.one(ring), Coeff.from_int(ring, 4)])
        self.assertEqual(d.delta, Fraction(2))
        self.assertEqual(DiagonalData.from_matrix(d.matrix(profile)).valuations, [Fraction(0), Fraction(2)])


if __name__ == '__main__':
    unittest.main()
