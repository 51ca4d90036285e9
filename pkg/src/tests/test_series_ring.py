import random
import unittest
from fractions import Fraction

from src.errors import InvalidInput, NotInvertible, ProfileViolation, SpecMismatch
from src.rings.coeff_ring import Coeff, make_spec
from src.rings.series_ring import INF, PrecisionProfile, Series, format_series, series_arith, series_invert


def profile_for(p=2, d=1, e=1, N=8, h=0, window=(-8, 8)):
    return PrecisionProfile(make_spec(p, d, e, N), h, window[0], window[1])


class TestSeriesArithmetic(unittest.TestCase):
    def setUp(self):
        self.profile = profile_for()

    def test_product_of_binomials(self):
        x = Series.from_values(self.profile, {0: 1, 1: 1})
        y = Series.from_values(self.profile, {0: 1, 1: -1})
        self.assertEqual(x * y, Series.from_values(self.profile, {0: 1, 2: -1}))

    def test_window_overflow_sets_flag(self):
        product = Series.monomial(self.profile, 1, 8) * Series.monomial(self.profile, 1, 1)
        self.assertTrue(product.is_zero)
        self.assertTrue(product.truncated)

    def test_square_vanishes_modulo_precision(self):
        profile = profile_for(N=2)
        x = Series.from_values(profile, {0: 1, 1: 2})
        self.assertEqual(x * x, Series.one(profile))

    def test_inadmissible_exponent_raises(self):
        with self.assertRaises(ProfileViolation):
            Series.monomial(self.profile, 1, Fraction(1, 2))

    def test_mismatched_profiles_raise(self):
        other = profile_for(p=3)
        with self.assertRaises(SpecMismatch):
            Series.one(self.profile) + Series.one(other)

    def test_series_arith_dispatch(self):
        x = Series.from_values(self.profile, {-1: 1, 0: 3})
        y = Series.monomial(self.profile, 1, 1)
        self.assertEqual(series_arith(x, y, 'add'), x + y)
        self.assertEqual(series_arith(x, y, 'sub'), Series.from_values(self.profile, {-1: 1, 0: 3, 1: -1}))
        self.assertEqual(series_arith(x, y, 'mul'), Series.from_values(self.profile, {0: 1, 1: 3}))
        with self.assertRaises(InvalidInput):
            series_arith(x, y, 'div')

    def test_format_series(self):
        x = Series.from_values(self.profile, {-1: 3, 2: 2})
        self.assertEqual(format_series(x), "3*t^(-1) + pi^1*1*t^(2)")


class TestInversion(unittest.TestCase):
    def setUp(self):
        self.profile = profile_for()

    def test_inverse_of_one(self):
        self.assertEqual(series_invert(Series.one(self.profile)), Series.one(self.profile))

    def test_geometric_series(self):
        inverse = series_invert(Series.from_values(self.profile, {0: 1, 1: -1}))
        self.assertEqual(inverse, Series.from_values(self.profile, {k: 1 for k in range(9)}))
        self.assertTrue(inverse.truncated)

    def test_multiply_back(self):
        profile = profile_for(N=3)
        x = Series.from_values(profile, {0: 3, 1: 2})
        self.assertEqual(x * series_invert(x), Series.one(profile))

    def test_zero_is_not_invertible(self):
        with self.assertRaises(NotInvertible):
            series_invert(Series.zero(self.profile))

    def test_leading_term_at_negative_exponent(self):
        profile = profile_for(p=3)
        x = Series.from_values(profile, {-1: 1, 1: 1})
        inverse = series_invert(x)
        self.assertEqual(inverse, Series.from_values(profile, {1: 1, 3: -1, 5: 1, 7: -1}))
        self.assertTrue(inverse.truncated)

    def test_symmetric_laurent_polynomial(self):
        profile = profile_for(p=3)
        x = Series.from_values(profile, {-2: 1, 0: 3, 2: 1})
        inverse = series_invert(x)
        self.assertEqual(min(inverse.exponents()), 2)
        residual = x * inverse - Series.one(profile)
        self.assertTrue(all(i > 6 for i in residual.exponents()))

    def test_random_inverses_multiply_back_inside_the_window(self):
        profile = profile_for(p=3, N=4)
        ring = profile.ring
        rng = random.Random(11)
        for _ in range(25):
            lead = rng.randrange(-2, 1)
            values = {lead: Coeff.from_int(ring, rng.choice([1, 2, 4, 5, 7, 8]))}
            for step in range(1, 4):
                values[lead + step] = Coeff.from_int(ring, rng.randrange(81))
            values[lead - 1] = Coeff.from_int(ring, 3 * rng.randrange(27))
            x = Series(profile, values)
            a, b = min(x.exponents()), max(x.exponents())
            residual = x * series_invert(x) - Series.one(profile)
            for i in residual.exponents():
                self.assertFalse(profile.e_min + b <= i <= profile.e_max + a, f"residual term at t^{i}")


class TestFrobeniusAndDerivation(unittest.TestCase):
    def test_frobenius_of_t(self):
        profile = profile_for(p=3)
        self.assertEqual(Series.monomial(profile, 1, 1).frobenius(), Series.monomial(profile, 1, 3))

    def test_frobenius_of_negative_term(self):
        profile = profile_for(p=3, d=2, N=3)
        c = Coeff.from_digits(profile.ring, [1, 2])
        x = Series.monomial(profile, c, -1)
        self.assertEqual(x.frobenius(), Series.monomial(profile, c.frobenius(), -3))

    def test_inverse_frobenius_of_t(self):
        profile = profile_for()
        y = Series.monomial(profile, 1, 1).inverse_frobenius()
        self.assertEqual(y.profile.h, 1)
        self.assertEqual(y.exponents(), [Fraction(1, 2)])
        self.assertEqual(y.frobenius(), Series.monomial(profile, 1, 1))

    def test_inverse_frobenius_on_coefficients(self):
        profile = profile_for(d=2, N=1)
        omega = Coeff.from_digits(profile.ring, [0, 1])
        y = Series.monomial(profile, omega, 1).inverse_frobenius()
        field = profile.ring.field
        self.assertEqual(y.coefficient(Fraction(1, 2)).reduce(), field.mul((0, 1), (0, 1)))

    def test_derivation_examples(self):
        profile = profile_for()
        t = Series.monomial(profile, 1, 1)
        self.assertEqual(t.derivation(), t)
        self.assertTrue(Series.constant(profile, 5).derivation().is_zero)
        x = Series.from_values(profile, {2: 1, 3: 1})
        self.assertEqual(x.derivation(), Series.from_values(profile, {2: 2, 3: 3}))

    def test_derivation_flags_precision_loss(self):
        profile = profile_for(h=1)
        x = Series.monomial(profile, 1, Fraction(1, 2))
        self.assertTrue(x.derivation().precision_loss)

    def test_leibniz_rule(self):
        profile = profile_for(p=3, N=5)
        x = Series.from_values(profile, {-2: 4, 1: 7})
        y = Series.from_values(profile, {0: 2, 3: 5})
        self.assertEqual((x * y).derivation(), x.derivation() * y + x * y.derivation())

    def test_derivation_commutes_with_frobenius_up_to_p(self):
        profile = profile_for(p=2, N=6)
        x = Series.from_values(profile, {-1: 3, 2: 5})
        p = Coeff.from_int(profile.ring, 2)
        self.assertEqual(x.frobenius().derivation(), x.derivation().frobenius() * p)


class TestValuations(unittest.TestCase):
    def setUp(self):
        self.profile = profile_for()

    def test_gauss_val_examples(self):
        r = Fraction(1, 3)
        self.assertEqual(Series.monomial(self.profile, 1, 1).gauss_val(r), r)
        self.assertEqual(Series.monomial(self.profile, 2, -1).gauss_val(r), 1 - r)
        self.assertEqual(Series.from_values(self.profile, {0: 2, 1: 1}).gauss_val(Fraction(1, 2)), Fraction(1, 2))
        self.assertEqual(Series.zero(self.profile).gauss_val(1), INF)

    def test_gauss_val_of_product(self):
        x = Series.from_values(self.profile, {-1: 2, 2: 1})
        y = Series.from_values(self.profile, {1: 4, 3: 3})
        for r in (Fraction(0), Fraction(1, 2), Fraction(2)):
            self.assertEqual((x * y).gauss_val(r), x.gauss_val(r) + y.gauss_val(r))

    def test_semiunit(self):
        t = Series.monomial(self.profile, 1, 1)
        p_plus_t = Series.from_values(self.profile, {0: 2, 1: 1})
        self.assertTrue(t.is_semiunit(Fraction(1, 5)))
        self.assertFalse(p_plus_t.is_semiunit(1))
        self.assertTrue(p_plus_t.is_semiunit(Fraction(1, 2)))

    def test_semiunit_witness(self):
        x = Series.from_values(self.profile, {0: 2, 1: 1})
        r = Fraction(1, 2)
        lead = x.dominant_terms(r)[0]
        rest = x - Series.monomial(self.profile, x.coefficient(lead), lead)
        self.assertGreater(rest.gauss_val(r), x.gauss_val(r))

    def test_in_gamma_r(self):
        x = Series.monomial(self.profile, 2, -2)
        self.assertTrue(x.in_gamma_r(Fraction(1, 2)))
        self.assertFalse(x.in_gamma_r(Fraction(3, 4)))
        self.assertFalse(Series.monomial(self.profile, 1, -1).in_gamma_r(Fraction(1, 10)))
        y = Series.from_values(self.profile, {0: 1, -1: 2, -2: 8})
        self.assertTrue(y.in_gamma_r(1))


if __name__ == '__main__':
    unittest.main()
