import random
import unittest
from fractions import Fraction

from src.errors import DivisionByZeroPrecision, InvalidInput, NotIntegral, SpecMismatch
from src.rings.coeff_ring import (AtLeast, Coeff, default_defining_polynomial, embed_coeff,
                                  embed_extension, format_coeff, make_spec)


class TestCoeffArithmetic(unittest.TestCase):
    def test_addition_wraps_modulo_precision(self):
        spec = make_spec(5, N=2)
        self.assertEqual(Coeff.from_int(spec, 23) + Coeff.from_int(spec, 4), Coeff.from_int(spec, 2))

    def test_inverse_of_three_mod_eight(self):
        spec = make_spec(2, N=3)
        self.assertEqual(Coeff.from_int(spec, 3).inverse(), Coeff.from_int(spec, 3))

    def test_uniformizer_squared_is_p_when_ramified(self):
        spec = make_spec(2, e=2, N=4)
        pi = Coeff.pi(spec)
        self.assertEqual(pi * pi, Coeff.from_int(spec, 2))

    def test_negative_powers(self):
        spec = make_spec(3, N=4)
        two = Coeff.from_int(spec, 2)
        self.assertEqual(two ** -2 * Coeff.from_int(spec, 4), Coeff.one(spec))

    def test_fraction_with_p_in_denominator(self):
        spec = make_spec(2, N=4)
        half = Coeff.from_fraction(spec, Fraction(1, 2))
        self.assertEqual(half.valuation(), Fraction(-1))
        self.assertEqual(half * Coeff.from_int(spec, 2), Coeff.one(spec))

    def test_inverse_of_zero_raises(self):
        spec = make_spec(2)
        with self.assertRaises(DivisionByZeroPrecision):
            Coeff.zero(spec).inverse()

    def test_mixed_rings_raise(self):
        with self.assertRaises(SpecMismatch):
            Coeff.one(make_spec(2)) + Coeff.one(make_spec(3))

    def test_truncate(self):
        spec = make_spec(2, N=3)
        self.assertEqual(Coeff.from_int(spec, 7).truncate(2), Coeff.from_int(spec, 3))
        self.assertTrue(Coeff.from_int(spec, 4).truncate(2).is_zero)

    def test_cancellation_keeps_absolute_precision(self):
        spec = make_spec(3, N=3)
        total = Coeff.from_int(spec, 1) + Coeff.from_int(spec, 8)
        self.assertEqual(total.valuation(), Fraction(2))
        self.assertEqual(total.absolute_precision, 3)
        self.assertEqual(total, Coeff.from_int(spec, 36))
        self.assertNotEqual(total, Coeff.from_int(spec, 18))

    def test_products_and_inverses_track_precision(self):
        spec = make_spec(2, N=4)
        small = Coeff.from_int(spec, 3) - Coeff.from_int(spec, 1)
        self.assertEqual(small.absolute_precision, 4)
        self.assertEqual((small * Coeff.from_int(spec, 4)).absolute_precision, 6)
        self.assertEqual(small.inverse().absolute_precision, 2)
        self.assertEqual(small.inverse() * small, Coeff.one(spec))


class TestValuation(unittest.TestCase):
    def test_valuation_of_p(self):
        spec = make_spec(3)
        self.assertEqual(Coeff.from_int(spec, 3).valuation(), Fraction(1))

    def test_valuation_of_uniformizer(self):
        spec = make_spec(2, e=2)
        self.assertEqual(Coeff.pi(spec).valuation(), Fraction(1, 2))

    def test_zero_reports_precision_floor(self):
        spec = make_spec(2, N=4)
        value = Coeff.zero(spec).valuation()
        self.assertEqual(value, AtLeast(Fraction(4)))
        self.assertEqual(str(value), ">=4")

    def test_valuation_is_additive(self):
        spec = make_spec(3, N=6)
        a, b = Coeff.from_int(spec, 9), Coeff.from_int(spec, 6)
        self.assertEqual((a * b).valuation(), a.valuation() + b.valuation())


class TestFrobenius(unittest.TestCase):
    def test_prime_field_is_fixed(self):
        spec = make_spec(5, N=3)
        for n in range(1, 30):
            c = Coeff.from_int(spec, n)
            self.assertEqual(c.frobenius(), c)

    def test_residue_frobenius_squares(self):
        spec = make_spec(2, d=2, N=1)
        omega = Coeff.from_digits(spec, [0, 1])
        field = spec.field
        self.assertEqual(omega.frobenius().reduce(), field.mul((0, 1), (0, 1)))

    def test_teichmuller_lift_is_fixed_by_sigma_squared(self):
        spec = make_spec(2, d=2, N=3)
        tau = Coeff.teichmuller(spec, (0, 1))
        self.assertEqual(tau.frobenius().frobenius(), tau)
        self.assertEqual(tau.frobenius(), tau ** 2)

    def test_inverse_power(self):
        spec = make_spec(3, d=2, N=3)
        c = Coeff.from_digits(spec, [4, 7])
        self.assertEqual(c.frobenius().frobenius(-1), c)

    def test_frobenius_is_multiplicative(self):
        spec = make_spec(3, d=2, N=3)
        a, b = Coeff.from_digits(spec, [1, 2]), Coeff.from_digits(spec, [5, 4])
        self.assertEqual((a * b).frobenius(), a.frobenius() * b.frobenius())
        self.assertEqual((a + b).frobenius(), a.frobenius() + b.frobenius())

    def test_frobenius_is_additive_through_cancellation(self):
        spec = make_spec(3, d=2, N=3)
        rng = random.Random(7)
        for _ in range(40):
            a = Coeff.from_digits(spec, [rng.randrange(27), rng.randrange(27)])
            b = -a + Coeff.from_digits(spec, [rng.randrange(27), rng.randrange(27)], rng.randrange(3))
            self.assertEqual((a + b).frobenius(), a.frobenius() + b.frobenius())
            self.assertEqual((a * b).frobenius(), a.frobenius() * b.frobenius())


class TestResidueAndLift(unittest.TestCase):
    def test_reduce_p_is_zero(self):
        spec = make_spec(5)
        self.assertEqual(Coeff.from_int(spec, 5).reduce(), spec.field.zero)

    def test_lift_one(self):
        spec = make_spec(3)
        self.assertEqual(Coeff.teichmuller(spec, (1,)), Coeff.one(spec))

    def test_lift_of_two_mod_three(self):
        spec = make_spec(3, N=2)
        self.assertEqual(Coeff.teichmuller(spec, (2,)), Coeff.from_int(spec, 8))

    def test_reduce_after_lift_is_identity(self):
        spec = make_spec(3, d=2, N=3)
        for element in spec.field.elements():
            self.assertEqual(Coeff.teichmuller(spec, element).reduce(), element)

    def test_reduce_negative_valuation_raises(self):
        spec = make_spec(2)
        with self.assertRaises(NotIntegral):
            Coeff.from_fraction(spec, Fraction(1, 2)).reduce()


class TestRingSpec(unittest.TestCase):
    def test_non_prime_rejected(self):
        with self.assertRaises(InvalidInput):
            make_spec(4)

    def test_reducible_phi_rejected(self):
        with self.assertRaises(InvalidInput):
            make_spec(2, d=2, phi=[1, 0])

    def test_default_defining_polynomial(self):
        self.assertEqual(default_defining_polynomial(2, 2), (1, 1))
        self.assertEqual(default_defining_polynomial(3, 1), (0,))

    def test_format_coeff(self):
        spec = make_spec(2, d=2, N=4)
        self.assertEqual(format_coeff(Coeff.from_digits(spec, [3, 1], 2)), "pi^2*(3+1*w)")

    def test_embed_extension_keeps_integers(self):
        spec = make_spec(2, N=4)
        big, image = embed_extension(spec, 2)
        self.assertEqual(big.d, 2)
        self.assertEqual(embed_coeff(Coeff.from_int(spec, 3), big, image), Coeff.from_int(big, 3))

    def test_embed_extension_respects_products(self):
        spec = make_spec(2, d=2, N=3)
        big, image = embed_extension(spec, 2)
        a, b = Coeff.from_digits(spec, [1, 1]), Coeff.from_digits(spec, [0, 3])
        self.assertEqual(embed_coeff(a * b, big, image), embed_coeff(a, big, image) * embed_coeff(b, big, image))


if __name__ == '__main__':
    unittest.main()
