"""Tests for the Cayley-Dickson composition algebras and their structure tensors."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings as hyp_settings
from hypothesis import strategies as st

from loopforge.errors import AlgebraError
from loopforge.services import numerics
from loopforge.services.algebra import (
    AlgebraTag,
    ClosedForms,
    embed,
    get_algebra,
    imag,
)
from loopforge.services.numerics import ScalarMode

OCTONIONS = get_algebra(AlgebraTag.O, ScalarMode.EXACT)

rationals = st.fractions(min_value=-9, max_value=9, max_denominator=9)


def octonion():
    return st.lists(rationals, min_size=8, max_size=8).map(lambda v: numerics.to_exact(np.array(v, dtype=object)))


class TestTables:
    """Multiplication tables and the 3-form convention."""

    def test_dimensions(self):
        assert [AlgebraTag(t).dim for t in "RCHO"] == [1, 2, 4, 8]

    @pytest.mark.parametrize("triple", [(1, 2, 3), (1, 4, 5), (1, 7, 6), (2, 4, 6),
                                        (2, 5, 7), (3, 4, 7), (3, 6, 5)])
    def test_fano_orientation(self, exact_octonions, triple):
        """phi is +1 on the seven oriented lines of the Fano plane."""
        a, b, c = (i - 1 for i in triple)
        assert exact_octonions.tensors().phi[a, b, c] == 1

    def test_phi_has_seven_lines(self, exact_octonions):
        phi = exact_octonions.tensors().phi
        assert int(np.count_nonzero(phi)) == 42

    def test_psi_is_antisymmetric_and_nonzero(self, exact_octonions):
        psi = exact_octonions.tensors().psi
        assert np.array_equal(psi, -np.swapaxes(psi, 0, 1))
        assert np.array_equal(psi, -np.swapaxes(psi, 2, 3))
        assert int(np.count_nonzero(psi)) == 7 * 24

    def test_quaternions_associative(self, exact_quaternions, rng):
        p, q, r = (exact_quaternions.random(rng, 20) for _ in range(3))
        assert numerics.max_abs(exact_quaternions.associator(p, q, r)) == 0

    def test_complex_commutative(self, rng):
        alg = get_algebra(AlgebraTag.C, ScalarMode.EXACT)
        p, q = alg.random(rng, 20), alg.random(rng, 20)
        assert numerics.max_abs(alg.commutator(p, q)) == 0

    def test_octonions_not_associative(self, exact_octonions):
        e = exact_octonions.basis()
        assert numerics.max_abs(exact_octonions.associator(e[1], e[2], e[4])) == 2

    def test_closed_form_bracket_is_commutator(self, exact_octonions):
        forms = ClosedForms(exact_octonions.tensors())
        e = np.eye(7, dtype=int)
        for a in range(7):
            for b in range(7):
                commutator = exact_octonions.commutator(embed(e[a]), embed(e[b]))
                assert np.array_equal(forms.bracket(e[a], e[b]), imag(commutator).astype(int))

    def test_corrupted_table_flips_one_product(self, exact_octonions, broken_octonions):
        e = exact_octonions.basis()
        assert np.array_equal(broken_octonions.mul(e[1], e[2]), -exact_octonions.mul(e[1], e[2]))
        assert broken_octonions.is_corrupted
        assert not exact_octonions.is_corrupted


class TestExactArithmetic:
    """Composition, alternativity and inverses hold exactly over the rationals."""

    @hyp_settings(max_examples=40, deadline=None)
    @given(octonion(), octonion())
    def test_norm_is_multiplicative(self, p, q):
        assert OCTONIONS.norm2(OCTONIONS.mul(p, q)) == OCTONIONS.norm2(p) * OCTONIONS.norm2(q)

    @hyp_settings(max_examples=40, deadline=None)
    @given(octonion(), octonion())
    def test_alternative_laws(self, p, q):
        mul = OCTONIONS.mul
        assert numerics.max_abs(mul(mul(p, p), q) - mul(p, mul(p, q))) == 0
        assert numerics.max_abs(mul(mul(q, p), p) - mul(q, mul(p, p))) == 0

    @hyp_settings(max_examples=40, deadline=None)
    @given(octonion(), octonion())
    def test_conjugation_reverses_products(self, p, q):
        lhs = OCTONIONS.conj(OCTONIONS.mul(p, q))
        rhs = OCTONIONS.mul(OCTONIONS.conj(q), OCTONIONS.conj(p))
        assert numerics.max_abs(lhs - rhs) == 0

    def test_inverse(self, exact_octonions, rng):
        p = exact_octonions.random(rng, 30)
        product = exact_octonions.mul(p, exact_octonions.inverse(p))
        one = np.broadcast_to(exact_octonions.one(), product.shape)
        assert numerics.max_abs(product - one) == 0

    def test_divisions(self, exact_octonions, rng):
        p, q = exact_octonions.random(rng, 10), exact_octonions.random(rng, 10)
        x = exact_octonions.ldiv(q, p)
        y = exact_octonions.rdiv(p, q)
        assert numerics.max_abs(exact_octonions.mul(q, x) - p) == 0
        assert numerics.max_abs(exact_octonions.mul(y, q) - p) == 0

    def test_zero_has_no_inverse(self, exact_octonions):
        with pytest.raises(AlgebraError):
            exact_octonions.inverse(numerics.zeros((8,), ScalarMode.EXACT))
