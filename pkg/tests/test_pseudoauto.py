"""Tests for pseudoautomorphism pairs, companions and the Lie algebra p."""
import numpy as np
import pytest

from loopforge.errors import InvalidLieElementError
from loopforge.services import numerics
from loopforge.services.algebra import AlgebraTag, get_algebra
from loopforge.services.numerics import ScalarMode
from loopforge.services.pseudoauto import (
    GroupTag,
    PseudoPair,
    companion_transport,
    companions_of,
    compatibility_residual,
    get_palgebra,
    group_element,
    identity_pair,
    moufang_pair,
    pair_compose,
    pair_inverse,
    pair_residual,
    pairs_equal,
    pseudoauto_suite,
    spin_lift,
    validate_pair,
)


class TestPairs:
    """The group of right pseudoautomorphism pairs."""

    def test_moufang_pair_is_exact(self, exact_octonions, rng):
        pair = moufang_pair(exact_octonions, exact_octonions.random(rng))
        assert pair_residual(exact_octonions, pair) == 0
        assert validate_pair(exact_octonions, pair) is pair

    def test_inverse_and_identity(self, exact_octonions, rng):
        h = moufang_pair(exact_octonions, exact_octonions.random(rng))
        ident = identity_pair(exact_octonions)
        assert pairs_equal(exact_octonions, pair_compose(exact_octonions, h, pair_inverse(exact_octonions, h)),
                           ident) == 0

    def test_composition_of_pairs_is_a_pair(self, exact_octonions, rng):
        a, b = (moufang_pair(exact_octonions, q) for q in exact_octonions.random(rng, 2))
        composed = pair_compose(exact_octonions, a, b, check=False)
        assert pair_residual(exact_octonions, composed) == 0

    def test_wrong_companion_rejected(self, exact_octonions):
        h = moufang_pair(exact_octonions, exact_octonions.coerce([1, 1, 2, 0, 1, 0, 0, 3]))
        broken = PseudoPair(h.alpha, exact_octonions.one())
        with pytest.raises(InvalidLieElementError):
            validate_pair(exact_octonions, broken)


class TestCompanions:
    """Solving for the companions of a given map."""

    def test_identity_companions_are_nucleus(self, exact_octonions, exact_quaternions):
        line = companions_of(exact_octonions, np.eye(8, dtype=int))
        assert line.shape == (1, 8)
        assert all(v == 0 for v in line[0, 1:])
        assert companions_of(exact_quaternions, np.eye(4, dtype=int)).shape == (4, 4)

    def test_conjugation_companions_contain_cube(self, exact_octonions):
        q = exact_octonions.coerce([1, 1, 2, 0, 1, 0, 0, 3])
        pair = moufang_pair(exact_octonions, q)
        basis = companions_of(exact_octonions, pair.alpha)
        assert basis.shape[0] == 1
        stacked = np.vstack([basis, pair.companion[None]])
        assert numerics.rank(stacked) == 1

    def test_reflection_has_no_companion(self, exact_octonions):
        """Orientation-reversing maps of Im O are not pseudoautomorphisms."""
        alpha = np.diag([1, -1, 1, 1, 1, 1, 1, 1])
        assert companions_of(exact_octonions, alpha).shape[0] == 0

    def test_transport_moves_companions(self, float_octonions, rng):
        a, b = float_octonions.random(rng, 2, unit=True)
        pair = companion_transport(float_octonions, a, b)
        assert np.allclose(pair.full(float_octonions, a), b, atol=1e-10)


class TestLieAlgebra:
    """Spin lifts and the Lie algebra data for each algebra."""

    @pytest.mark.parametrize("tag,group,dim", [("O", GroupTag.SO7, 21),
                                               ("H", GroupTag.SP2_SP1, 13),
                                               ("C", GroupTag.U2, 4)])
    def test_groups(self, tag, group, dim):
        palg = get_palgebra(AlgebraTag(tag))
        assert palg.group == group
        assert palg.dim == dim

    def test_spin_lift_is_compatible(self, palg_o, rng):
        x = palg_o.random(rng)
        assert compatibility_residual(palg_o, x) < 1e-10
        g = palg_o.full_of(x)
        assert np.allclose(g, -g.T, atol=1e-12)

    def test_spin_lift_rejects_symmetric_input(self, float_octonions):
        with pytest.raises(InvalidLieElementError):
            spin_lift(float_octonions, np.eye(7))

    def test_group_element_gives_valid_pair(self, palg_o, rng):
        element = group_element(palg_o, palg_o.random(rng, scale=0.5))
        pair = element.pair()
        assert pair_residual(palg_o.algebra, pair) < 1e-10
        assert companions_of(palg_o.algebra, pair.alpha).shape[0] == 1

    def test_structure_constants_antisymmetric(self, palg):
        assert np.allclose(palg.structure, -np.swapaxes(palg.structure, 0, 1))


class TestSuite:
    """The registered pseudoautomorphism suite."""

    @pytest.mark.parametrize("tag", ["C", "H", "O"])
    def test_suite_passes(self, tag, rng):
        palg = get_palgebra(AlgebraTag(tag))
        entries = pseudoauto_suite(palg, rng, samples=3, exact=get_algebra(AlgebraTag(tag), ScalarMode.EXACT))
        assert [e.identity for e in entries if not e.passed] == []
        names = {e.identity for e in entries}
        assert "companions-of-identity" in names
        assert ("companion-transitivity" in names) == (tag == "O")
