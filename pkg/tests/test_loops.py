"""Tests for the loop axioms, Moufang identities and modified products."""
import numpy as np
import pytest

from loopforge.services import numerics
from loopforge.services.algebra import AlgebraTag, get_algebra
from loopforge.services.loops import (
    LoopContext,
    adq_companion_check,
    identity_suite,
    loop_associator,
    nucleus_basis,
)
from loopforge.services.numerics import ScalarMode


class TestIdentitySuite:
    """The exact suite passes on genuine tables and catches a corrupted one."""

    @pytest.mark.parametrize("tag", ["C", "H", "O"])
    def test_exact_suite_passes(self, tag, rng):
        ctx = LoopContext(get_algebra(AlgebraTag(tag), ScalarMode.EXACT))
        entries = identity_suite(ctx, rng, samples=40)
        failed = [e.identity for e in entries if not e.passed]
        assert failed == []
        assert all(e.residual == 0 for e in entries)

    def test_float_unit_loop_passes(self, rng):
        ctx = LoopContext(get_algebra(AlgebraTag.O, ScalarMode.FLOAT), unit=True)
        entries = identity_suite(ctx, rng, samples=40)
        assert all(e.passed for e in entries)
        assert ctx.tolerance > 0

    def test_corrupted_table_names_failing_identity(self, broken_octonions, rng):
        entries = identity_suite(LoopContext(broken_octonions), rng, samples=40)
        failed = {e.identity for e in entries if not e.passed}
        assert "left-alternative" in failed
        assert "left-bol" in failed

    def test_entries_carry_suite_and_samples(self, exact_octonions, rng):
        entries = identity_suite(LoopContext(exact_octonions), rng, samples=5)
        assert {e.suite for e in entries} == {"loop"}
        assert all(e.samples == 5 for e in entries)


class TestNucleus:
    """Right nucleus directions."""

    def test_octonion_nucleus_is_real_axis(self, exact_octonions):
        basis = nucleus_basis(exact_octonions)
        assert basis.shape == (1, 8)
        assert basis[0, 0] != 0
        assert all(v == 0 for v in basis[0, 1:])

    def test_associative_nucleus_is_everything(self, exact_quaternions):
        assert nucleus_basis(exact_quaternions).shape == (4, 4)

    def test_minus_one_associates(self, exact_octonions, rng):
        ctx = LoopContext(exact_octonions)
        p, q = exact_octonions.random(rng, 10), exact_octonions.random(rng, 10)
        minus_one = -exact_octonions.one()
        assoc = loop_associator(ctx, p, q, np.broadcast_to(minus_one, p.shape))
        assert numerics.max_abs(assoc - exact_octonions.one()) == 0


class TestMoufangCompanion:
    """Conjugation by q is a right pseudoautomorphism with companion q^3."""

    def test_conjugation_companion_cube(self, exact_octonions, rng):
        ctx = LoopContext(exact_octonions)
        entry = adq_companion_check(ctx, exact_octonions.random(rng), rng, samples=30)
        assert entry.identity == "conjugation-companion-cube"
        assert entry.passed
        assert entry.residual == 0

    def test_companion_fails_without_cube(self, exact_octonions, rng):
        """Using q itself as companion breaks the identity when q^2 is not real."""
        alg = exact_octonions
        q = alg.coerce([1, 1, 2, 0, 1, 0, 0, 3])
        qi = alg.inverse(q)
        x, y = alg.random(rng, 10), alg.random(rng, 10)

        def ad(v):
            return alg.mul(alg.mul(q, v), qi)

        lhs = alg.mul(ad(alg.mul(x, y)), q)
        rhs = alg.mul(ad(x), alg.mul(ad(y), q))
        assert numerics.max_abs(lhs - rhs) > 0
