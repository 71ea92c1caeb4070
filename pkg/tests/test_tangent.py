"""Tests for loop exponentials, brackets and associators at a base point."""
import numpy as np
import pytest

from loopforge.constants import MIN_FD_ORDER, OCTONION_KILLING, TOL_FD_BRACKET
from loopforge.services import numerics
from loopforge.services.algebra import AlgebraTag, ClosedForms, get_algebra
from loopforge.services.numerics import ScalarMode
from loopforge.services.tangent import (
    BracketContext,
    akivis_residual,
    bracket_at,
    bracket_commutator,
    bracket_fd,
    exact_tangent_suite,
    exp_at,
    exp_closed,
    exp_ode,
    malcev_residual,
    mutated_forms,
    right_nucleus_report,
    tangent_suite,
)


class TestExponentials:
    """The closed form exponential against RK4 integration."""

    def test_closed_form_is_unit(self, float_octonions, rng):
        xi = rng.standard_normal((10, 7))
        assert np.allclose(float_octonions.norm2(exp_closed(float_octonions, xi)), 1.0)

    def test_zero_vector(self, float_octonions):
        assert np.allclose(exp_closed(float_octonions, np.zeros(7)), float_octonions.one())

    def test_ode_matches_closed_form(self, float_octonions, rng):
        xi = rng.standard_normal(7) * 0.8
        assert numerics.max_abs(exp_ode(float_octonions, xi) - exp_closed(float_octonions, xi)) < 1e-9

    def test_moufang_exp_at_base_point(self, float_octonions, rng):
        """In a Moufang loop exp_q agrees with exp for every base point q."""
        q = float_octonions.random(rng, unit=True)
        xi = rng.standard_normal(7) * 0.5
        y, yq = exp_at(float_octonions, q, xi)
        assert numerics.max_abs(y - exp_closed(float_octonions, xi)) < 1e-9
        assert numerics.max_abs(yq - float_octonions.mul(y, q)) < 1e-12


class TestBrackets:
    """Bracket and associator tables and their closed forms."""

    def test_bracket_at_unit_is_commutator(self, exact_octonions, rng):
        ctx = BracketContext(exact_octonions, exact_octonions.one())
        x, y = numerics.random_rational(rng, (2, 7))
        assert numerics.max_abs(ctx.bracket(x, y) - bracket_commutator(exact_octonions, x, y)) == 0

    def test_bracket_is_antisymmetric(self, float_octonions, rng):
        ctx = BracketContext(float_octonions, float_octonions.random(rng, unit=True))
        x, y = rng.standard_normal((2, 7))
        assert numerics.max_abs(ctx.bracket(x, y) + ctx.bracket(y, x)) < 1e-12

    def test_finite_difference_matches_transport(self, float_octonions, rng):
        s = float_octonions.random(rng, unit=True)
        xi, eta = rng.standard_normal((2, 7)) * 0.8
        value = bracket_at(float_octonions, s, xi, eta, check=True)
        fd = bracket_fd(float_octonions, s, xi, eta).value
        assert numerics.max_abs(value - fd) < TOL_FD_BRACKET

    def test_killing_form_at_unit(self, float_octonions):
        K = BracketContext(float_octonions, float_octonions.one()).killing()
        assert np.allclose(K, OCTONION_KILLING * np.eye(7), atol=1e-10)

    def test_quaternion_killing_form(self):
        alg = get_algebra(AlgebraTag.H, ScalarMode.FLOAT)
        K = BracketContext(alg, alg.one()).killing()
        assert np.allclose(K, -8.0 * np.eye(3), atol=1e-12)

    @pytest.mark.parametrize("tag", ["H", "O"])
    def test_killing_form_negative_definite_away_from_unit(self, rng, tag):
        alg = get_algebra(AlgebraTag(tag), ScalarMode.FLOAT)
        for s in alg.random(rng, 3, unit=True):
            K = BracketContext(alg, s).killing()
            assert np.max(np.linalg.eigvalsh(K)) < 0

    def test_finite_difference_order(self, float_octonions, rng):
        """Richardson extrapolated brackets converge at least at second order."""
        s = float_octonions.random(rng, unit=True)
        for xi, eta in rng.standard_normal((3, 2, 7)) * 0.8:
            assert bracket_fd(float_octonions, s, xi, eta).order >= MIN_FD_ORDER


class TestIdentities:
    """Akivis and Malcev identities in rational arithmetic."""

    def test_akivis_exact(self, exact_octonions, rng):
        ctx = BracketContext(exact_octonions, exact_octonions.one())
        for xi, eta, gamma in numerics.random_rational(rng, (5, 3, 7)):
            assert akivis_residual(ctx, xi, eta, gamma) == 0

    def test_malcev_exact(self, exact_octonions, rng):
        forms = ClosedForms(exact_octonions.tensors())
        for xi, eta, gamma in numerics.random_rational(rng, (10, 3, 7)):
            assert malcev_residual(forms, xi, eta, gamma) == 0

    def test_mutated_associator_breaks_malcev(self, exact_octonions, rng):
        forms = mutated_forms(exact_octonions.tensors())
        residuals = [malcev_residual(forms, *v) for v in numerics.random_rational(rng, (10, 3, 7))]
        assert max(residuals) > 0

    def test_octonion_nucleus_dimensions(self, float_octonions):
        report = right_nucleus_report(BracketContext(float_octonions, float_octonions.one()))
        assert report["tangent_nucleus_dim"] == 0
        assert report["lie_nucleus_dim"] == 0

    def test_quaternion_tangent_algebra_is_lie(self, exact_quaternions):
        report = right_nucleus_report(BracketContext(exact_quaternions, exact_quaternions.one()))
        assert report["lie_nucleus_dim"] == 3
        assert report["closure_residual"] == 0


class TestSuites:
    """Registered tangent suites."""

    def test_exact_suite_passes(self, exact_octonions, rng):
        entries = exact_tangent_suite(exact_octonions, rng, samples=10)
        assert all(e.passed for e in entries)
        assert {e.identity for e in entries} == {"malcev-identity", "akivis-identity-exact",
                                                 "closed-forms-at-unit"}

    @pytest.mark.slow
    def test_float_suite_passes(self, palg_o, rng):
        entries = tangent_suite(palg_o.algebra, rng, samples=5, palg=palg_o)
        failed = [e.identity for e in entries if not e.passed]
        assert failed == []
        gated = {e.identity for e in entries if not e.report_only}
        assert {"killing-negative-definite", "bracket-finite-difference-order"} <= gated
