"""Tests for the Darboux-derivative calculus on loop-valued maps."""
import numpy as np
import pytest

from loopforge.constants import TOL_FIELD, TOL_GAUGE
from loopforge.services.calculus import (
    LoopCalculus,
    adjoint_curve,
    bracket_rule,
    calculus_suite,
    cartan_condition,
    potential_projection,
    product_rule,
    psi_valued_darboux,
    quotient_curve,
    quotient_rule,
    relative_darboux,
    relative_maurer_cartan,
    uniqueness,
)
from loopforge.services.fields import TorusDomain, TrigField, random_loop_field


@pytest.fixture
def pts(rng, torus):
    return torus.sample_points(rng, 16)


@pytest.fixture
def jets(float_octonions, rng, pts):
    """Section s (second order), map f (second order), and two first-order maps."""
    alg = float_octonions
    fields = [random_loop_field(rng, alg, 3) for _ in range(4)]
    s = fields[0].jet(alg, pts, order=2)
    f = fields[1].jet(alg, pts, order=2)
    a = fields[2].jet(alg, pts, order=1)
    b = fields[3].jet(alg, pts, order=1)
    return s, f, a, b


class TestModifiedProducts:
    """Product, quotient and bracket rules at a varying base point."""

    def test_product_rule(self, float_octonions, jets):
        s, _, a, b = jets
        assert product_rule(float_octonions, a, b, s) < TOL_FIELD

    def test_quotient_rule(self, float_octonions, jets):
        s, _, a, b = jets
        assert quotient_rule(float_octonions, a, b, s) < TOL_FIELD

    def test_bracket_rule(self, float_octonions, jets, rng, pts):
        s = jets[0]
        xi = TrigField.random(rng, 3, 7).jet(pts, order=1)
        eta = TrigField.random(rng, 3, 7).jet(pts, order=1)
        assert bracket_rule(float_octonions, xi, eta, s) < TOL_FIELD

    def test_product_at_unit_base(self, float_octonions, rng):
        """With s = 1 the modified product is the algebra product."""
        calc = LoopCalculus(float_octonions, np.broadcast_to(float_octonions.one(), (5, 8)))
        x, y = float_octonions.random(rng, 5), float_octonions.random(rng, 5)
        assert np.allclose(calc.prod(x, y), float_octonions.mul(x, y))


class TestDarboux:
    """Relative Darboux derivatives and their structure equations."""

    def test_relative_darboux(self, float_octonions, jets):
        s, f, _, _ = jets
        assert relative_darboux(float_octonions, f, s) < TOL_FIELD

    def test_relative_maurer_cartan(self, float_octonions, jets):
        s, f, _, _ = jets
        assert relative_maurer_cartan(float_octonions, f, s) < TOL_FIELD

    def test_uniqueness(self, float_octonions, rng, pts):
        b_field = random_loop_field(rng, float_octonions, 3)
        c = float_octonions.random(rng, unit=True)
        assert uniqueness(float_octonions, b_field, c, pts) < TOL_FIELD

    def test_curves(self, float_octonions, jets, rng):
        s, f, a, b = jets
        assert quotient_curve(float_octonions, a, b) < TOL_FIELD
        xi = rng.standard_normal(7)
        assert adjoint_curve(float_octonions, f, float_octonions.random(rng, unit=True), xi) < TOL_FIELD

    def test_psi_valued_darboux(self, palg_o, rng, pts, single_thread):
        s_field = random_loop_field(rng, palg_o.algebra, 3)
        x_field = TrigField.random(rng, 3, palg_o.dim)
        assert psi_valued_darboux(palg_o, s_field, x_field, pts[:4]) < TOL_GAUGE

    def test_cartan_condition(self, float_octonions, jets, rng, pts):
        """Zero at alpha = theta_s; a generic imaginary form on T^3 breaks it."""
        s = jets[0]
        theta = float_octonions.rdiv(s.grad, s.value[:, None])
        assert cartan_condition(float_octonions, s, theta) < TOL_FIELD
        generic = TrigField.random(rng, 3, 7).jet(pts, order=1).grad
        alpha = np.concatenate([np.zeros(generic.shape[:-1] + (1,)), generic], axis=-1)
        assert cartan_condition(float_octonions, s, alpha) > 1e-6

    def test_potential_projection(self, palg_o, rng, pts):
        s_field = random_loop_field(rng, palg_o.algebra, 3)
        projected, reproduced = potential_projection(palg_o, s_field, pts)
        assert projected < TOL_FIELD
        assert reproduced < TOL_FIELD


class TestSuite:

    @pytest.mark.parametrize("dimension", [2, 3])
    def test_suite_passes(self, palg, rng, dimension, single_thread):
        entries = calculus_suite(palg, rng, TorusDomain(dimension=dimension, grid=8), points=8)
        assert [e.identity for e in entries if not e.passed] == []
        assert len({e.identity for e in entries}) == len(entries)
