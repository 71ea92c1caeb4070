"""Tests for phi_s, its adjoint and the phi-bracket."""
import numpy as np
import pytest

from loopforge.constants import OCTONION_K, OCTONION_KERNEL_DIM, OCTONION_LAMBDA, TOL_ALGEBRAIC
from loopforge.services.algebra import AlgebraTag
from loopforge.services.phi_maps import (
    PhiMap,
    annihilators,
    fit_k,
    inclusion_residual,
    lambda_compute,
    omega_hat_norm,
    phi_at,
    phi_bracket_fit,
    phi_fd,
    phi_suite,
)
from loopforge.services.pseudoauto import get_palgebra
from loopforge.services.tangent import BracketContext


class TestOctonionConstants:
    """phi_1 on the unit octonions."""

    @pytest.fixture
    def phi_one(self, palg_o):
        return PhiMap(palg_o, palg_o.algebra.one())

    def test_lambda(self, phi_one):
        assert lambda_compute(phi_one) == pytest.approx(OCTONION_LAMBDA, abs=1e-10)

    def test_k_constant(self, phi_one):
        k, residual = fit_k(phi_one)
        assert k == pytest.approx(OCTONION_K, abs=1e-12)
        assert residual < 1e-12

    def test_kernel_is_g2(self, phi_one):
        assert phi_one.rank() == 7
        assert phi_one.kernel().shape[0] == OCTONION_KERNEL_DIM

    def test_omega_hat_norm(self, phi_one):
        assert omega_hat_norm(phi_one) == pytest.approx(7 * OCTONION_LAMBDA, abs=1e-10)

    def test_phi_bracket_proportional(self, phi_one, palg_o):
        ctx = BracketContext(palg_o.algebra, palg_o.algebra.one())
        kappa, residual = phi_bracket_fit(phi_one, ctx)
        assert kappa == pytest.approx(3 * OCTONION_K ** 3, abs=1e-10)
        assert residual < 1e-10


class TestBasePoints:
    """phi_s away from the unit."""

    def test_lambda_independent_of_base(self, palg_o, rng):
        for s in palg_o.algebra.random(rng, 3, unit=True):
            assert lambda_compute(PhiMap(palg_o, s)) == pytest.approx(OCTONION_LAMBDA, abs=1e-10)

    def test_finite_difference(self, palg_o, rng):
        s = palg_o.algebra.random(rng, unit=True)
        x = palg_o.random(rng)
        assert np.allclose(phi_fd(palg_o, s, x), phi_at(palg_o, s, x), atol=1e-9)

    def test_annihilator_chain(self, palg_o, rng):
        s = palg_o.algebra.random(rng, unit=True)
        spaces = annihilators(PhiMap(palg_o, s), BracketContext(palg_o.algebra, s))
        assert spaces["kernel"].shape[0] <= spaces["ann_phi"].shape[0] <= spaces["ann_b"].shape[0]
        assert inclusion_residual(spaces) < 1e-8

    @pytest.mark.parametrize("tag, space, dimension", [
        ("O", "kernel", 14),
        ("O", "ann_phi", 14),
        ("O", "ann_b", 14),
        ("H", "ann_phi", 10),
        ("C", "kernel", 3),
    ])
    def test_annihilator_dimensions(self, rng, tag, space, dimension):
        """g2 for the octonions, sp(2) for the quaternions, su(2) for the complex numbers."""
        palg = get_palgebra(AlgebraTag(tag))
        s = palg.algebra.random(rng, unit=True)
        spaces = annihilators(PhiMap(palg, s), BracketContext(palg.algebra, s))
        assert spaces[space].shape[0] == dimension

    def test_complex_phi_ignores_base(self, palg_c, rng):
        alg = palg_c.algebra
        phi1 = PhiMap(palg_c, alg.one()).matrix
        s = alg.random(rng, unit=True)
        assert np.allclose(PhiMap(palg_c, s).matrix, phi1, atol=1e-12)


class TestSuite:
    """The registered phi suite."""

    def test_suite_passes(self, palg, rng):
        entries = phi_suite(palg, rng, samples=3)
        assert [e.identity for e in entries if not e.passed] == []
        assert any(e.identity == "phi-lambda" for e in entries)

    def test_dimension_gates_are_checked(self, palg_h, rng):
        entries = {e.identity: e for e in phi_suite(palg_h, rng, samples=3)}
        assert not entries["phi-ann-phi-dimension"].report_only
        assert entries["phi-ann-phi-dimension"].passed
        assert entries["phi-kernel-dimension"].report_only

    def test_bracket_proportionality_gate(self, palg_o, rng):
        entry = next(e for e in phi_suite(palg_o, rng, samples=3) if e.identity == "phi-bracket-proportional")
        assert entry.tolerance == TOL_ALGEBRAIC
        assert entry.passed
